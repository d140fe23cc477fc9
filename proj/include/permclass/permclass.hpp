#pragma once

#include "permclass/analytic.hpp"
#include "permclass/class_spec.hpp"
#include "permclass/decomposition.hpp"
#include "permclass/harness.hpp"
#include "permclass/permutation.hpp"
#include "permclass/plane_tree.hpp"
#include "permclass/rng.hpp"
#include "permclass/sampler.hpp"
#include "permclass/series.hpp"
#include "permclass/skeleton.hpp"
#include "permclass/stats.hpp"
