#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "permclass/permclass.hpp"

namespace {

permclass::ClassSpec load_class(const std::string& name) {
    if (name == "separable") return permclass::ClassSpec::separable();
    std::ifstream in(name);
    if (!in) throw permclass::invalid_input("cannot open class spec file '" + name + "'");
    nlohmann::json j;
    in >> j;
    return permclass::ClassSpec::from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace permclass;

    CLI::App app{"Substitution-closed permutation classes: encoding, counting, sampling "
                 "and limit-law experiments"};
    app.require_subcommand(1);

    // --- limits ---------------------------------------------------------
    std::string limits_class = "separable";
    auto* limits_cmd = app.add_subcommand("limits", "Print limit parameters as JSON");
    limits_cmd->add_option("--class", limits_class, "Class name or spec file (JSON)");

    // --- sample ---------------------------------------------------------
    std::string sample_class = "separable", sample_method = "exact";
    int sample_n = 10, sample_count = 1;
    std::uint64_t sample_seed = 1;
    bool emit_trees = false;
    auto* sample_cmd = app.add_subcommand("sample", "Uniform class members, one per line");
    sample_cmd->add_option("--class", sample_class, "Class name or spec file");
    sample_cmd->add_option("-n", sample_n, "Permutation size")->required();
    sample_cmd->add_option("--count", sample_count, "Number of samples");
    sample_cmd->add_option("--method", sample_method, "exact | gw");
    sample_cmd->add_option("--seed", sample_seed, "RNG seed");
    sample_cmd->add_flag("--emit-trees", emit_trees, "Also print the packed-tree forests");

    // --- decompose ------------------------------------------------------
    std::string decompose_perm;
    auto* decompose_cmd = app.add_subcommand("decompose", "Canonical tree of a permutation");
    decompose_cmd->add_option("perm", decompose_perm, "Permutation (digits or space-separated)")
        ->required();

    // --- pack -----------------------------------------------------------
    std::string pack_perm, pack_class = "separable";
    auto* pack_cmd = app.add_subcommand("pack", "Packed-tree forest of a class member");
    pack_cmd->add_option("perm", pack_perm, "Permutation")->required();
    pack_cmd->add_option("--class", pack_class, "Class name or spec file");

    // --- stats ----------------------------------------------------------
    std::string stats_experiment, stats_class = "separable", stats_pattern = "21";
    int stats_n = 1000, stats_samples = 200, stats_k = 1, stats_t = 1, stats_depth = 24;
    std::uint64_t stats_seed = 1;
    std::string out_json, out_csv;
    auto* stats_cmd = app.add_subcommand("stats", "Statistical experiments");
    stats_cmd
        ->add_option("--experiment", stats_experiment,
                     "pattern | consecutive | gamma | skeleton | giant")
        ->required();
    stats_cmd->add_option("--class", stats_class, "Class name or spec file");
    stats_cmd->add_option("-n", stats_n, "Permutation / tree size");
    stats_cmd->add_option("--samples", stats_samples, "Sample count");
    stats_cmd->add_option("--pattern", stats_pattern, "Pattern (digits)");
    stats_cmd->add_option("-k", stats_k, "Number of marks (skeleton)");
    stats_cmd->add_option("-t", stats_t, "Neighbourhood radius (skeleton)");
    stats_cmd->add_option("--spine-depth", stats_depth, "Initial spine depth (gamma)");
    stats_cmd->add_option("--seed", stats_seed, "RNG seed");
    stats_cmd->add_option("--out", out_json, "Write the JSON report here");
    stats_cmd->add_option("--csv", out_csv, "Write the CSV report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*limits_cmd) {
            ClassSpec spec = load_class(limits_class);
            LimitParameters lp = limit_parameters(spec);
            nlohmann::json j{{"class", spec.name()},
                             {"criticality", to_string(lp.criticality)}};
            if (lp.criticality == Criticality::critical_generic ||
                lp.criticality == Criticality::critical_boundary) {
                j["kappa"] = lp.kappa;
                j["t0"] = lp.t0;
                j["a"] = lp.a;
                j["sigma2"] = lp.sigma2;
                j["p"] = lp.p;
            }
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (*sample_cmd) {
            ClassSpec spec = load_class(sample_class);
            SamplerConfig cfg;
            cfg.method = parse_method(sample_method);
            Rng rng(sample_seed);
            if (cfg.method == SamplerConfig::Method::exact) {
                ExactSampler sampler(spec, std::max(sample_n, 2));
                for (int i = 0; i < sample_count; ++i) {
                    DecoratedForest f = sampler.sample_forest(sample_n, rng);
                    std::cout << forest_decode(f).str();
                    if (emit_trees) std::cout << "\t" << to_text(f);
                    std::cout << "\n";
                }
            } else {
                OffspringModel model = offspring_model(spec);
                GwPermutationSampler sampler(spec, model, sample_n);
                sampler.prewarm(sample_n);
                for (int i = 0; i < sample_count; ++i) {
                    DecoratedForest f = sampler.sample_forest(sample_n, rng);
                    std::cout << forest_decode(f).str();
                    if (emit_trees) std::cout << "\t" << to_text(f);
                    std::cout << "\n";
                }
            }
            return 0;
        }

        if (*decompose_cmd) {
            Permutation nu = Permutation::parse(decompose_perm);
            std::cout << to_text(canonical_tree(nu)) << "\n";
            return 0;
        }

        if (*pack_cmd) {
            Permutation nu = Permutation::parse(pack_perm);
            ClassSpec spec = load_class(pack_class);
            std::cout << to_text(forest_encode(nu, spec)) << "\n";
            return 0;
        }

        if (*stats_cmd) {
            ClassSpec spec = load_class(stats_class);
            Permutation pattern = Permutation::parse(stats_pattern);
            ExperimentReport report;
            if (stats_experiment == "pattern") {
                report = estimate_pattern_density(spec, stats_n, stats_samples, pattern,
                                                  stats_seed);
            } else if (stats_experiment == "consecutive") {
                report = consecutive_profile(spec, stats_n, stats_samples, pattern, stats_seed)
                             .report;
            } else if (stats_experiment == "gamma") {
                report = estimate_gamma(spec, pattern, stats_depth, stats_samples, stats_seed)
                             .report;
            } else if (stats_experiment == "skeleton") {
                report = skeleton_experiment(spec, stats_n, stats_k, stats_t, stats_samples,
                                             stats_seed);
            } else if (stats_experiment == "giant") {
                report = giant_component_stats(spec, stats_n, stats_samples, stats_seed);
            } else {
                std::cerr << "unknown experiment '" << stats_experiment << "'\n";
                return 2;
            }
            std::cout << report.to_json().dump(2) << "\n";
            if (!out_json.empty()) {
                std::ofstream out(out_json);
                out << report.to_json().dump(2) << "\n";
            }
            if (!out_csv.empty()) {
                std::ofstream out(out_csv);
                ExperimentReport::csv_header(out);
                report.append_csv(out);
            }
            return report.pass() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
