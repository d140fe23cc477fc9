#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "permclass/permutation.hpp"

#include <json.hpp>

namespace permclass {

struct membership_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A substitution-closed class given by its simple permutations. For an
/// infinite family the listing is truncated at `truncation` and the radius of
/// convergence of S(z) may be declared by the user; a truncated spec cannot
/// decide membership above the cutoff and cannot certify criticality.
class ClassSpec {
public:
    ClassSpec() = default;

    ClassSpec(std::string name, std::vector<Permutation> simples, int truncation = 0,
              std::optional<double> rho_s = std::nullopt)
        : name_(std::move(name)), truncation_(truncation), rho_s_(rho_s) {
        for (auto& alpha : simples) add_simple(alpha);
    }

    static ClassSpec separable() { return ClassSpec("separable", {}); }

    const std::string& name() const { return name_; }

    /// 0 means the listing is complete (every simple member is listed).
    int truncation() const { return truncation_; }
    bool truncated() const { return truncation_ > 0; }
    std::optional<double> declared_rho_s() const { return rho_s_; }

    /// Largest size with reliable s_k data (infinity stands in as a large int
    /// for complete specs).
    int max_known_size() const {
        if (truncated()) return truncation_;
        return simples_.empty() ? 3 : simples_.rbegin()->first;
    }

    /// s_k: number of simple members of size k (0 when k is above a complete
    /// listing; throws for a truncated spec queried past its cutoff).
    std::uint64_t simple_count(int k) const {
        if (truncated() && k > truncation_)
            throw membership_error(name_ + ": s_" + std::to_string(k) +
                                   " is beyond the truncation cutoff");
        auto it = simples_.find(k);
        return it == simples_.end() ? 0 : it->second.size();
    }

    /// Sum of socc(12, alpha) over listed simples of size k.
    std::uint64_t socc12_count(int k) const {
        auto it = socc12_.find(k);
        return it == socc12_.end() ? 0 : it->second;
    }

    bool contains_simple(const Permutation& alpha) const {
        if (truncated() && alpha.size() > truncation_)
            throw membership_error(name_ + ": membership of a size-" +
                                   std::to_string(alpha.size()) +
                                   " simple permutation is beyond the truncation cutoff");
        auto it = simples_.find(alpha.size());
        return it != simples_.end() && it->second.count(alpha) > 0;
    }

    const std::map<int, std::set<Permutation>>& simples() const { return simples_; }

    std::vector<Permutation> simples_of_size(int k) const {
        auto it = simples_.find(k);
        if (it == simples_.end()) return {};
        return {it->second.begin(), it->second.end()};
    }

    /// S(z), S'(z), S''(z) from the listed coefficients (exact for complete
    /// finite specs; partial sums for truncated ones).
    double series_s(double z) const {
        double acc = 0;
        for (const auto& [k, set] : simples_) acc += static_cast<double>(set.size()) * power(z, k);
        return acc;
    }
    double series_s_prime(double z) const {
        double acc = 0;
        for (const auto& [k, set] : simples_)
            acc += static_cast<double>(set.size()) * k * power(z, k - 1);
        return acc;
    }
    double series_s_second(double z) const {
        double acc = 0;
        for (const auto& [k, set] : simples_)
            acc += static_cast<double>(set.size()) * k * (k - 1) * power(z, k - 2);
        return acc;
    }

    /// Occ_12(z) = sum over listed simples of socc(12, alpha) z^(|alpha|-2).
    double series_occ12(double z) const {
        double acc = 0;
        for (const auto& [k, c] : socc12_) acc += static_cast<double>(c) * power(z, k - 2);
        return acc;
    }

    static ClassSpec from_json(const nlohmann::json& j) {
        ClassSpec spec;
        spec.name_ = j.value("name", std::string("unnamed"));
        if (j.contains("truncation")) spec.truncation_ = j.at("truncation").get<int>();
        if (j.contains("rho_S")) spec.rho_s_ = j.at("rho_S").get<double>();
        if (j.contains("simples"))
            for (const auto& [size_key, list] : j.at("simples").items())
                for (const auto& p : list) {
                    Permutation alpha = Permutation::parse(p.get<std::string>());
                    if (alpha.size() != std::stoi(size_key))
                        throw invalid_input("class spec: permutation size does not match its key");
                    spec.add_simple(alpha);
                }
        return spec;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["name"] = name_;
        nlohmann::json s = nlohmann::json::object();
        for (const auto& [k, set] : simples_) {
            nlohmann::json list = nlohmann::json::array();
            for (const auto& alpha : set) list.push_back(alpha.compact());
            s[std::to_string(k)] = list;
        }
        j["simples"] = s;
        if (truncated()) j["truncation"] = truncation_;
        if (rho_s_) j["rho_S"] = *rho_s_;
        return j;
    }

private:
    void add_simple(const Permutation& alpha) {
        if (!is_simple(alpha))
            throw invalid_input("class spec: " + alpha.str() + " is not simple");
        if (truncated() && alpha.size() > truncation_)
            throw invalid_input("class spec: listed simple exceeds the truncation cutoff");
        if (simples_[alpha.size()].insert(alpha).second)
            socc12_[alpha.size()] += socc12(alpha);
    }

    static double power(double z, int k) {
        double acc = 1;
        for (int i = 0; i < k; ++i) acc *= z;
        return acc;
    }

    std::string name_;
    int truncation_ = 0;
    std::optional<double> rho_s_;
    std::map<int, std::set<Permutation>> simples_;
    std::map<int, std::uint64_t> socc12_;
};

}  // namespace permclass
