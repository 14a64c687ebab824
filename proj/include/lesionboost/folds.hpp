#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lesionboost/dataset.hpp"
#include "lesionboost/errors.hpp"
#include "lesionboost/hash.hpp"

namespace lesionboost {

struct fold_assignment {
    std::vector<std::string> train_patients;      // sorted
    std::vector<std::string> validation_patients; // sorted
    size_t validation_rows = 0;
    size_t validation_positives = 0;

    bool positive_free() const { return validation_positives == 0; }

    bool contains_train(const std::string& patient) const {
        return std::binary_search(train_patients.begin(), train_patients.end(), patient);
    }
    bool contains_validation(const std::string& patient) const {
        return std::binary_search(validation_patients.begin(), validation_patients.end(), patient);
    }
};

// Patient-disjoint, label-stratified assignment. Greedy: patients sorted by
// (positive count desc, total count desc, seeded shuffle for ties), each
// placed on the fold that minimizes the squared deviation of per-fold
// (positives, totals) from the ideal share.
inline std::vector<fold_assignment> stratified_group_kfold(const dataset& ds, int n_folds,
                                                           uint64_t seed) {
    if (n_folds < 2) throw input_error("n_folds must be >= 2");
    const auto& groups = ds.patient_groups();
    if (groups.size() < static_cast<size_t>(n_folds))
        throw input_error("fewer patients (" + std::to_string(groups.size()) + ") than folds (" +
                          std::to_string(n_folds) + ")");

    struct patient_stat {
        std::string id;
        size_t positives = 0;
        size_t total = 0;
    };
    std::vector<patient_stat> patients;
    size_t total_pos = 0, total_rows = 0;
    for (const auto& [id, rows] : groups) {
        patient_stat p{id, 0, rows.size()};
        for (size_t r : rows) p.positives += static_cast<size_t>(ds.records()[r].target);
        total_pos += p.positives;
        total_rows += p.total;
        patients.push_back(std::move(p));
    }

    std::mt19937_64 rng(seed);
    std::shuffle(patients.begin(), patients.end(), rng);
    std::stable_sort(patients.begin(), patients.end(), [](const patient_stat& a, const patient_stat& b) {
        if (a.positives != b.positives) return a.positives > b.positives;
        return a.total > b.total;
    });

    const double ideal_pos = static_cast<double>(total_pos) / n_folds;
    const double ideal_cnt = static_cast<double>(total_rows) / n_folds;
    std::vector<double> fold_pos(n_folds, 0.0), fold_cnt(n_folds, 0.0);
    std::vector<std::vector<std::string>> buckets(n_folds);

    for (const auto& p : patients) {
        int best_fold = 0;
        double best_cost = std::numeric_limits<double>::infinity();
        for (int f = 0; f < n_folds; ++f) {
            double cost = 0.0;
            for (int j = 0; j < n_folds; ++j) {
                double pj = fold_pos[j] + (j == f ? static_cast<double>(p.positives) : 0.0);
                double cj = fold_cnt[j] + (j == f ? static_cast<double>(p.total) : 0.0);
                cost += (pj - ideal_pos) * (pj - ideal_pos) + (cj - ideal_cnt) * (cj - ideal_cnt);
            }
            if (cost < best_cost) {
                best_cost = cost;
                best_fold = f;
            }
        }
        fold_pos[best_fold] += static_cast<double>(p.positives);
        fold_cnt[best_fold] += static_cast<double>(p.total);
        buckets[best_fold].push_back(p.id);
    }

    std::vector<fold_assignment> folds(n_folds);
    for (int f = 0; f < n_folds; ++f) {
        auto& a = folds[f];
        a.validation_patients = buckets[f];
        std::sort(a.validation_patients.begin(), a.validation_patients.end());
        for (int j = 0; j < n_folds; ++j)
            if (j != f)
                a.train_patients.insert(a.train_patients.end(), buckets[j].begin(), buckets[j].end());
        std::sort(a.train_patients.begin(), a.train_patients.end());
        a.validation_rows = static_cast<size_t>(fold_cnt[f]);
        a.validation_positives = static_cast<size_t>(fold_pos[f]);
    }
    return folds;
}

struct fold_plan {
    int n_folds = 0;
    std::vector<uint64_t> seeds;
    std::map<uint64_t, std::vector<fold_assignment>> assignments;
    // Largest relative deviation of a validation fold's positive rate from
    // the global positive rate, over all (seed, fold).
    double max_positive_rate_deviation = 0.0;

    const fold_assignment& fold(uint64_t seed, int fold_index) const {
        auto it = assignments.find(seed);
        if (it == assignments.end()) throw input_error("plan has no seed " + std::to_string(seed));
        if (fold_index < 0 || fold_index >= static_cast<int>(it->second.size()))
            throw input_error("plan has no fold " + std::to_string(fold_index));
        return it->second[static_cast<size_t>(fold_index)];
    }

    nlohmann::json to_json() const {
        nlohmann::json records = nlohmann::json::array();
        for (const auto& [seed, folds] : assignments)
            for (size_t f = 0; f < folds.size(); ++f)
                records.push_back({{"seed", seed},
                                   {"fold", f},
                                   {"validation_patients", folds[f].validation_patients}});
        return {{"n_folds", n_folds},
                {"seeds", seeds},
                {"max_positive_rate_deviation", max_positive_rate_deviation},
                {"assignments", records}};
    }

    static fold_plan from_json(const nlohmann::json& j) {
        fold_plan plan;
        plan.n_folds = j.at("n_folds").get<int>();
        plan.seeds = j.at("seeds").get<std::vector<uint64_t>>();
        plan.max_positive_rate_deviation = j.value("max_positive_rate_deviation", 0.0);
        std::map<uint64_t, std::set<std::string>> all_patients;
        for (const auto& rec : j.at("assignments")) {
            uint64_t seed = rec.at("seed").get<uint64_t>();
            auto& folds = plan.assignments[seed];
            if (folds.empty()) folds.resize(static_cast<size_t>(plan.n_folds));
            size_t f = rec.at("fold").get<size_t>();
            if (f >= folds.size()) throw integrity_error("fold index out of range in plan");
            folds[f].validation_patients =
                rec.at("validation_patients").get<std::vector<std::string>>();
            std::sort(folds[f].validation_patients.begin(), folds[f].validation_patients.end());
            for (const auto& p : folds[f].validation_patients) all_patients[seed].insert(p);
        }
        for (auto& [seed, folds] : plan.assignments) {
            for (size_t f = 0; f < folds.size(); ++f) {
                for (const auto& p : all_patients[seed])
                    if (!folds[f].contains_validation(p)) folds[f].train_patients.push_back(p);
                std::sort(folds[f].train_patients.begin(), folds[f].train_patients.end());
            }
        }
        return plan;
    }

    std::string hash() const { return fingerprint(to_json().dump()); }
};

inline fold_plan build_fold_plan(const dataset& ds, int n_folds, const std::vector<uint64_t>& seeds) {
    if (seeds.empty()) throw input_error("at least one seed required");
    fold_plan plan;
    plan.n_folds = n_folds;
    plan.seeds = seeds;

    size_t total_pos = 0;
    for (const auto& r : ds.records()) total_pos += static_cast<size_t>(r.target);
    const double global_rate = ds.empty() ? 0.0 : static_cast<double>(total_pos) / ds.size();

    for (uint64_t seed : seeds) {
        auto folds = stratified_group_kfold(ds, n_folds, seed);
        for (const auto& f : folds) {
            if (f.validation_rows == 0 || global_rate == 0.0) continue;
            double rate = static_cast<double>(f.validation_positives) / f.validation_rows;
            double deviation = std::fabs(rate - global_rate) / global_rate;
            plan.max_positive_rate_deviation = std::max(plan.max_positive_rate_deviation, deviation);
        }
        plan.assignments[seed] = std::move(folds);
    }
    return plan;
}

// Class rebalancing toward `target_ratio` positives per negative: positives
// are oversampled with replacement (each original kept once, capped at
// pos_cap duplications), negatives subsampled without replacement. Output
// indices are sorted, so an already balanced input comes back unchanged.
inline std::vector<size_t> rebalance(const std::vector<size_t>& rows, const std::vector<int>& labels,
                                     double target_ratio, uint64_t seed, int pos_cap = 20) {
    if (target_ratio <= 0.0) throw parameter_error("target_ratio must be positive");
    if (pos_cap < 1) throw parameter_error("pos_cap must be >= 1");

    std::vector<size_t> pos, neg;
    for (size_t idx : rows) {
        if (idx >= labels.size()) throw input_error("row index out of range");
        (labels[idx] == 1 ? pos : neg).push_back(idx);
    }
    if (pos.empty()) throw sampling_error("no rows of class positive");
    if (neg.empty()) throw sampling_error("no rows of class negative");

    std::mt19937_64 rng(seed);
    auto pick = [&rng](size_t n) { return static_cast<size_t>(rng() % n); };

    const size_t needed = static_cast<size_t>(std::llround(target_ratio * static_cast<double>(neg.size())));
    std::vector<size_t> out;

    if (needed <= pos.size()) {
        std::shuffle(pos.begin(), pos.end(), rng);
        out.assign(pos.begin(), pos.begin() + static_cast<long>(std::max<size_t>(needed, 1)));
        out.insert(out.end(), neg.begin(), neg.end());
    } else {
        const size_t p_target = std::min(static_cast<size_t>(pos_cap) * pos.size(), needed);
        const size_t n_target = std::min(
            neg.size(),
            static_cast<size_t>(std::llround(static_cast<double>(p_target) / target_ratio)));
        out = pos;
        for (size_t i = pos.size(); i < p_target; ++i) out.push_back(pos[pick(pos.size())]);
        std::shuffle(neg.begin(), neg.end(), rng);
        out.insert(out.end(), neg.begin(), neg.begin() + static_cast<long>(n_target));
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace lesionboost
