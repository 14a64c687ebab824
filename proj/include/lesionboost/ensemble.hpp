#pragma once
#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lesionboost/errors.hpp"
#include "lesionboost/features.hpp"
#include "lesionboost/folds.hpp"
#include "lesionboost/gbdt.hpp"
#include "lesionboost/hash.hpp"

namespace lesionboost {

struct ensemble_config {
    gbdt_config gbdt;
    int n_folds = 5;
    std::vector<uint64_t> seeds = {1, 2, 3};
    std::vector<growth_kind> growths = {growth_kind::leafwise, growth_kind::levelwise,
                                        growth_kind::oblivious};
    double rebalance_ratio = 1.0; // positives per negative
    int rebalance_pos_cap = 20;
    double noise_sigma = 0.1;
    int workers = 1;
    bool rank_average = false;

    nlohmann::json to_json() const {
        nlohmann::json growths_json = nlohmann::json::array();
        for (auto g : growths) growths_json.push_back(to_string(g));
        return {{"gbdt", gbdt.to_json()},
                {"n_folds", n_folds},
                {"seeds", seeds},
                {"growths", growths_json},
                {"rebalance_ratio", rebalance_ratio},
                {"rebalance_pos_cap", rebalance_pos_cap},
                {"noise_sigma", noise_sigma},
                {"workers", workers},
                {"rank_average", rank_average}};
    }

    static ensemble_config from_json(const nlohmann::json& j) {
        ensemble_config c;
        if (j.contains("gbdt")) c.gbdt = gbdt_config::from_json(j["gbdt"]);
        c.n_folds = j.value("n_folds", c.n_folds);
        if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<uint64_t>>();
        if (j.contains("growths")) {
            c.growths.clear();
            for (const auto& g : j["growths"]) c.growths.push_back(growth_from_string(g.get<std::string>()));
        }
        c.rebalance_ratio = j.value("rebalance_ratio", c.rebalance_ratio);
        c.rebalance_pos_cap = j.value("rebalance_pos_cap", c.rebalance_pos_cap);
        c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
        c.workers = j.value("workers", c.workers);
        c.rank_average = j.value("rank_average", c.rank_average);
        return c;
    }

    std::string hash() const { return fingerprint(to_json().dump()); }
};

struct ensemble_member {
    uint64_t seed = 0;
    int fold = 0;
    growth_kind growth = growth_kind::leafwise;
    boosted_model model;

    std::string file_name() const {
        return "s" + std::to_string(seed) + "_f" + std::to_string(fold) + "_" + to_string(growth) +
               ".model.json";
    }
};

struct ensemble_model {
    std::vector<ensemble_member> members;
    fold_plan plan;
    ensemble_config config;

    const std::vector<std::string>& feature_names() const {
        if (members.empty()) throw input_error("empty ensemble");
        return members.front().model.feature_names;
    }
};

struct ensemble_training_result {
    ensemble_model ensemble;
    std::vector<double> oof_scores; // one per frame row, averaged over (seed, growth)
};

namespace ensemble_detail {

// Scores become average ranks scaled to [0,1]; used by the optional
// rank-average aggregation.
inline std::vector<double> rank_transform(const std::vector<double>& scores) {
    const size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j));
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    if (n > 1)
        for (double& r : ranks) r /= static_cast<double>(n - 1);
    return ranks;
}

constexpr uint64_t rebalance_salt = 0x5eba11ce;
constexpr uint64_t noise_salt = 0x4015e;
constexpr uint64_t train_salt = 0x7ea1;

} // namespace ensemble_detail

// Trains |seeds| x n_folds x |growths| members. Per member: the fold's
// training rows are rebalanced, prediction noise is injected into the
// training copy only, the model is fitted and the held-out fold is scored.
// Every row collects exactly one out-of-fold score per (seed, growth); the
// returned OOF score is their mean.
inline ensemble_training_result train_ensemble(const feature_frame& frame, const fold_plan& plan,
                                               const ensemble_config& config) {
    if (config.growths.empty()) throw input_error("no growth strategies given");
    if (frame.n_rows() == 0) throw input_error("empty frame");
    if (plan.seeds.empty()) throw input_error("plan has no seeds");

    // The plan must place every frame patient in exactly one validation fold
    // per seed.
    std::set<std::string> frame_patients(frame.row_patients.begin(), frame.row_patients.end());
    for (uint64_t seed : plan.seeds) {
        for (const auto& patient : frame_patients) {
            int hits = 0;
            for (int f = 0; f < plan.n_folds; ++f)
                if (plan.fold(seed, f).contains_validation(patient)) ++hits;
            if (hits != 1)
                throw input_error("patient '" + patient + "' appears in " + std::to_string(hits) +
                                  " validation folds of seed " + std::to_string(seed));
        }
    }

    struct member_task {
        uint64_t seed;
        int fold;
        size_t growth_index;
    };
    std::vector<member_task> tasks;
    for (uint64_t seed : plan.seeds)
        for (int fold = 0; fold < plan.n_folds; ++fold)
            for (size_t g = 0; g < config.growths.size(); ++g) tasks.push_back({seed, fold, g});

    struct member_output {
        ensemble_member member;
        std::vector<size_t> validation_rows;
        std::vector<double> validation_scores;
        std::string error;
    };
    std::vector<member_output> outputs(tasks.size());

    auto run_task = [&](size_t t) {
        const member_task& task = tasks[t];
        member_output& out = outputs[t];
        const growth_kind growth = config.growths[task.growth_index];
        out.member.seed = task.seed;
        out.member.fold = task.fold;
        out.member.growth = growth;
        try {
            const fold_assignment& assignment = plan.fold(task.seed, task.fold);
            std::vector<size_t> train_rows, validation_rows;
            for (size_t r = 0; r < frame.n_rows(); ++r) {
                if (assignment.contains_validation(frame.row_patients[r])) validation_rows.push_back(r);
                else train_rows.push_back(r);
            }
            if (train_rows.empty()) throw training_error("empty training partition");

            auto sampled = rebalance(train_rows, frame.labels, config.rebalance_ratio,
                                     mix_seed(task.seed, static_cast<uint64_t>(task.fold),
                                              task.growth_index, ensemble_detail::rebalance_salt),
                                     config.rebalance_pos_cap);
            feature_frame train_frame = frame.select_rows(sampled);
            train_frame = inject_prediction_noise(
                train_frame, config.noise_sigma,
                mix_seed(task.seed, static_cast<uint64_t>(task.fold), task.growth_index,
                         ensemble_detail::noise_salt));
            out.member.model =
                train_gbdt(train_frame, config.gbdt, growth,
                           mix_seed(task.seed, static_cast<uint64_t>(task.fold), task.growth_index,
                                    ensemble_detail::train_salt));

            out.validation_rows = std::move(validation_rows);
            out.validation_scores.reserve(out.validation_rows.size());
            for (size_t r : out.validation_rows)
                out.validation_scores.push_back(out.member.model.predict_row(frame.row(r)));
        } catch (const error& e) {
            out.error = e.what();
        }
    };

    const int workers = std::max(1, config.workers);
    if (workers == 1) {
        for (size_t t = 0; t < tasks.size(); ++t) run_task(t);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < std::min<int>(workers, static_cast<int>(tasks.size())); ++w)
            pool.emplace_back([&] {
                for (size_t t = next.fetch_add(1); t < tasks.size(); t = next.fetch_add(1)) run_task(t);
            });
        for (auto& th : pool) th.join();
    }

    ensemble_training_result result;
    result.ensemble.plan = plan;
    result.ensemble.config = config;
    std::vector<double> oof_sum(frame.n_rows(), 0.0);
    std::vector<size_t> oof_count(frame.n_rows(), 0);

    for (size_t t = 0; t < tasks.size(); ++t) {
        auto& out = outputs[t];
        if (!out.error.empty())
            throw training_error("(seed=" + std::to_string(tasks[t].seed) +
                                 ", fold=" + std::to_string(tasks[t].fold) + ", growth=" +
                                 to_string(config.growths[tasks[t].growth_index]) + "): " + out.error);
        for (size_t i = 0; i < out.validation_rows.size(); ++i) {
            oof_sum[out.validation_rows[i]] += out.validation_scores[i];
            ++oof_count[out.validation_rows[i]];
        }
        result.ensemble.members.push_back(std::move(out.member));
    }

    const size_t expected = plan.seeds.size() * config.growths.size();
    result.oof_scores.resize(frame.n_rows());
    for (size_t r = 0; r < frame.n_rows(); ++r) {
        if (oof_count[r] != expected)
            throw integrity_error("row '" + frame.row_ids[r] + "' received " +
                                  std::to_string(oof_count[r]) + " OOF scores, expected " +
                                  std::to_string(expected));
        result.oof_scores[r] = oof_sum[r] / static_cast<double>(expected);
    }
    return result;
}

// Unweighted mean of member probabilities (or of member rank transforms
// when the config asks for rank averaging).
inline std::vector<double> predict_ensemble(const ensemble_model& ensemble,
                                            const feature_frame& frame) {
    if (ensemble.members.empty()) throw input_error("empty ensemble");
    std::vector<double> sum(frame.n_rows(), 0.0);
    for (const auto& m : ensemble.members) {
        std::vector<double> p = m.model.predict(frame);
        if (ensemble.config.rank_average) p = ensemble_detail::rank_transform(p);
        for (size_t r = 0; r < frame.n_rows(); ++r) sum[r] += p[r];
    }
    for (double& v : sum) v /= static_cast<double>(ensemble.members.size());
    return sum;
}

// Mean member importance, renormalized to sum 1, sorted descending with a
// stable name tie-break.
inline std::vector<std::pair<std::string, double>> aggregate_importance(const ensemble_model& ensemble) {
    if (ensemble.members.empty()) throw input_error("empty ensemble");
    const auto& names = ensemble.feature_names();
    std::vector<double> mean(names.size(), 0.0);
    for (const auto& m : ensemble.members) {
        if (m.model.feature_names != names)
            throw integrity_error("ensemble members disagree on feature names");
        std::vector<double> imp = feature_importance(m.model);
        for (size_t i = 0; i < imp.size(); ++i) mean[i] += imp[i];
    }
    double total = std::accumulate(mean.begin(), mean.end(), 0.0);
    if (total > 0.0)
        for (double& v : mean) v /= total;

    std::vector<std::pair<std::string, double>> ranked;
    ranked.reserve(names.size());
    for (size_t i = 0; i < names.size(); ++i) ranked.emplace_back(names[i], mean[i]);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return ranked;
}

inline constexpr int ensemble_format_version = 1;

inline void save_ensemble(const ensemble_model& ensemble, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : ensemble.members) {
        std::string file = m.file_name();
        std::ofstream out(fs::path(dir) / file, std::ios::binary);
        if (!out) throw io_error("cannot write member file '" + file + "'");
        out << model_to_json(m.model).dump(2) << '\n';
        members.push_back({{"seed", m.seed},
                           {"fold", m.fold},
                           {"growth", to_string(m.growth)},
                           {"file", file}});
    }
    nlohmann::json manifest = {{"format_version", ensemble_format_version},
                               {"plan_hash", ensemble.plan.hash()},
                               {"config_hash", ensemble.config.hash()},
                               {"plan", ensemble.plan.to_json()},
                               {"config", ensemble.config.to_json()},
                               {"members", std::move(members)}};
    std::ofstream out(fs::path(dir) / "ensemble.json", std::ios::binary);
    if (!out) throw io_error("cannot write ensemble manifest");
    out << manifest.dump(2) << '\n';
}

inline ensemble_model load_ensemble(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / "ensemble.json", std::ios::binary);
    if (!in) throw io_error("cannot open ensemble manifest in '" + dir + "'");
    nlohmann::json manifest;
    in >> manifest;
    int version = manifest.at("format_version").get<int>();
    if (version != ensemble_format_version)
        throw integrity_error("ensemble format version " + std::to_string(version) +
                              " not supported");
    ensemble_model ensemble;
    ensemble.plan = fold_plan::from_json(manifest.at("plan"));
    ensemble.config = ensemble_config::from_json(manifest.at("config"));
    if (manifest.at("plan_hash").get<std::string>() != ensemble.plan.hash())
        throw integrity_error("ensemble plan hash mismatch");
    if (manifest.at("config_hash").get<std::string>() != ensemble.config.hash())
        throw integrity_error("ensemble config hash mismatch");
    for (const auto& jm : manifest.at("members")) {
        ensemble_member m;
        m.seed = jm.at("seed").get<uint64_t>();
        m.fold = jm.at("fold").get<int>();
        m.growth = growth_from_string(jm.at("growth").get<std::string>());
        std::ifstream min(fs::path(dir) / jm.at("file").get<std::string>(), std::ios::binary);
        if (!min) throw io_error("cannot open member file '" + jm.at("file").get<std::string>() + "'");
        nlohmann::json jmodel;
        min >> jmodel;
        m.model = model_from_json(jmodel);
        ensemble.members.push_back(std::move(m));
    }
    if (ensemble.members.empty()) throw integrity_error("ensemble manifest lists no members");
    return ensemble;
}

inline void write_oof_csv(const std::string& path, const std::vector<std::string>& row_ids,
                          const std::vector<double>& scores) {
    if (row_ids.size() != scores.size()) throw shape_error("row id / score length mismatch");
    std::vector<std::vector<std::string>> rows;
    rows.reserve(row_ids.size());
    for (size_t i = 0; i < row_ids.size(); ++i)
        rows.push_back({row_ids[i], format_double(scores[i], 17)});
    write_csv(path, {"lesion_id", "oof_score"}, rows);
}

} // namespace lesionboost
