#pragma once
#include <atomic>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lesionboost/dataset.hpp"
#include "lesionboost/ensemble.hpp"
#include "lesionboost/errors.hpp"
#include "lesionboost/features.hpp"
#include "lesionboost/folds.hpp"
#include "lesionboost/metrics.hpp"

namespace lesionboost {

// One sweep configuration: which column groups enter the frame and whether
// synthetic-provenance rows are kept. Patient aggregates count as part of
// the engineered block. `reference_pauc` is carried through into the output
// table as metadata, never asserted against.
struct ablation_config {
    std::string name;
    bool use_engineered = true;
    bool use_patient_norm = true;
    bool use_external_preds = true;
    bool include_synthetic = true;
    std::optional<double> reference_pauc;

    nlohmann::json to_json() const {
        nlohmann::json j = {{"name", name},
                            {"use_engineered", use_engineered},
                            {"use_patient_norm", use_patient_norm},
                            {"use_external_preds", use_external_preds},
                            {"include_synthetic", include_synthetic}};
        if (reference_pauc) j["reference_pauc"] = *reference_pauc;
        return j;
    }

    static ablation_config from_json(const nlohmann::json& j) {
        ablation_config c;
        c.name = j.at("name").get<std::string>();
        c.use_engineered = j.value("use_engineered", true);
        c.use_patient_norm = j.value("use_patient_norm", true);
        c.use_external_preds = j.value("use_external_preds", true);
        c.include_synthetic = j.value("include_synthetic", true);
        if (j.contains("reference_pauc") && !j["reference_pauc"].is_null())
            c.reference_pauc = j["reference_pauc"].get<double>();
        return c;
    }
};

inline std::vector<ablation_config> sweep_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw validation_error("sweep spec must be a JSON list");
    std::vector<ablation_config> configs;
    for (const auto& item : j) configs.push_back(ablation_config::from_json(item));
    return configs;
}

struct ablation_row {
    std::string name;
    double pauc = 0.0;
    double auc = 0.0;
    size_t n_members = 0;
    std::optional<double> reference_pauc;
};

struct sweep_result {
    std::vector<ablation_row> rows;
    std::string plan_hash;
};

// Runs every configuration against one shared fold plan so rows stay
// comparable. Errors are annotated with the configuration name.
inline sweep_result run_sweep(const dataset& ds, const std::vector<ablation_config>& configs,
                              const feature_catalog& catalog, const ensemble_config& ens_config,
                              bool parallel = false) {
    if (configs.empty()) throw input_error("sweep has no configurations");
    std::set<std::string> names;
    for (const auto& c : configs)
        if (!names.insert(c.name).second)
            throw validation_error("duplicate configuration name '" + c.name + "'");

    const fold_plan plan = build_fold_plan(ds, ens_config.n_folds, ens_config.seeds);
    sweep_result result;
    result.plan_hash = plan.hash();
    result.rows.resize(configs.size());

    auto run_one = [&](size_t i) {
        const ablation_config& cfg = configs[i];
        try {
            dataset data = cfg.include_synthetic ? ds : ds.filter_real();
            feature_frame frame = featurize(data, catalog).frame;

            std::set<feature_group> keep = {feature_group::raw_numeric,
                                            feature_group::raw_categorical, feature_group::onehot};
            if (cfg.use_engineered) {
                keep.insert(feature_group::engineered);
                keep.insert(feature_group::patient_agg);
            }
            if (cfg.use_patient_norm) keep.insert(feature_group::patient_norm);
            if (cfg.use_external_preds) keep.insert(feature_group::external_pred);
            frame = frame.select_groups(keep);

            auto trained = train_ensemble(frame, plan, ens_config);
            ablation_row row;
            row.name = cfg.name;
            row.n_members = trained.ensemble.members.size();
            row.pauc = pauc_above_tpr(frame.labels, trained.oof_scores);
            row.auc = full_auc(frame.labels, trained.oof_scores);
            row.reference_pauc = cfg.reference_pauc;
            result.rows[i] = std::move(row);
        } catch (const error& e) {
            throw validation_error("configuration '" + cfg.name + "': " + e.what());
        }
    };

    if (!parallel || configs.size() == 1) {
        for (size_t i = 0; i < configs.size(); ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(configs.size());
        for (size_t i = 0; i < configs.size(); ++i)
            pool.emplace_back([&, i] {
                try {
                    run_one(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return result;
}

inline void write_sweep_csv(const sweep_result& result, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : result.rows) {
        rows.push_back({r.name, format_double(r.pauc, 6), format_double(r.auc, 6),
                        std::to_string(r.n_members),
                        r.reference_pauc ? format_double(*r.reference_pauc, 6) : std::string()});
    }
    write_csv(path, {"name", "pauc", "auc", "n_members", "reference_pauc"}, rows);
}

// Aligned text table in the usual configuration/pAUC layout.
inline std::string format_sweep_table(const sweep_result& result) {
    size_t name_width = 13; // "Configuration"
    for (const auto& r : result.rows) name_width = std::max(name_width, r.name.size());

    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(name_width + 2)) << "Configuration"
        << std::right << std::setw(8) << "pAUC" << std::setw(9) << "AUC" << std::setw(9)
        << "members" << std::setw(11) << "reference" << '\n';
    out << std::string(name_width + 2 + 8 + 9 + 9 + 11, '-') << '\n';
    for (const auto& r : result.rows) {
        out << std::left << std::setw(static_cast<int>(name_width + 2)) << r.name << std::right
            << std::fixed << std::setprecision(4) << std::setw(8) << r.pauc << std::setw(9)
            << r.auc << std::setw(9) << r.n_members;
        if (r.reference_pauc)
            out << std::setw(11) << *r.reference_pauc;
        else
            out << std::setw(11) << "-";
        out << '\n';
    }
    out << "plan_hash: " << result.plan_hash << '\n';
    return out.str();
}

} // namespace lesionboost
