// Command-line surface for the lesion scoring pipeline. Every artifact-
// writing command drops a run_manifest.json next to its outputs; identical
// configuration and inputs reproduce identical bytes.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lesionboost/ablation.hpp"
#include "lesionboost/catalog.hpp"
#include "lesionboost/csv.hpp"
#include "lesionboost/dataset.hpp"
#include "lesionboost/ensemble.hpp"
#include "lesionboost/errors.hpp"
#include "lesionboost/features.hpp"
#include "lesionboost/folds.hpp"
#include "lesionboost/gbdt.hpp"
#include "lesionboost/manifest.hpp"
#include "lesionboost/metrics.hpp"
#include "lesionboost/version.hpp"

namespace fs = std::filesystem;
using namespace lesionboost;

namespace {

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("malformed JSON in '" + path + "': " + e.what());
    }
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << text;
}

dataset_schema load_schema_arg(const std::string& path) {
    if (path.empty()) return default_schema();
    return dataset_schema::from_json(read_json_file(path));
}

feature_catalog load_catalog_arg(const std::string& path) {
    if (path.empty()) return default_catalog();
    return feature_catalog::from_json(read_json_file(path));
}

std::vector<uint64_t> parse_seed_list(const std::string& text) {
    std::vector<uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        seeds.push_back(std::stoull(item));
    }
    if (seeds.empty()) throw parameter_error("empty seed list");
    return seeds;
}

std::vector<growth_kind> parse_growth_list(const std::string& text) {
    std::vector<growth_kind> growths;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        growths.push_back(growth_from_string(item));
    }
    if (growths.empty()) throw parameter_error("empty growth list");
    return growths;
}

int default_workers() {
    if (const char* env = std::getenv("LESIONBOOST_WORKERS")) {
        int w = std::atoi(env);
        if (w >= 1) return w;
    }
    return 1;
}

// Run configuration file for train/ablate: paths plus pipeline knobs.
// Command-line flags override file values; unknown keys are rejected.
struct run_config {
    std::string metadata, predictions, schema, catalog, dataset, plan, sweep, out;
    ensemble_config ensemble;
    double min_tpr = 0.8;

    static run_config from_json(const nlohmann::json& j) {
        static const std::set<std::string> known = {
            "metadata", "predictions",     "schema",            "catalog",      "dataset",
            "plan",     "sweep",           "out",               "folds",        "seeds",
            "growths",  "noise_sigma",     "min_tpr",           "workers",
            "rebalance_ratio", "rebalance_pos_cap", "rank_average", "gbdt"};
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!known.count(it.key()))
                throw validation_error("unknown key '" + it.key() + "' in run config");
        static const std::set<std::string> known_gbdt = {
            "n_trees", "learning_rate", "max_leaves", "max_depth",
            "min_child_weight", "l2_lambda", "n_bins"};
        if (j.contains("gbdt"))
            for (auto it = j["gbdt"].begin(); it != j["gbdt"].end(); ++it)
                if (!known_gbdt.count(it.key()))
                    throw validation_error("unknown key 'gbdt." + it.key() + "' in run config");

        run_config c;
        c.ensemble.workers = default_workers();
        c.metadata = j.value("metadata", "");
        c.predictions = j.value("predictions", "");
        c.schema = j.value("schema", "");
        c.catalog = j.value("catalog", "");
        c.dataset = j.value("dataset", "");
        c.plan = j.value("plan", "");
        c.sweep = j.value("sweep", "");
        c.out = j.value("out", "");
        if (j.contains("gbdt")) c.ensemble.gbdt = gbdt_config::from_json(j["gbdt"]);
        c.ensemble.n_folds = j.value("folds", c.ensemble.n_folds);
        if (j.contains("seeds")) c.ensemble.seeds = j["seeds"].get<std::vector<uint64_t>>();
        if (j.contains("growths")) {
            c.ensemble.growths.clear();
            for (const auto& g : j["growths"])
                c.ensemble.growths.push_back(growth_from_string(g.get<std::string>()));
        }
        c.ensemble.noise_sigma = j.value("noise_sigma", c.ensemble.noise_sigma);
        c.ensemble.rebalance_ratio = j.value("rebalance_ratio", c.ensemble.rebalance_ratio);
        c.ensemble.rebalance_pos_cap = j.value("rebalance_pos_cap", c.ensemble.rebalance_pos_cap);
        c.ensemble.workers = j.value("workers", c.ensemble.workers);
        c.ensemble.rank_average = j.value("rank_average", c.ensemble.rank_average);
        c.min_tpr = j.value("min_tpr", c.min_tpr);
        return c;
    }
};

std::string pick(const std::string& flag_value, const std::string& config_value,
                 const char* what, bool required = true) {
    if (!flag_value.empty()) return flag_value;
    if (!config_value.empty()) return config_value;
    if (required) throw parameter_error(std::string("no ") + what + " given (flag or run config)");
    return {};
}

struct labeled_scores {
    std::vector<int> labels;
    std::vector<double> scores;
};

labeled_scores load_labeled_scores(const std::string& labels_path, const std::string& scores_path) {
    csv_table labels_csv = read_csv(labels_path);
    csv_table scores_csv = read_csv(scores_path);

    auto label_col = labels_csv.find("target");
    if (!label_col) label_col = labels_csv.find("label");
    if (!label_col) throw schema_error("labels file needs a 'target' or 'label' column");
    auto score_col = scores_csv.find("score");
    if (!score_col) score_col = scores_csv.find("oof_score");
    if (!score_col) throw schema_error("scores file needs a 'score' or 'oof_score' column");

    auto labels_id = labels_csv.find("lesion_id");
    if (!labels_id) labels_id = labels_csv.find("isic_id");
    auto scores_id = scores_csv.find("lesion_id");
    if (!scores_id) scores_id = scores_csv.find("isic_id");

    labeled_scores out;
    if (labels_id && scores_id) {
        std::map<std::string, double> by_id;
        for (const auto& row : scores_csv.rows) {
            auto v = parse_double(row[*score_col]);
            if (!v) throw input_error("unparseable score for '" + row[*scores_id] + "'");
            by_id[row[*scores_id]] = *v;
        }
        for (const auto& row : labels_csv.rows) {
            auto y = parse_double(row[*label_col]);
            if (!y || (*y != 0.0 && *y != 1.0))
                throw input_error("label outside {0,1} for '" + row[*labels_id] + "'");
            auto it = by_id.find(row[*labels_id]);
            if (it == by_id.end())
                throw input_error("no score for lesion '" + row[*labels_id] + "'");
            out.labels.push_back(static_cast<int>(*y));
            out.scores.push_back(it->second);
        }
    } else {
        if (labels_csv.rows.size() != scores_csv.rows.size())
            throw input_error("labels/scores row counts differ and no lesion_id column to join on");
        for (size_t i = 0; i < labels_csv.rows.size(); ++i) {
            auto y = parse_double(labels_csv.rows[i][*label_col]);
            if (!y || (*y != 0.0 && *y != 1.0)) throw input_error("label outside {0,1}");
            auto v = parse_double(scores_csv.rows[i][*score_col]);
            if (!v) throw input_error("unparseable score");
            out.labels.push_back(static_cast<int>(*y));
            out.scores.push_back(*v);
        }
    }
    return out;
}

// --- subcommands -----------------------------------------------------------

int cmd_ingest(const std::string& metadata, const std::string& predictions,
               const std::string& schema_path, const std::string& out_dir) {
    dataset_schema schema = load_schema_arg(schema_path);
    auto [data, report] = load_dataset(metadata, schema);

    double coverage = -1.0;
    if (!predictions.empty()) {
        auto table = load_prediction_table(predictions, schema);
        auto [merged, merge_rep] = merge_prediction_columns(data, table);
        data = std::move(merged);
        coverage = merge_rep.coverage;
    }

    fs::create_directories(out_dir);
    std::string dataset_path = (fs::path(out_dir) / "dataset.json").string();
    save_dataset(data, dataset_path);
    nlohmann::json report_json = report.to_json();
    if (coverage >= 0.0) report_json["prediction_coverage"] = coverage;
    write_text_file((fs::path(out_dir) / "load_report.json").string(), report_json.dump(2) + "\n");

    run_manifest manifest;
    manifest.command = "ingest";
    manifest.config = {{"metadata", metadata},
                       {"predictions", predictions},
                       {"schema", schema_path},
                       {"out", out_dir}};
    manifest.add_input(metadata);
    if (!predictions.empty()) manifest.add_input(predictions);
    if (!schema_path.empty()) manifest.add_input(schema_path);
    manifest.outputs = {"dataset.json", "load_report.json"};
    manifest.write(out_dir);

    std::cout << "rows=" << report.rows_loaded << " patients=" << data.patient_groups().size()
              << " rejected=" << report.rejected_rows.size();
    if (coverage >= 0.0) std::cout << " prediction_coverage=" << format_double(coverage, 6);
    std::cout << "\n";
    return 0;
}

int cmd_featurize(const std::string& dataset_path, const std::string& catalog_path,
                  const std::string& out_dir, bool cache) {
    dataset data = load_canonical_dataset(dataset_path);
    feature_catalog catalog = load_catalog_arg(catalog_path);
    feature_frame frame = featurize(data, catalog).frame;

    fs::create_directories(out_dir);
    export_frame_csv(frame, (fs::path(out_dir) / "frame.csv").string(),
                     (fs::path(out_dir) / "frame.columns.json").string());
    if (cache) save_frame_cache(frame, (fs::path(out_dir) / "frame.cache").string());

    run_manifest manifest;
    manifest.command = "featurize";
    manifest.config = {{"dataset", dataset_path}, {"catalog", catalog_path}, {"out", out_dir},
                       {"cache", cache}};
    manifest.add_input(dataset_path);
    if (!catalog_path.empty()) manifest.add_input(catalog_path);
    manifest.outputs = {"frame.csv", "frame.columns.json"};
    if (cache) manifest.outputs.push_back("frame.cache");
    manifest.write(out_dir);

    std::cout << "rows=" << frame.n_rows() << " columns=" << frame.n_cols();
    for (const auto& [group, count] : frame.group_counts())
        std::cout << " " << to_string(group) << "=" << count;
    std::cout << "\n";
    return 0;
}

int cmd_split(const std::string& dataset_path, int folds, const std::string& seeds_text,
              const std::string& out_dir) {
    dataset data = load_canonical_dataset(dataset_path);
    fold_plan plan = build_fold_plan(data, folds, parse_seed_list(seeds_text));

    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / "plan.json").string(), plan.to_json().dump(2) + "\n");

    run_manifest manifest;
    manifest.command = "split";
    manifest.config = {{"dataset", dataset_path}, {"folds", folds}, {"seeds", seeds_text},
                       {"out", out_dir}};
    manifest.add_input(dataset_path);
    manifest.outputs = {"plan.json"};
    manifest.write(out_dir);

    std::cout << "folds=" << plan.n_folds << " seeds=" << plan.seeds.size()
              << " max_positive_rate_deviation="
              << format_double(plan.max_positive_rate_deviation, 6) << "\n";
    return 0;
}

int cmd_train(const std::string& dataset_path, const std::string& catalog_path,
              const std::string& plan_path, const std::string& config_path,
              const std::string& out_dir, int folds, const std::string& seeds_text,
              const std::string& growths_text, int trees, double noise_sigma, double ratio,
              int workers) {
    run_config config;
    config.ensemble.workers = default_workers();
    if (!config_path.empty()) config = run_config::from_json(read_json_file(config_path));
    if (folds > 0) config.ensemble.n_folds = folds;
    if (!seeds_text.empty()) config.ensemble.seeds = parse_seed_list(seeds_text);
    if (!growths_text.empty()) config.ensemble.growths = parse_growth_list(growths_text);
    if (trees >= 0) config.ensemble.gbdt.n_trees = trees;
    if (noise_sigma >= 0.0) config.ensemble.noise_sigma = noise_sigma;
    if (ratio > 0.0) config.ensemble.rebalance_ratio = ratio;
    if (workers > 0) config.ensemble.workers = workers;

    std::string dataset_file = pick(dataset_path, config.dataset, "dataset");
    std::string catalog_file = pick(catalog_path, config.catalog, "catalog", false);
    std::string plan_file = pick(plan_path, config.plan, "plan", false);
    std::string out_dir_eff = pick(out_dir, config.out, "output directory");

    dataset data = load_canonical_dataset(dataset_file);
    feature_catalog catalog = load_catalog_arg(catalog_file);
    feature_frame frame = featurize(data, catalog).frame;

    fold_plan plan;
    if (!plan_file.empty()) plan = fold_plan::from_json(read_json_file(plan_file));
    else plan = build_fold_plan(data, config.ensemble.n_folds, config.ensemble.seeds);

    auto result = train_ensemble(frame, plan, config.ensemble);
    fs::create_directories(out_dir_eff);
    save_ensemble(result.ensemble, out_dir_eff);
    write_oof_csv((fs::path(out_dir_eff) / "oof.csv").string(), frame.row_ids, result.oof_scores);

    run_manifest manifest;
    manifest.command = "train";
    manifest.config = {{"dataset", dataset_file},
                       {"catalog", catalog_file},
                       {"plan", plan_file},
                       {"out", out_dir_eff},
                       {"min_tpr", config.min_tpr},
                       {"ensemble", config.ensemble.to_json()}};
    manifest.add_input(dataset_file);
    if (!catalog_file.empty()) manifest.add_input(catalog_file);
    if (!plan_file.empty()) manifest.add_input(plan_file);
    if (!config_path.empty()) manifest.add_input(config_path);
    manifest.outputs = {"ensemble.json", "oof.csv"};
    for (const auto& m : result.ensemble.members) manifest.outputs.push_back(m.file_name());
    manifest.write(out_dir_eff);

    std::cout << "members=" << result.ensemble.members.size() << "\n";
    for (uint64_t seed : plan.seeds) {
        for (int f = 0; f < plan.n_folds; ++f) {
            const auto& assignment = plan.fold(seed, f);
            std::vector<int> labels;
            std::vector<double> scores;
            for (size_t r = 0; r < frame.n_rows(); ++r) {
                if (!assignment.contains_validation(frame.row_patients[r])) continue;
                labels.push_back(frame.labels[r]);
                scores.push_back(result.oof_scores[r]);
            }
            std::cout << "seed=" << seed << " fold=" << f << " oof_pauc=";
            try {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.6f",
                              pauc_above_tpr(labels, scores, config.min_tpr));
                std::cout << buf;
            } catch (const error&) {
                std::cout << "n/a"; // fold without both classes
            }
            std::cout << "\n";
        }
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f",
                  pauc_above_tpr(frame.labels, result.oof_scores, config.min_tpr));
    std::cout << "oof_pauc=" << buf << "\n";
    return 0;
}

int cmd_predict(const std::string& ensemble_dir, const std::string& frame_path,
                const std::string& sidecar_path, const std::string& cache_path,
                const std::string& out_dir) {
    ensemble_model ensemble = load_ensemble(ensemble_dir);
    feature_frame frame;
    if (!cache_path.empty()) frame = load_frame_cache(cache_path);
    else {
        std::string sidecar = sidecar_path;
        if (sidecar.empty()) {
            fs::path p(frame_path);
            sidecar = (p.parent_path() / (p.stem().string() + ".columns.json")).string();
        }
        frame = import_frame_csv(frame_path, sidecar);
    }

    std::vector<double> scores = predict_ensemble(ensemble, frame);
    fs::create_directories(out_dir);
    std::vector<std::vector<std::string>> rows;
    for (size_t r = 0; r < frame.n_rows(); ++r)
        rows.push_back({frame.row_ids[r], format_double(scores[r], 17)});
    write_csv((fs::path(out_dir) / "scores.csv").string(), {"lesion_id", "score"}, rows);

    run_manifest manifest;
    manifest.command = "predict";
    manifest.config = {{"ensemble", ensemble_dir}, {"frame", frame_path},
                       {"cache", cache_path}, {"out", out_dir}};
    if (!frame_path.empty()) manifest.add_input(frame_path);
    if (!cache_path.empty()) manifest.add_input(cache_path);
    manifest.outputs = {"scores.csv"};
    manifest.write(out_dir);

    std::cout << "rows=" << frame.n_rows() << " members=" << ensemble.members.size() << "\n";
    return 0;
}

int cmd_evaluate(const std::string& labels_path, const std::string& scores_path, double min_tpr,
                 const std::string& out_dir) {
    labeled_scores data = load_labeled_scores(labels_path, scores_path);
    eval_report report = evaluate_scores(data.labels, data.scores, min_tpr);

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text_file((fs::path(out_dir) / "report.json").string(),
                        report.to_json().dump(2) + "\n");
        run_manifest manifest;
        manifest.command = "evaluate";
        manifest.config = {{"labels", labels_path}, {"scores", scores_path}, {"min_tpr", min_tpr},
                           {"out", out_dir}};
        manifest.add_input(labels_path);
        manifest.add_input(scores_path);
        manifest.outputs = {"report.json"};
        manifest.write(out_dir);
    }

    char line[64];
    std::snprintf(line, sizeof(line), "pauc=%.6f\n", report.pauc);
    std::cout << line;
    std::snprintf(line, sizeof(line), "auc=%.6f\n", report.auc);
    std::cout << line;
    return 0;
}

int cmd_report(const std::string& labels_path, const std::string& scores_path, int bins,
               const std::string& out_dir, bool csv) {
    labeled_scores data = load_labeled_scores(labels_path, scores_path);
    eval_report report = evaluate_scores(data.labels, data.scores, 0.8, bins);

    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / "report.json").string(), report.to_json().dump(2) + "\n");
    if (csv) {
        std::vector<std::vector<std::string>> rows;
        const auto& h = report.histograms;
        for (int b = 0; b < h.n_bins; ++b) {
            double lo = static_cast<double>(b) / h.n_bins;
            double hi = static_cast<double>(b + 1) / h.n_bins;
            rows.push_back({format_double(lo, 6), format_double(hi, 6),
                            std::to_string(h.tp_counts[static_cast<size_t>(b)]),
                            std::to_string(h.fp_counts[static_cast<size_t>(b)]),
                            std::to_string(h.positive_scores[static_cast<size_t>(b)]),
                            std::to_string(h.negative_scores[static_cast<size_t>(b)])});
        }
        write_csv((fs::path(out_dir) / "confidence_hist.csv").string(),
                  {"bin_lo", "bin_hi", "tp", "fp", "positive_scores", "negative_scores"}, rows);
    }

    run_manifest manifest;
    manifest.command = "report";
    manifest.config = {{"labels", labels_path}, {"scores", scores_path}, {"bins", bins},
                       {"out", out_dir}, {"csv", csv}};
    manifest.add_input(labels_path);
    manifest.add_input(scores_path);
    manifest.outputs = {"report.json"};
    if (csv) manifest.outputs.push_back("confidence_hist.csv");
    manifest.write(out_dir);

    char line[128];
    std::snprintf(line, sizeof(line), "pauc=%.6f auc=%.6f n_pos=%zu n_neg=%zu\n", report.pauc,
                  report.auc, report.n_pos, report.n_neg);
    std::cout << line;
    return 0;
}

int cmd_importance(const std::string& ensemble_dir, const std::string& out_dir) {
    ensemble_model ensemble = load_ensemble(ensemble_dir);
    auto ranked = aggregate_importance(ensemble);

    fs::create_directories(out_dir);
    std::vector<std::vector<std::string>> rows;
    for (size_t i = 0; i < ranked.size(); ++i)
        rows.push_back({std::to_string(i + 1), ranked[i].first, format_double(ranked[i].second, 10)});
    write_csv((fs::path(out_dir) / "importance.csv").string(), {"rank", "feature", "importance"},
              rows);

    run_manifest manifest;
    manifest.command = "importance";
    manifest.config = {{"ensemble", ensemble_dir}, {"out", out_dir}};
    manifest.outputs = {"importance.csv"};
    manifest.write(out_dir);

    size_t top = std::min<size_t>(10, ranked.size());
    for (size_t i = 0; i < top; ++i)
        std::cout << (i + 1) << ". " << ranked[i].first << " "
                  << format_double(ranked[i].second, 6) << "\n";
    return 0;
}

int cmd_ablate(const std::string& dataset_path, const std::string& catalog_path,
               const std::string& sweep_path, const std::string& config_path,
               const std::string& out_dir, bool parallel) {
    run_config config;
    config.ensemble.workers = default_workers();
    if (!config_path.empty()) config = run_config::from_json(read_json_file(config_path));

    std::string dataset_file = pick(dataset_path, config.dataset, "dataset");
    std::string catalog_file = pick(catalog_path, config.catalog, "catalog", false);
    std::string sweep_file = pick(sweep_path, config.sweep, "sweep spec");
    std::string out_dir_eff = pick(out_dir, config.out, "output directory");

    dataset data = load_canonical_dataset(dataset_file);
    feature_catalog catalog = load_catalog_arg(catalog_file);
    std::vector<ablation_config> configs = sweep_from_json(read_json_file(sweep_file));

    sweep_result result = run_sweep(data, configs, catalog, config.ensemble, parallel);

    fs::create_directories(out_dir_eff);
    write_sweep_csv(result, (fs::path(out_dir_eff) / "sweep.csv").string());
    std::string table = format_sweep_table(result);
    write_text_file((fs::path(out_dir_eff) / "sweep.txt").string(), table);

    run_manifest manifest;
    manifest.command = "ablate";
    manifest.config = {{"dataset", dataset_file},
                       {"catalog", catalog_file},
                       {"sweep", sweep_file},
                       {"out", out_dir_eff},
                       {"parallel", parallel},
                       {"ensemble", config.ensemble.to_json()}};
    manifest.add_input(dataset_file);
    if (!catalog_file.empty()) manifest.add_input(catalog_file);
    manifest.add_input(sweep_file);
    if (!config_path.empty()) manifest.add_input(config_path);
    manifest.outputs = {"sweep.csv", "sweep.txt"};
    manifest.write(out_dir_eff);

    std::cout << table;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"lesionboost: tabular skin-lesion triage scoring"};
    app.set_version_flag("--version", version_string);
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Load metadata CSV into the canonical dataset");
    std::string in_metadata, in_predictions, in_schema, in_out;
    ingest->add_option("--metadata", in_metadata, "Lesion metadata CSV")->required();
    ingest->add_option("--predictions", in_predictions, "External prediction CSV");
    ingest->add_option("--schema", in_schema, "Schema JSON (default: built-in)");
    ingest->add_option("--out", in_out, "Output directory")->required();

    // featurize
    auto* featurize_cmd = app.add_subcommand("featurize", "Build the feature frame");
    std::string fe_dataset, fe_catalog, fe_out;
    bool fe_cache = false;
    featurize_cmd->add_option("--dataset", fe_dataset, "Canonical dataset JSON")->required();
    featurize_cmd->add_option("--catalog", fe_catalog, "Feature catalog JSON (default: built-in)");
    featurize_cmd->add_option("--out", fe_out, "Output directory")->required();
    featurize_cmd->add_flag("--cache", fe_cache, "Also write the binary frame cache");

    // split
    auto* split = app.add_subcommand("split", "Build a patient-disjoint fold plan");
    std::string sp_dataset, sp_seeds = "1,2,3", sp_out;
    int sp_folds = 5;
    split->add_option("--dataset", sp_dataset, "Canonical dataset JSON")->required();
    split->add_option("--folds", sp_folds, "Number of folds (default 5)");
    split->add_option("--seeds", sp_seeds, "Comma-separated seeds (default 1,2,3)");
    split->add_option("--out", sp_out, "Output directory")->required();

    // train
    auto* train = app.add_subcommand("train", "Train the GBDT ensemble");
    std::string tr_dataset, tr_catalog, tr_plan, tr_config, tr_out, tr_seeds, tr_growths;
    int tr_folds = 0, tr_trees = -1, tr_workers = 0;
    double tr_sigma = -1.0, tr_ratio = 0.0;
    train->add_option("--dataset", tr_dataset, "Canonical dataset JSON (or via --config)");
    train->add_option("--catalog", tr_catalog, "Feature catalog JSON (default: built-in)");
    train->add_option("--plan", tr_plan, "Fold plan JSON (default: built from dataset)");
    train->add_option("--config", tr_config, "Run config JSON");
    train->add_option("--folds", tr_folds, "Folds (default 5)");
    train->add_option("--seeds", tr_seeds, "Comma-separated seeds (default 1,2,3)");
    train->add_option("--growths", tr_growths, "Comma-separated growth kinds");
    train->add_option("--trees", tr_trees, "Trees per model");
    train->add_option("--noise-sigma", tr_sigma, "Prediction-noise sigma (default 0.1)");
    train->add_option("--ratio", tr_ratio, "Rebalance ratio, positives per negative (default 1)");
    train->add_option("--workers", tr_workers, "Parallel member training workers");
    train->add_option("--out", tr_out, "Output directory (or via --config)");

    // predict
    auto* predict = app.add_subcommand("predict", "Score a frame with a trained ensemble");
    std::string pr_ensemble, pr_frame, pr_sidecar, pr_cache, pr_out;
    predict->add_option("--ensemble", pr_ensemble, "Ensemble directory")->required();
    predict->add_option("--frame", pr_frame, "Frame CSV");
    predict->add_option("--sidecar", pr_sidecar, "Frame sidecar JSON");
    predict->add_option("--cache", pr_cache, "Frame binary cache (alternative to --frame)");
    predict->add_option("--out", pr_out, "Output directory")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Compute pAUC above the TPR floor");
    std::string ev_labels, ev_scores, ev_out;
    double ev_min_tpr = 0.8;
    evaluate->add_option("--labels", ev_labels, "Labels CSV")->required();
    evaluate->add_option("--scores", ev_scores, "Scores CSV")->required();
    evaluate->add_option("--min-tpr", ev_min_tpr, "TPR floor (default 0.8)");
    evaluate->add_option("--out", ev_out, "Optional output directory for report.json");

    // report
    auto* report = app.add_subcommand("report", "Full evaluation report with histograms");
    std::string re_labels, re_scores, re_out;
    int re_bins = 20;
    bool re_csv = false;
    report->add_option("--labels", re_labels, "Labels CSV")->required();
    report->add_option("--scores", re_scores, "Scores CSV")->required();
    report->add_option("--bins", re_bins, "Histogram bins (default 20)");
    report->add_option("--out", re_out, "Output directory")->required();
    report->add_flag("--csv", re_csv, "Also write confidence_hist.csv");

    // importance
    auto* importance = app.add_subcommand("importance", "Aggregate ensemble feature importance");
    std::string im_ensemble, im_out;
    importance->add_option("--ensemble", im_ensemble, "Ensemble directory")->required();
    importance->add_option("--out", im_out, "Output directory")->required();

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Run a configuration sweep");
    std::string ab_dataset, ab_catalog, ab_sweep, ab_config, ab_out;
    bool ab_parallel = false;
    ablate->add_option("--dataset", ab_dataset, "Canonical dataset JSON (or via --config)");
    ablate->add_option("--catalog", ab_catalog, "Feature catalog JSON (default: built-in)");
    ablate->add_option("--sweep", ab_sweep, "Sweep spec JSON (or via --config)");
    ablate->add_option("--config", ab_config, "Run config JSON");
    ablate->add_option("--out", ab_out, "Output directory (or via --config)");
    ablate->add_flag("--parallel", ab_parallel, "Run configurations concurrently");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand(ingest))
            return cmd_ingest(in_metadata, in_predictions, in_schema, in_out);
        if (app.got_subcommand(featurize_cmd))
            return cmd_featurize(fe_dataset, fe_catalog, fe_out, fe_cache);
        if (app.got_subcommand(split)) return cmd_split(sp_dataset, sp_folds, sp_seeds, sp_out);
        if (app.got_subcommand(train))
            return cmd_train(tr_dataset, tr_catalog, tr_plan, tr_config, tr_out, tr_folds, tr_seeds,
                             tr_growths, tr_trees, tr_sigma, tr_ratio, tr_workers);
        if (app.got_subcommand(predict))
            return cmd_predict(pr_ensemble, pr_frame, pr_sidecar, pr_cache, pr_out);
        if (app.got_subcommand(evaluate))
            return cmd_evaluate(ev_labels, ev_scores, ev_min_tpr, ev_out);
        if (app.got_subcommand(report)) return cmd_report(re_labels, re_scores, re_bins, re_out, re_csv);
        if (app.got_subcommand(importance)) return cmd_importance(im_ensemble, im_out);
        if (app.got_subcommand(ablate))
            return cmd_ablate(ab_dataset, ab_catalog, ab_sweep, ab_config, ab_out, ab_parallel);
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
