// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Independent oracles live in test_support.hpp.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lesionboost/ablation.hpp"
#include "lesionboost/dataset.hpp"
#include "lesionboost/ensemble.hpp"
#include "lesionboost/features.hpp"
#include "lesionboost/folds.hpp"
#include "lesionboost/gbdt.hpp"
#include "lesionboost/metrics.hpp"
#include "test_support.hpp"

using namespace lesionboost;
namespace fs = std::filesystem;

namespace {

struct criterion_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& message) {
    if (!ok) throw criterion_failure(message);
}

template <typename T>
std::string str(const T& v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

int g_failures = 0;

void run_criterion(const std::string& name, const std::function<void()>& body) {
    auto start = std::chrono::steady_clock::now();
    std::string failure;
    try {
        body();
    } catch (const std::exception& e) {
        failure = e.what();
    }
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char line[512];
    if (failure.empty()) {
        std::snprintf(line, sizeof(line), "[PASS] %-28s (%.2fs)", name.c_str(), elapsed);
        std::cout << line << "\n";
    } else {
        std::snprintf(line, sizeof(line), "[FAIL] %-28s (%.2fs): %s", name.c_str(), elapsed,
                      failure.c_str());
        std::cout << line << "\n";
        ++g_failures;
    }
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

dataset fixture_dataset() {
    auto [ds, report] =
        load_dataset(testsupport::fixture_path("lesions_50.csv"), default_schema());
    auto preds =
        load_prediction_table(testsupport::fixture_path("predictions_50.csv"), ds.schema());
    return merge_prediction_columns(ds, preds).first;
}

// --------------------------------------------------------------------------
// Synthetic desk-scale dataset for the ablation-direction criterion. Signal
// is carried by interactions the catalog materializes (hue contrast, color
// difference) and, more strongly, by the external prediction columns; no raw
// column is informative on its own.
// --------------------------------------------------------------------------
dataset make_ablation_dataset() {
    dataset_schema schema = default_schema();
    std::mt19937_64 rng(424242);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * testsupport::uniform01(rng); };

    const std::vector<std::string> sites = {"anterior torso", "head/neck", "lower extremity",
                                            "posterior torso", "upper extremity"};
    std::vector<lesion_record> records;
    int id = 0;
    for (int p = 0; p < 45; ++p) {
        for (int i = 0; i < 4; ++i) {
            lesion_record r;
            r.lesion_id = "SYN_" + std::to_string(id++);
            r.patient_id = "PAT_" + std::to_string(p);
            for (const auto& col : schema.numeric_columns) r.numerics[col] = uni(-5.0, 5.0);

            double hue = uni(20.0, 80.0);
            double hue_ext = uni(20.0, 80.0);
            double da = uni(-10.0, 10.0), db = uni(-10.0, 10.0), dl = uni(-10.0, 10.0);
            r.numerics["tbp_lv_H"] = hue;
            r.numerics["tbp_lv_Hext"] = hue_ext;
            r.numerics["tbp_lv_deltaA"] = da;
            r.numerics["tbp_lv_deltaB"] = db;
            r.numerics["tbp_lv_deltaL"] = dl;
            r.numerics["tbp_lv_areaMM2"] = uni(1.0, 40.0);
            r.numerics["tbp_lv_perimeterMM"] = uni(3.0, 25.0);
            r.numerics["age_approx"] = 5.0 * std::floor(uni(5.0, 17.0));
            r.numerics["clin_size_long_diam_mm"] = uni(1.0, 10.0);

            double hue_contrast = std::fabs(hue - hue_ext) / 60.0;
            double color_diff = std::sqrt(da * da + db * db + dl * dl) / 17.32;
            double logit =
                5.0 * (hue_contrast - 0.45) + 5.0 * (color_diff - 0.5) + 0.7 * testsupport::normal01(rng);
            r.target = sigmoid(logit) > testsupport::uniform01(rng) ? 1 : 0;

            r.categoricals["sex"] = rng() % 2 ? "male" : "female";
            r.categoricals["anatom_site_general"] = sites[rng() % sites.size()];
            r.categoricals["tbp_tile_type"] = rng() % 2 ? "3D: white" : "3D: XP";
            r.categoricals["tbp_lv_location"] = "Torso Front";
            r.categoricals["tbp_lv_location_simple"] = "Torso Front";
            r.categoricals["image_type"] = "TBP tile: close-up";

            auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
            double y = static_cast<double>(r.target);
            r.predictions["predictions_eva"] = clamp01(0.3 + 0.4 * y + 0.12 * testsupport::normal01(rng));
            r.predictions["predictions_edg"] = clamp01(0.3 + 0.4 * y + 0.15 * testsupport::normal01(rng));
            r.predictions["predictions_mel"] = clamp01(0.15 + 0.5 * y + 0.15 * testsupport::normal01(rng));
            r.predictions["predictions_nev"] = clamp01(0.7 - 0.4 * y + 0.15 * testsupport::normal01(rng));
            r.predictions["predictions_bkl"] = clamp01(uni(0.0, 0.3));
            if (rng() % 11 == 0) r.origin = provenance::synthetic;
            records.push_back(std::move(r));
        }
    }
    return dataset(schema, records);
}

std::string run_cli(const std::string& args, int expected_exit, const std::string& log_tag) {
    std::string dir = testsupport::make_temp_dir("cli_" + log_tag);
    std::string log = dir + "/out.txt";
    std::string cmd = std::string(LESIONBOOST_CLI) + " " + args + " > " + log + " 2>&1";
    int rc = std::system(cmd.c_str());
    int exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream in(log);
    std::stringstream buf;
    buf << in.rdbuf();
    require(exit_code == expected_exit, "CLI exit " + str(exit_code) + " != " + str(expected_exit) +
                                            " for: " + args + "\n" + buf.str());
    return buf.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    require(static_cast<bool>(in), "cannot open " + p.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// --------------------------------------------------------------------------

void criterion_pauc_oracle() {
    std::mt19937_64 rng(20240801);
    int tested = 0;
    while (tested < 100) {
        size_t n = 4 + rng() % 47; // <= 50
        std::vector<int> labels(n);
        std::vector<double> scores(n);
        size_t pos = 0;
        for (size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<int>(rng() % 2);
            pos += static_cast<size_t>(labels[i]);
            // ties on purpose every few sets
            scores[i] = (tested % 5 == 0) ? std::round(testsupport::uniform01(rng) * 8.0) / 8.0
                                          : testsupport::uniform01(rng);
        }
        if (pos == 0 || pos == n) continue;
        ++tested;

        double got = pauc_above_tpr(labels, scores, 0.8);
        double want = testsupport::pauc_grid_oracle(labels, scores, 0.8);
        require(std::fabs(got - want) <= 1e-6,
                "set " + str(tested) + ": |" + str(got) + " - " + str(want) + "| > 1e-6");
    }

    std::vector<int> labels = {1, 1, 1, 0, 0, 0};
    std::vector<double> perfect = {0.9, 0.8, 0.7, 0.3, 0.2, 0.1};
    double p = pauc_above_tpr(labels, perfect);
    require(fmt6(p) == "0.200000" && std::fabs(p - 0.2) < 1e-12,
            "perfect classifier gave " + fmt6(p));

    std::vector<double> equal(6, 0.5);
    double d = pauc_above_tpr(labels, equal);
    require(fmt6(d) == "0.020000" && std::fabs(d - 0.02) < 1e-12, "diagonal gave " + fmt6(d));
}

void criterion_loss_identities() {
    require(std::fabs(bce_loss(1.0, 0.5) - std::log(2.0)) <= 1e-9, "bce(1, 0.5) != ln 2");

    map_pair identical(2, 2, {1, 1, 0, 1}, {1, 1, 0, 1});
    require(dice_cam_loss(identical) <= 1e-5, "identical maps dice > 1e-5");

    map_pair disjoint(2, 2, {1, 1, 0, 0}, {0, 0, 1, 1});
    require(dice_cam_loss(disjoint) >= 1.0 - 1e-5, "disjoint maps dice < 1 - 1e-5");

    double a = 0.31, b = 0.07, c = 1.25;
    require(total_loss(a, b, c) == a + b + c, "total_loss additivity violated");
    require(total_loss(0, 0, 0) == 0.0, "total_loss(0,0,0) != 0");
}

void criterion_split_oracle() {
    std::mt19937_64 rng(77001);
    for (int trial = 0; trial < 50; ++trial) {
        size_t n_rows = 20 + rng() % 180;
        size_t n_cols = 2 + rng() % 5;
        bool with_missing = trial % 4 == 0;
        bool coarse = trial % 3 == 0; // heavy ties, few distinct values

        std::vector<std::vector<double>> rows(n_rows, std::vector<double>(n_cols));
        std::vector<int> labels(n_rows);
        size_t pos = 0;
        for (size_t r = 0; r < n_rows; ++r) {
            for (size_t c = 0; c < n_cols; ++c) {
                double v = testsupport::uniform01(rng) * 8.0 - 4.0;
                if (coarse) v = std::round(v * 4.0) / 4.0;
                if (with_missing && testsupport::uniform01(rng) < 0.12) v = missing_value;
                rows[r][c] = v;
            }
            double signal = is_missing(rows[r][0]) ? 0.5 : rows[r][0];
            labels[r] = (signal + 1.5 * testsupport::normal01(rng)) > 0 ? 1 : 0;
            pos += static_cast<size_t>(labels[r]);
        }
        if (pos == 0) labels[0] = 1;
        if (pos == n_rows) labels[0] = 0;

        feature_frame frame = testsupport::make_frame(rows, labels);
        gbdt_config cfg;
        cfg.n_trees = 1;
        cfg.n_bins = 255;

        boosted_model model = train_gbdt(frame, cfg, growth_kind::leafwise, 1);
        auto oracle = testsupport::brute_force_first_split(frame, cfg);
        require(oracle.valid, "trial " + str(trial) + ": oracle found no split");
        require(!model.trees.empty() && !model.trees[0][0].is_leaf(),
                "trial " + str(trial) + ": learner did not split");
        const tree_node& root = model.trees[0][0];
        require(root.feature == oracle.feature,
                "trial " + str(trial) + ": feature " + str(root.feature) + " != oracle " +
                    str(oracle.feature));
        require(std::fabs(root.threshold - oracle.threshold) <= 1e-12,
                "trial " + str(trial) + ": threshold " + str(root.threshold) + " != oracle " +
                    str(oracle.threshold));
    }
}

void criterion_separable_convergence() {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 12; ++i) {
        rows.push_back({-2.0 - 0.31 * i});
        labels.push_back(0);
        rows.push_back({1.5 + 0.27 * i});
        labels.push_back(1);
    }
    feature_frame frame = testsupport::make_frame(rows, labels);

    gbdt_config cfg;
    cfg.n_trees = 10;
    cfg.learning_rate = 0.3;
    for (growth_kind growth :
         {growth_kind::leafwise, growth_kind::levelwise, growth_kind::oblivious}) {
        boosted_model model = train_gbdt(frame, cfg, growth, 1);
        for (size_t t = 1; t < model.loss_trace.size(); ++t)
            require(model.loss_trace[t] <= model.loss_trace[t - 1] + 1e-12,
                    to_string(growth) + ": loss increased at round " + str(t));
        std::vector<double> p = model.predict(frame);
        for (size_t r = 0; r < frame.n_rows(); ++r)
            require((p[r] > 0.5) == (frame.labels[r] == 1),
                    to_string(growth) + ": row " + str(r) + " misclassified");
    }
}

void criterion_ensemble_structure() {
    dataset ds = fixture_dataset();
    feature_frame frame = featurize(ds, default_catalog()).frame;

    ensemble_config cfg; // default: 3 seeds x 5 folds x 3 growths
    cfg.gbdt.n_trees = 8;
    cfg.gbdt.max_leaves = 7;
    cfg.gbdt.max_depth = 3;
    fold_plan plan = build_fold_plan(ds, cfg.n_folds, cfg.seeds);
    auto result = train_ensemble(frame, plan, cfg);
    require(result.ensemble.members.size() == 45,
            "member count " + str(result.ensemble.members.size()) + " != 45");

    size_t violations = 0;
    for (const auto& m : result.ensemble.members) {
        const auto& assignment = plan.fold(m.seed, m.fold);
        for (size_t r = 0; r < frame.n_rows(); ++r) {
            const auto& patient = frame.row_patients[r];
            if (assignment.contains_validation(patient) && assignment.contains_train(patient))
                ++violations;
        }
    }
    require(violations == 0, str(violations) + " OOF leakage violations");
}

void criterion_fold_properties() {
    dataset ds = fixture_dataset();
    for (int folds : {3, 5}) {
        fold_plan plan = build_fold_plan(ds, folds, {1, 2, 3});
        for (uint64_t seed : plan.seeds) {
            std::set<std::string> covered;
            for (int f = 0; f < folds; ++f) {
                const auto& a = plan.fold(seed, f);
                for (const auto& p : a.validation_patients) {
                    require(!a.contains_train(p), "patient " + p + " in both partitions");
                    require(covered.insert(p).second, "patient " + p + " in two validation folds");
                }
            }
            require(covered.size() == ds.patient_groups().size(), "validation folds do not cover");
        }
        require(plan.max_positive_rate_deviation <= 0.5,
                "positive-rate deviation " + str(plan.max_positive_rate_deviation) + " > 0.5");
    }
}

void criterion_feature_counts() {
    dataset ds = fixture_dataset();
    feature_frame frame = featurize(ds, default_catalog()).frame;
    auto counts = frame.group_counts();
    require(counts[feature_group::raw_numeric] == 34, "raw_numeric != 34");
    require(counts[feature_group::onehot] == 47, "onehot != 47");
    require(counts[feature_group::engineered] == 43, "engineered != 43");
    require(counts[feature_group::patient_norm] == 76, "patient_norm != 76");
    require(counts[feature_group::patient_agg] == 3, "patient_agg != 3");
    require(counts[feature_group::external_pred] == 5, "external_pred != 5");
    require(frame.n_cols() == 214, "total " + str(frame.n_cols()) + " != 214");
}

void criterion_noise_injection() {
    feature_frame frame;
    for (int c = 0; c < 5; ++c)
        frame.columns.push_back({"p" + str(c), feature_group::external_pred, ""});
    std::mt19937_64 rng(13);
    for (int r = 0; r < 2000; ++r) {
        frame.row_ids.push_back("L" + str(r));
        frame.row_patients.push_back("P" + str(r));
        frame.labels.push_back(r % 2);
        for (int c = 0; c < 5; ++c) frame.values.push_back(testsupport::uniform01(rng));
    }

    feature_frame zero = inject_prediction_noise(frame, 0.0, 99);
    require(zero.values == frame.values, "sigma = 0 modified the frame");

    feature_frame noisy = inject_prediction_noise(frame, 0.1, 99);
    double sum = 0.0, sum2 = 0.0;
    for (size_t i = 0; i < frame.values.size(); ++i) {
        double d = noisy.values[i] - frame.values[i];
        sum += d;
        sum2 += d * d;
    }
    double n = static_cast<double>(frame.values.size());
    double std_dev = std::sqrt(sum2 / n - (sum / n) * (sum / n));
    require(std_dev >= 0.095 && std_dev <= 0.105, "noise std " + str(std_dev) + " outside range");
}

void criterion_ablation_direction() {
    dataset ds = make_ablation_dataset();

    ensemble_config cfg; // full 3 x 5 x 3 structure
    cfg.gbdt.n_trees = 40;
    cfg.gbdt.max_leaves = 15;
    cfg.gbdt.max_depth = 4;
    cfg.workers = 4;

    std::vector<ablation_config> configs = {
        {"raw", false, false, false, true, std::nullopt},
        {"engineered", true, true, false, true, std::nullopt},
        {"with_predictions", true, true, true, true, std::nullopt},
    };
    auto result = run_sweep(ds, configs, default_catalog(), cfg);
    double raw = result.rows[0].pauc;
    double eng = result.rows[1].pauc;
    double full = result.rows[2].pauc;
    require(raw < eng, "raw " + fmt6(raw) + " !< engineered " + fmt6(eng));
    require(eng < full, "engineered " + fmt6(eng) + " !< with_predictions " + fmt6(full));
    std::cout << "       ablation pAUC: raw=" << fmt6(raw) << " engineered=" << fmt6(eng)
              << " with_predictions=" << fmt6(full) << "\n";
}

void criterion_cli_determinism() {
    std::string work = testsupport::make_temp_dir("determinism");
    std::string fixtures = LESIONBOOST_FIXTURE_DIR;

    run_cli("ingest --metadata " + fixtures + "/lesions_50.csv --predictions " + fixtures +
                "/predictions_50.csv --out " + work + "/ing",
            0, "ingest");
    std::string dataset_path = work + "/ing/dataset.json";

    std::string train_args = "train --dataset " + dataset_path + " --trees 10 --out ";
    std::string out1 = run_cli(train_args + work + "/run1", 0, "train1");
    run_cli(train_args + work + "/run2", 0, "train2");
    require(out1.find("members=45") != std::string::npos, "train did not report members=45");

    size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(work + "/run1")) {
        std::string name = entry.path().filename().string();
        if (name == "run_manifest.json") continue; // embeds the differing --out path
        std::string first = slurp(entry.path());
        std::string second = slurp(fs::path(work + "/run2") / name);
        require(first == second, "artifact " + name + " differs between reruns");
        ++compared;
    }
    require(compared >= 47, "expected 45 models + ensemble.json + oof.csv, compared " + str(compared));

    // spec'd CLI example: perfect separation evaluates to pauc=0.200000
    std::string eval_out = run_cli("evaluate --labels " + fixtures + "/labels_perfect.csv" +
                                       " --scores " + fixtures + "/scores_perfect.csv --min-tpr 0.8",
                                   0, "evaluate");
    require(eval_out.find("pauc=0.200000") != std::string::npos,
            "evaluate printed: " + eval_out);

    // unknown flag is a usage error (exit 2)
    run_cli("evaluate --no-such-flag", 2, "usage");
}

} // namespace

int main() {
    run_criterion("pauc_oracle_equivalence", criterion_pauc_oracle);
    run_criterion("loss_identities", criterion_loss_identities);
    run_criterion("split_oracle_equivalence", criterion_split_oracle);
    run_criterion("separable_convergence", criterion_separable_convergence);
    run_criterion("ensemble_structure", criterion_ensemble_structure);
    run_criterion("fold_properties", criterion_fold_properties);
    run_criterion("feature_counts", criterion_feature_counts);
    run_criterion("noise_injection", criterion_noise_injection);
    run_criterion("ablation_direction", criterion_ablation_direction);
    run_criterion("cli_determinism", criterion_cli_determinism);

    if (g_failures) {
        std::cout << g_failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
