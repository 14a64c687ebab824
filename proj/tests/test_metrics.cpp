#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lesionboost/metrics.hpp"
#include "test_support.hpp"

using namespace lesionboost;

TEST_CASE("roc_curve on four hand-checked thresholds") {
    std::vector<int> labels = {1, 0, 1, 0};
    std::vector<double> scores = {0.9, 0.8, 0.7, 0.1};
    roc_curve_t curve = roc_curve(labels, scores);

    REQUIRE(curve.points.size() == 5);
    CHECK(curve.points[0].fpr == 0.0);
    CHECK(curve.points[0].tpr == 0.0);
    CHECK(curve.points[1].fpr == 0.0);
    CHECK(curve.points[1].tpr == 0.5);
    CHECK(curve.points[1].threshold == 0.9);
    CHECK(curve.points[2].fpr == 0.5);
    CHECK(curve.points[2].tpr == 0.5);
    CHECK(curve.points[3].fpr == 0.5);
    CHECK(curve.points[3].tpr == 1.0);
    CHECK(curve.points[4].fpr == 1.0);
    CHECK(curve.points[4].tpr == 1.0);

    // monotone along the curve
    for (size_t i = 1; i < curve.points.size(); ++i) {
        CHECK(curve.points[i].fpr >= curve.points[i - 1].fpr);
        CHECK(curve.points[i].tpr >= curve.points[i - 1].tpr);
    }
}

TEST_CASE("roc_curve edge cases") {
    SECTION("perfect separation passes through (0,1)") {
        std::vector<int> labels = {1, 1, 0, 0};
        std::vector<double> scores = {0.9, 0.8, 0.2, 0.1};
        roc_curve_t curve = roc_curve(labels, scores);
        bool hits = false;
        for (const auto& p : curve.points) hits |= (p.fpr == 0.0 && p.tpr == 1.0);
        CHECK(hits);
    }
    SECTION("all-equal scores give the two-point diagonal") {
        std::vector<int> labels = {1, 0, 1, 0};
        std::vector<double> scores = {0.5, 0.5, 0.5, 0.5};
        roc_curve_t curve = roc_curve(labels, scores);
        REQUIRE(curve.points.size() == 2);
        CHECK(curve.points[1].fpr == 1.0);
        CHECK(curve.points[1].tpr == 1.0);
    }
    SECTION("single-class input raises") {
        std::vector<int> labels = {1, 1};
        std::vector<double> scores = {0.5, 0.6};
        CHECK_THROWS_AS(roc_curve(labels, scores), metric_error);
    }
    SECTION("non-finite scores raise") {
        std::vector<int> labels = {1, 0};
        std::vector<double> scores = {0.5, std::numeric_limits<double>::infinity()};
        CHECK_THROWS_AS(roc_curve(labels, scores), metric_error);
    }
}

TEST_CASE("pauc exact values for perfect and diagonal classifiers") {
    std::vector<int> labels = {1, 1, 1, 0, 0, 0};
    std::vector<double> perfect = {0.9, 0.8, 0.7, 0.3, 0.2, 0.1};
    // the upper bound 1 - min_tpr, exactly as doubles
    CHECK(pauc_above_tpr(labels, perfect) == 1.0 - 0.8);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", pauc_above_tpr(labels, perfect));
    CHECK(std::string(buf) == "0.200000");

    std::vector<double> equal(6, 0.4);
    CHECK(pauc_above_tpr(labels, equal) == Catch::Approx(0.02).margin(1e-12));
    std::snprintf(buf, sizeof(buf), "%.6f", pauc_above_tpr(labels, equal));
    CHECK(std::string(buf) == "0.020000");

    CHECK_THROWS_AS(pauc_above_tpr(labels, perfect, 1.0), parameter_error);
    CHECK_THROWS_AS(pauc_above_tpr(labels, perfect, -0.1), parameter_error);
}

TEST_CASE("pauc matches the dense-grid oracle on a 20-sample fixture") {
    std::mt19937_64 rng(2024);
    std::vector<int> labels;
    std::vector<double> scores;
    for (int i = 0; i < 20; ++i) {
        labels.push_back(i < 8 ? 1 : 0);
        scores.push_back(testsupport::uniform01(rng));
    }
    double got = pauc_above_tpr(labels, scores);
    double want = testsupport::pauc_grid_oracle(labels, scores, 0.8);
    CHECK(got == Catch::Approx(want).margin(1e-6));
}

TEST_CASE("pauc with min_tpr zero equals the full AUC") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        size_t n = 5 + rng() % 40;
        std::vector<int> labels(n);
        std::vector<double> scores(n);
        size_t pos = 0;
        for (size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<int>(rng() % 2);
            pos += static_cast<size_t>(labels[i]);
            scores[i] = testsupport::uniform01(rng);
        }
        if (pos == 0 || pos == n) continue;
        double full = full_auc(labels, scores);
        double via_pauc = pauc_above_tpr(labels, scores, 0.0);
        CHECK(full == Catch::Approx(via_pauc).margin(1e-9));
        double oracle = testsupport::pauc_grid_oracle(labels, scores, 0.0);
        CHECK(full == Catch::Approx(oracle).margin(1e-6));
    }
}

TEST_CASE("pauc is invariant under strictly increasing score transforms") {
    std::mt19937_64 rng(6);
    std::vector<int> labels;
    std::vector<double> scores;
    for (int i = 0; i < 30; ++i) {
        labels.push_back(static_cast<int>(rng() % 2));
        scores.push_back(testsupport::uniform01(rng));
    }
    labels[0] = 1;
    labels[1] = 0;
    double base = pauc_above_tpr(labels, scores);

    auto transformed = scores;
    for (double& s : transformed) s = 3.0 * s * s * s + 2.0; // strictly increasing on [0,1]
    CHECK(pauc_above_tpr(labels, transformed) == Catch::Approx(base).margin(1e-9));
}

TEST_CASE("pauc attains the upper bound iff TPR hits 1 at FPR 0") {
    std::vector<int> labels = {1, 1, 0, 0};
    std::vector<double> separated = {0.8, 0.7, 0.3, 0.2};
    CHECK(pauc_above_tpr(labels, separated) == 1.0 - 0.8);

    std::vector<double> overlapped = {0.8, 0.25, 0.3, 0.2};
    CHECK(pauc_above_tpr(labels, overlapped) < 1.0 - 0.8);
}

TEST_CASE("bce_loss analytic values") {
    CHECK(bce_loss(1.0, 0.5) == Catch::Approx(std::log(2.0)).margin(1e-12));
    CHECK(bce_loss(1.0, 1.0 - 1e-7) == Catch::Approx(1e-7).margin(1e-9));
    CHECK(bce_loss(1.0, 1.0) == Catch::Approx(1e-7).margin(1e-9)); // clamped

    std::vector<double> y = {1.0, 0.0};
    std::vector<double> y_hat = {0.9, 0.1};
    CHECK(bce_loss(y, y_hat) == Catch::Approx(0.105361).margin(1e-6));

    std::mt19937_64 rng(8);
    for (int i = 0; i < 100; ++i) {
        double target = static_cast<double>(rng() % 2);
        double p = testsupport::uniform01(rng);
        CHECK(bce_loss(target, p) >= 0.0);
    }
}

TEST_CASE("dice_cam_loss values") {
    SECTION("identical maps give near-zero loss") {
        map_pair pair(2, 2, {1, 1, 0, 0}, {1, 1, 0, 0});
        CHECK(dice_cam_loss(pair) == Catch::Approx(0.0).margin(1e-5));
    }
    SECTION("disjoint maps give loss 1") {
        map_pair pair(2, 2, {1, 0, 0, 0}, {0, 0, 0, 1});
        CHECK(dice_cam_loss(pair) == 1.0);
    }
    SECTION("2x2 hand value") {
        map_pair pair(2, 2, {1, 0, 0, 0}, {1, 1, 0, 0});
        double expected = 1.0 - 2.0 / (3.0 + 1e-6);
        CHECK(dice_cam_loss(pair) == Catch::Approx(expected).margin(1e-12));
        CHECK(dice_cam_loss(pair) == Catch::Approx(0.333334).margin(1e-3));
    }
    SECTION("symmetric when both maps are binary") {
        std::mt19937_64 rng(9);
        for (int t = 0; t < 20; ++t) {
            std::vector<double> a(9), b(9);
            for (size_t i = 0; i < 9; ++i) {
                a[i] = static_cast<double>(rng() % 2);
                b[i] = static_cast<double>(rng() % 2);
            }
            map_pair ab(3, 3, a, b);
            map_pair ba(3, 3, b, a);
            CHECK(dice_cam_loss(ab) == Catch::Approx(dice_cam_loss(ba)).margin(1e-12));
        }
    }
    SECTION("range [0, 1] on random inputs") {
        std::mt19937_64 rng(10);
        for (int t = 0; t < 20; ++t) {
            std::vector<double> pred(16), truth(16);
            for (size_t i = 0; i < 16; ++i) {
                pred[i] = testsupport::uniform01(rng);
                truth[i] = static_cast<double>(rng() % 2);
            }
            double v = dice_cam_loss(map_pair(4, 4, pred, truth));
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    SECTION("shape and range validation") {
        CHECK_THROWS_AS(map_pair(2, 2, {1, 0, 0}, {1, 0, 0, 0}), shape_error);
        CHECK_THROWS_AS(map_pair(1, 2, {1.5, 0}, {1, 0}), input_error);
        CHECK_THROWS_AS(map_pair(1, 2, {0.5, 0}, {0.5, 0}), input_error); // truth not binary
    }
}

TEST_CASE("seg_loss composes pixel BCE and dice") {
    SECTION("prediction equals truth") {
        map_pair pair(2, 2, {1, 0, 1, 0}, {1, 0, 1, 0});
        CHECK(seg_loss(pair) == Catch::Approx(0.0).margin(1e-5));
    }
    SECTION("uniform 0.5 prediction has BCE term exactly ln 2") {
        map_pair pair(2, 2, {0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 1});
        double dice = dice_cam_loss(pair);
        CHECK(seg_loss(pair) - dice == Catch::Approx(std::log(2.0)).margin(1e-12));
    }
    SECTION("2x2 hand-computed total") {
        map_pair pair(2, 2, {1, 0, 0, 0}, {1, 1, 0, 0});
        // pixel BCE: three near-perfect pixels (~1e-7 each), one wrong (-log 1e-7)
        double wrong = -std::log(1e-7);
        double expected_bce = wrong / 4.0;
        double expected_dice = 1.0 - 2.0 / (3.0 + 1e-6);
        CHECK(seg_loss(pair) == Catch::Approx(expected_bce + expected_dice).margin(1e-6));
    }
}

TEST_CASE("total_loss is a plain sum") {
    CHECK(total_loss(0.3, 0.2, 0.5) == 1.0);
    CHECK(total_loss(0.0, 0.0, 0.0) == 0.0);
    CHECK(total_loss(0.5, 0.3, 0.2) == total_loss(0.2, 0.5, 0.3));
}

TEST_CASE("confidence_report histograms") {
    SECTION("clean separation") {
        std::vector<int> labels = {1, 1, 1, 0, 0, 0};
        std::vector<double> scores = {0.9, 0.9, 0.9, 0.1, 0.1, 0.1};
        auto h = confidence_report(labels, scores);
        size_t fp_total = 0;
        for (size_t c : h.fp_counts) fp_total += c;
        CHECK(fp_total == 0);
        CHECK(h.tp_counts[18] == 3);      // 0.9 lands in [0.90, 0.95)
        CHECK(h.negative_scores[2] == 3); // 0.1 lands in [0.10, 0.15)
    }
    SECTION("one negative at 0.51") {
        std::vector<int> labels = {1, 0};
        std::vector<double> scores = {0.9, 0.51};
        auto h = confidence_report(labels, scores);
        size_t fp_total = 0;
        for (size_t c : h.fp_counts) fp_total += c;
        CHECK(fp_total == 1);
        CHECK(h.fp_counts[10] == 1); // floor(0.51 * 20) = 10
    }
    SECTION("totals match the population") {
        std::mt19937_64 rng(11);
        std::vector<int> labels;
        std::vector<double> scores;
        size_t n_pos = 0, n_neg = 0, n_high_pos = 0, n_high_neg = 0;
        for (int i = 0; i < 100; ++i) {
            int y = static_cast<int>(rng() % 2);
            double s = testsupport::uniform01(rng);
            labels.push_back(y);
            scores.push_back(s);
            (y ? n_pos : n_neg) += 1;
            if (s >= 0.5) (y ? n_high_pos : n_high_neg) += 1;
        }
        auto h = confidence_report(labels, scores);
        auto total = [](const std::vector<size_t>& v) {
            size_t t = 0;
            for (size_t c : v) t += c;
            return t;
        };
        CHECK(total(h.positive_scores) == n_pos);
        CHECK(total(h.negative_scores) == n_neg);
        CHECK(total(h.tp_counts) == n_high_pos);
        CHECK(total(h.fp_counts) == n_high_neg);
    }
    SECTION("parameter validation") {
        std::vector<int> labels = {1, 0};
        std::vector<double> scores = {0.5, 0.5};
        CHECK_THROWS_AS(confidence_report(labels, scores, 1), parameter_error);
        std::vector<double> bad = {0.5, 1.5};
        CHECK_THROWS_AS(confidence_report(labels, bad), input_error);
    }
}

TEST_CASE("eval report serializes rounded values") {
    std::vector<int> labels = {1, 1, 0, 0};
    std::vector<double> scores = {0.9, 0.8, 0.2, 0.1};
    eval_report report = evaluate_scores(labels, scores);
    auto j = report.to_json();
    CHECK(j["pauc"].get<double>() == 0.2);
    CHECK(j["auc"].get<double>() == 1.0);
    CHECK(j["n_pos"].get<size_t>() == 2);
    CHECK(j["roc"].size() == report.roc.points.size());
}
