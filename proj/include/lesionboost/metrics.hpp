#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lesionboost/errors.hpp"

namespace lesionboost {

struct roc_point {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

struct roc_curve_t {
    std::vector<roc_point> points; // from (0,0) to (1,1), fpr/tpr non-decreasing
    size_t n_pos = 0;
    size_t n_neg = 0;
};

namespace detail {

inline void check_binary_labels(std::span<const int> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) throw shape_error("labels and scores differ in length");
    if (labels.empty()) throw metric_error("empty input");
    size_t pos = 0;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw metric_error("labels must be 0/1");
        if (!std::isfinite(scores[i])) throw metric_error("scores must be finite");
        pos += static_cast<size_t>(labels[i]);
    }
    if (pos == 0) throw metric_error("no positive samples");
    if (pos == labels.size()) throw metric_error("no negative samples");
}

} // namespace detail

// Empirical ROC over distinct score thresholds, descending; tied scores are
// grouped at a single threshold.
inline roc_curve_t roc_curve(std::span<const int> labels, std::span<const double> scores) {
    detail::check_binary_labels(labels, scores);

    std::vector<size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    roc_curve_t curve;
    for (int l : labels) curve.n_pos += static_cast<size_t>(l);
    curve.n_neg = labels.size() - curve.n_pos;

    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    size_t tp = 0, fp = 0, i = 0;
    while (i < order.size()) {
        double threshold = scores[order[i]];
        while (i < order.size() && scores[order[i]] == threshold) {
            if (labels[order[i]] == 1) ++tp;
            else ++fp;
            ++i;
        }
        curve.points.push_back({static_cast<double>(fp) / curve.n_neg,
                                static_cast<double>(tp) / curve.n_pos, threshold});
    }
    return curve;
}

// Area between the ROC curve and the horizontal line TPR = min_tpr:
// integral of max(TPR(f) - min_tpr, 0) df, trapezoidal over ROC segments
// with linear interpolation where a segment crosses TPR = min_tpr.
// Range [0, 1 - min_tpr]; min_tpr = 0 gives the full AUC.
inline double pauc_above_tpr(const roc_curve_t& curve, double min_tpr = 0.8) {
    if (min_tpr < 0.0 || min_tpr >= 1.0) throw parameter_error("min_tpr must lie in [0, 1)");

    double area = 0.0;
    for (size_t i = 0; i + 1 < curve.points.size(); ++i) {
        const auto& a = curve.points[i];
        const auto& b = curve.points[i + 1];
        double dx = b.fpr - a.fpr;
        if (dx <= 0.0) continue;
        double h0 = a.tpr - min_tpr;
        double h1 = b.tpr - min_tpr;
        if (h0 <= 0.0 && h1 <= 0.0) continue;
        if (h0 >= 0.0 && h1 >= 0.0) {
            area += dx * 0.5 * (h0 + h1);
        } else if (h0 < 0.0) {
            // rises through the line: triangle on the right part
            double t = h0 / (h0 - h1);
            area += (1.0 - t) * dx * 0.5 * h1;
        } else {
            double t = h0 / (h0 - h1);
            area += t * dx * 0.5 * h0;
        }
    }
    return area;
}

inline double pauc_above_tpr(std::span<const int> labels, std::span<const double> scores,
                             double min_tpr = 0.8) {
    return pauc_above_tpr(roc_curve(labels, scores), min_tpr);
}

inline double full_auc(std::span<const int> labels, std::span<const double> scores) {
    return pauc_above_tpr(roc_curve(labels, scores), 0.0);
}

constexpr double probability_clamp = 1e-7;

inline double clamp_probability(double p) {
    return std::clamp(p, probability_clamp, 1.0 - probability_clamp);
}

inline double bce_loss(double y, double y_hat) {
    double p = clamp_probability(y_hat);
    return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

inline double bce_loss(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) throw shape_error("label/prediction batch size mismatch");
    if (y.empty()) throw input_error("empty batch");
    double sum = 0.0;
    for (size_t i = 0; i < y.size(); ++i) sum += bce_loss(y[i], y_hat[i]);
    return sum / static_cast<double>(y.size());
}

// Prediction map in [0,1] against a binary truth map, equal dimensions.
struct map_pair {
    size_t height = 0;
    size_t width = 0;
    std::vector<double> prediction;
    std::vector<double> truth;

    map_pair(size_t h, size_t w, std::vector<double> pred, std::vector<double> gt)
        : height(h), width(w), prediction(std::move(pred)), truth(std::move(gt)) {
        if (prediction.size() != height * width || truth.size() != height * width)
            throw shape_error("map dimensions do not match the stated height x width");
        for (double v : prediction)
            if (!(v >= 0.0 && v <= 1.0)) throw input_error("prediction map value outside [0,1]");
        for (double v : truth)
            if (v != 0.0 && v != 1.0) throw input_error("truth map must be binary");
    }
};

// 1 - 2*sum(pred*truth) / (sum(pred) + sum(truth) + eps)
inline double dice_cam_loss(const map_pair& pair, double epsilon = 1e-6) {
    double inter = 0.0, sum_pred = 0.0, sum_truth = 0.0;
    for (size_t i = 0; i < pair.prediction.size(); ++i) {
        inter += pair.prediction[i] * pair.truth[i];
        sum_pred += pair.prediction[i];
        sum_truth += pair.truth[i];
    }
    return 1.0 - 2.0 * inter / (sum_pred + sum_truth + epsilon);
}

// Mean pixel-wise BCE plus the Dice term of the prediction map.
inline double seg_loss(const map_pair& pair) {
    double bce = bce_loss(std::span<const double>(pair.truth), std::span<const double>(pair.prediction));
    return bce + dice_cam_loss(pair);
}

inline double total_loss(double cls, double cam, double seg) { return cls + cam + seg; }

struct confidence_histograms {
    int n_bins = 20;
    // Rows with score >= 0.5, split by correctness of the malignant call.
    std::vector<size_t> tp_counts;
    std::vector<size_t> fp_counts;
    // Full score distributions per true class.
    std::vector<size_t> positive_scores;
    std::vector<size_t> negative_scores;

    nlohmann::json to_json() const {
        return {{"n_bins", n_bins},
                {"tp_counts", tp_counts},
                {"fp_counts", fp_counts},
                {"positive_scores", positive_scores},
                {"negative_scores", negative_scores}};
    }
};

inline confidence_histograms confidence_report(std::span<const int> labels,
                                               std::span<const double> scores, int n_bins = 20) {
    if (n_bins < 2) throw parameter_error("n_bins must be >= 2");
    if (labels.size() != scores.size()) throw shape_error("labels and scores differ in length");
    confidence_histograms h;
    h.n_bins = n_bins;
    h.tp_counts.assign(static_cast<size_t>(n_bins), 0);
    h.fp_counts.assign(static_cast<size_t>(n_bins), 0);
    h.positive_scores.assign(static_cast<size_t>(n_bins), 0);
    h.negative_scores.assign(static_cast<size_t>(n_bins), 0);

    for (size_t i = 0; i < labels.size(); ++i) {
        double s = scores[i];
        if (!(s >= 0.0 && s <= 1.0)) throw input_error("scores must lie in [0,1]");
        size_t bin = std::min(static_cast<size_t>(s * n_bins), static_cast<size_t>(n_bins - 1));
        if (labels[i] == 1) ++h.positive_scores[bin];
        else ++h.negative_scores[bin];
        if (s >= 0.5) {
            if (labels[i] == 1) ++h.tp_counts[bin];
            else ++h.fp_counts[bin];
        }
    }
    return h;
}

struct eval_report {
    double pauc = 0.0;
    double auc = 0.0;
    double min_tpr = 0.8;
    roc_curve_t roc;
    confidence_histograms histograms;
    size_t n_pos = 0;
    size_t n_neg = 0;

    nlohmann::json to_json() const {
        auto round6 = [](double v) { return std::round(v * 1e6) / 1e6; };
        nlohmann::json points = nlohmann::json::array();
        for (const auto& p : roc.points) {
            nlohmann::json jp;
            jp["fpr"] = round6(p.fpr);
            jp["tpr"] = round6(p.tpr);
            if (std::isfinite(p.threshold)) jp["threshold"] = round6(p.threshold);
            else jp["threshold"] = nullptr;
            points.push_back(std::move(jp));
        }
        return {{"pauc", round6(pauc)},     {"auc", round6(auc)},
                {"min_tpr", round6(min_tpr)}, {"n_pos", n_pos},
                {"n_neg", n_neg},           {"roc", std::move(points)},
                {"histograms", histograms.to_json()}};
    }
};

inline eval_report evaluate_scores(std::span<const int> labels, std::span<const double> scores,
                                   double min_tpr = 0.8, int hist_bins = 20) {
    eval_report report;
    report.roc = roc_curve(labels, scores);
    report.pauc = pauc_above_tpr(report.roc, min_tpr);
    report.auc = pauc_above_tpr(report.roc, 0.0);
    report.min_tpr = min_tpr;
    report.n_pos = report.roc.n_pos;
    report.n_neg = report.roc.n_neg;
    report.histograms = confidence_report(labels, scores, hist_bins);
    return report;
}

} // namespace lesionboost
