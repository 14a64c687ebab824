#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "lesionboost/errors.hpp"
#include "lesionboost/features.hpp"
#include "lesionboost/metrics.hpp"

namespace lesionboost {

struct gbdt_config {
    int n_trees = 200;
    double learning_rate = 0.1;
    int max_leaves = 31; // leafwise
    int max_depth = 6;   // levelwise and oblivious
    double min_child_weight = 1e-3;
    double l2_lambda = 1.0;
    int n_bins = 255;

    bool operator==(const gbdt_config&) const = default;

    nlohmann::json to_json() const {
        return {{"n_trees", n_trees},
                {"learning_rate", learning_rate},
                {"max_leaves", max_leaves},
                {"max_depth", max_depth},
                {"min_child_weight", min_child_weight},
                {"l2_lambda", l2_lambda},
                {"n_bins", n_bins}};
    }

    static gbdt_config from_json(const nlohmann::json& j) {
        gbdt_config c;
        c.n_trees = j.value("n_trees", c.n_trees);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.max_leaves = j.value("max_leaves", c.max_leaves);
        c.max_depth = j.value("max_depth", c.max_depth);
        c.min_child_weight = j.value("min_child_weight", c.min_child_weight);
        c.l2_lambda = j.value("l2_lambda", c.l2_lambda);
        c.n_bins = j.value("n_bins", c.n_bins);
        return c;
    }
};

// The three tree-growth strategies that give the ensemble its model-type
// diversity: best-first by gain, breadth-first by depth, and symmetric
// (same split at every node of a level).
enum class growth_kind : uint8_t { leafwise, levelwise, oblivious };

inline std::string to_string(growth_kind g) {
    switch (g) {
        case growth_kind::leafwise: return "leafwise";
        case growth_kind::levelwise: return "levelwise";
        case growth_kind::oblivious: return "oblivious";
    }
    return "leafwise";
}

inline growth_kind growth_from_string(const std::string& s) {
    if (s == "leafwise") return growth_kind::leafwise;
    if (s == "levelwise") return growth_kind::levelwise;
    if (s == "oblivious") return growth_kind::oblivious;
    throw parameter_error("unknown growth kind '" + s + "'");
}

struct tree_node {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    bool missing_left = true;
    int left = -1;
    int right = -1;
    double value = 0.0; // leaf log-odds increment, learning rate included

    bool is_leaf() const { return feature < 0; }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct boosted_model {
    std::vector<std::vector<tree_node>> trees;
    double base_score = 0.0; // log-odds of the training positive rate
    growth_kind growth = growth_kind::leafwise;
    gbdt_config config;
    std::vector<std::string> feature_names;
    std::vector<double> gain_importance; // accumulated split gain per feature
    std::vector<double> loss_trace;      // entry 0 = loss at base score, then per round
    uint64_t seed = 0;

    double predict_row(std::span<const double> row) const {
        if (row.size() != feature_names.size())
            throw shape_error("row width " + std::to_string(row.size()) + " != " +
                              std::to_string(feature_names.size()) + " model features");
        double score = base_score;
        for (const auto& tree : trees) {
            int node = 0;
            while (!tree[static_cast<size_t>(node)].is_leaf()) {
                const auto& n = tree[static_cast<size_t>(node)];
                double v = row[static_cast<size_t>(n.feature)];
                bool left = is_missing(v) ? n.missing_left : v <= n.threshold;
                node = left ? n.left : n.right;
            }
            score += tree[static_cast<size_t>(node)].value;
        }
        return sigmoid(score);
    }

    std::vector<double> predict(const feature_frame& frame) const {
        std::vector<double> out(frame.n_rows());
        for (size_t r = 0; r < frame.n_rows(); ++r) out[r] = predict_row(frame.row(r));
        return out;
    }
};

// Total split gain per feature, normalized to sum to one. A model that never
// split yields the all-zero vector.
inline std::vector<double> feature_importance(const boosted_model& model) {
    std::vector<double> out = model.gain_importance;
    double total = std::accumulate(out.begin(), out.end(), 0.0);
    if (total <= 0.0) return std::vector<double>(out.size(), 0.0);
    for (double& v : out) v /= total;
    return out;
}

namespace gbdt_detail {

struct binned_data {
    size_t n_rows = 0;
    size_t n_features = 0;
    std::vector<uint16_t> bins; // row-major
    std::vector<std::vector<double>> thresholds; // split value after bin b
    std::vector<int> n_finite_bins;

    int missing_bin(size_t f) const { return n_finite_bins[f]; }
    int total_bins(size_t f) const { return n_finite_bins[f] + 1; }
};

// Quantile binning. Every distinct value gets its own bin when there are at
// most n_bins of them, which makes histogram splits exactly the greedy
// splits on such data.
inline binned_data bin_features(const feature_frame& frame, int n_bins) {
    binned_data data;
    data.n_rows = frame.n_rows();
    data.n_features = frame.n_cols();
    data.bins.assign(data.n_rows * data.n_features, 0);
    data.thresholds.resize(data.n_features);
    data.n_finite_bins.resize(data.n_features);

    for (size_t f = 0; f < data.n_features; ++f) {
        std::vector<double> values;
        values.reserve(data.n_rows);
        for (size_t r = 0; r < data.n_rows; ++r) {
            double v = frame.at(r, f);
            if (!is_missing(v)) values.push_back(v);
        }
        std::sort(values.begin(), values.end());

        std::vector<double> distinct;
        std::vector<size_t> cum_counts;
        for (double v : values) {
            if (distinct.empty() || v != distinct.back()) {
                distinct.push_back(v);
                cum_counts.push_back(cum_counts.empty() ? 1 : cum_counts.back() + 1);
            } else {
                ++cum_counts.back();
            }
        }

        auto& cuts = data.thresholds[f];
        if (distinct.size() <= static_cast<size_t>(n_bins)) {
            for (size_t i = 0; i + 1 < distinct.size(); ++i)
                cuts.push_back(0.5 * (distinct[i] + distinct[i + 1]));
        } else {
            const double total = static_cast<double>(values.size());
            size_t pos = 0;
            for (int k = 1; k < n_bins; ++k) {
                double target = total * k / n_bins;
                while (pos + 1 < distinct.size() && static_cast<double>(cum_counts[pos]) < target) ++pos;
                if (pos + 1 >= distinct.size()) break;
                double cut = 0.5 * (distinct[pos] + distinct[pos + 1]);
                if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
            }
        }
        data.n_finite_bins[f] = static_cast<int>(cuts.size()) + 1;

        for (size_t r = 0; r < data.n_rows; ++r) {
            double v = frame.at(r, f);
            uint16_t bin;
            if (is_missing(v)) {
                bin = static_cast<uint16_t>(data.missing_bin(f));
            } else {
                bin = static_cast<uint16_t>(
                    std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
            }
            data.bins[r * data.n_features + f] = bin;
        }
    }
    return data;
}

struct hist_entry {
    double g = 0.0;
    double h = 0.0;
    uint32_t c = 0;
};

struct split_candidate {
    bool valid = false;
    double gain = 0.0;
    int feature = -1;
    int bin = -1; // split after this bin
    bool missing_left = true;
    double threshold = 0.0;
};

inline double leaf_objective(double g, double h, double lambda) { return g * g / (h + lambda); }

// Node-local histograms for every feature, concatenated with offsets.
struct node_histogram {
    std::vector<hist_entry> entries;
    std::vector<size_t> offsets;

    void build(const binned_data& data, const std::vector<uint32_t>& rows,
               const std::vector<double>& grad, const std::vector<double>& hess) {
        offsets.assign(data.n_features + 1, 0);
        for (size_t f = 0; f < data.n_features; ++f)
            offsets[f + 1] = offsets[f] + static_cast<size_t>(data.total_bins(f));
        entries.assign(offsets.back(), {});
        for (uint32_t r : rows) {
            const uint16_t* row_bins = data.bins.data() + static_cast<size_t>(r) * data.n_features;
            for (size_t f = 0; f < data.n_features; ++f) {
                auto& e = entries[offsets[f] + row_bins[f]];
                e.g += grad[r];
                e.h += hess[r];
                e.c += 1;
            }
        }
    }

    const hist_entry* feature(size_t f) const { return entries.data() + offsets[f]; }
};

// Best histogram split of one node. Candidate order is fixed (feature asc,
// bin asc, missing-left before missing-right) so ties resolve
// deterministically and identically to the brute-force reference.
inline split_candidate best_split(const binned_data& data, const node_histogram& hist, double G,
                                  double H, uint32_t C, const gbdt_config& cfg) {
    split_candidate best;
    const double parent_obj = leaf_objective(G, H, cfg.l2_lambda);

    for (size_t f = 0; f < data.n_features; ++f) {
        const hist_entry* e = hist.feature(f);
        const int finite = data.n_finite_bins[f];
        const hist_entry& miss = e[finite];

        double acc_g = 0.0, acc_h = 0.0;
        uint32_t acc_c = 0;
        for (int b = 0; b + 1 < finite; ++b) {
            acc_g += e[b].g;
            acc_h += e[b].h;
            acc_c += e[b].c;

            for (int dir = 0; dir < (miss.c > 0 ? 2 : 1); ++dir) {
                const bool missing_left = dir == 0;
                double gl = acc_g + (missing_left ? miss.g : 0.0);
                double hl = acc_h + (missing_left ? miss.h : 0.0);
                uint32_t cl = acc_c + (missing_left ? miss.c : 0);
                double gr = G - gl;
                double hr = H - hl;
                uint32_t cr = C - cl;
                if (cl == 0 || cr == 0) continue;
                if (hl < cfg.min_child_weight || hr < cfg.min_child_weight) continue;
                double gain = 0.5 * (leaf_objective(gl, hl, cfg.l2_lambda) +
                                     leaf_objective(gr, hr, cfg.l2_lambda) - parent_obj);
                if (!best.valid || gain > best.gain) {
                    best.valid = true;
                    best.gain = gain;
                    best.feature = static_cast<int>(f);
                    best.bin = b;
                    best.missing_left = missing_left;
                    best.threshold = data.thresholds[f][static_cast<size_t>(b)];
                }
            }
        }
    }
    return best;
}

inline void partition_rows(const binned_data& data, const std::vector<uint32_t>& rows,
                           const split_candidate& split, std::vector<uint32_t>& left,
                           std::vector<uint32_t>& right) {
    left.clear();
    right.clear();
    const size_t f = static_cast<size_t>(split.feature);
    const uint16_t missing = static_cast<uint16_t>(data.missing_bin(f));
    for (uint32_t r : rows) {
        uint16_t b = data.bins[static_cast<size_t>(r) * data.n_features + f];
        bool goes_left = b == missing ? split.missing_left : b <= split.bin;
        (goes_left ? left : right).push_back(r);
    }
}

struct build_context {
    const binned_data& data;
    const std::vector<double>& grad;
    const std::vector<double>& hess;
    const gbdt_config& cfg;
    std::vector<double>& importance;
    std::vector<double>& row_updates; // leaf value per training row
};

inline double leaf_value(double g, double h, const gbdt_config& cfg) {
    return -cfg.learning_rate * g / (h + cfg.l2_lambda);
}

struct grow_node {
    std::vector<uint32_t> rows;
    double g_sum = 0.0, h_sum = 0.0;
    int node_index = 0;
    int depth = 0;
    split_candidate split;
    uint64_t order = 0; // insertion counter, deterministic tie-break
};

inline void finalize_leaf(build_context& ctx, std::vector<tree_node>& tree, const grow_node& n) {
    double v = leaf_value(n.g_sum, n.h_sum, ctx.cfg);
    tree[static_cast<size_t>(n.node_index)].value = v;
    for (uint32_t r : n.rows) ctx.row_updates[r] = v;
}

inline std::vector<tree_node> grow_leafwise(build_context& ctx) {
    std::vector<tree_node> tree(1);
    node_histogram hist;

    auto make_node = [&](std::vector<uint32_t> rows, int node_index, uint64_t order) {
        grow_node n;
        n.rows = std::move(rows);
        n.node_index = node_index;
        n.order = order;
        for (uint32_t r : n.rows) {
            n.g_sum += ctx.grad[r];
            n.h_sum += ctx.hess[r];
        }
        hist.build(ctx.data, n.rows, ctx.grad, ctx.hess);
        n.split = best_split(ctx.data, hist, n.g_sum, n.h_sum,
                             static_cast<uint32_t>(n.rows.size()), ctx.cfg);
        return n;
    };

    auto cmp = [](const grow_node& a, const grow_node& b) {
        if (a.split.gain != b.split.gain) return a.split.gain < b.split.gain;
        return a.order > b.order;
    };
    std::priority_queue<grow_node, std::vector<grow_node>, decltype(cmp)> queue(cmp);

    std::vector<uint32_t> all(ctx.data.n_rows);
    std::iota(all.begin(), all.end(), 0);
    uint64_t counter = 0;
    grow_node root = make_node(std::move(all), 0, counter++);
    int leaves = 1;
    if (root.split.valid && root.split.gain > 0.0) queue.push(std::move(root));
    else {
        finalize_leaf(ctx, tree, root);
        return tree;
    }

    std::vector<grow_node> settled;
    while (!queue.empty() && leaves < ctx.cfg.max_leaves) {
        grow_node n = queue.top();
        queue.pop();

        const int left_index = static_cast<int>(tree.size());
        const int right_index = left_index + 1;
        {
            auto& parent = tree[static_cast<size_t>(n.node_index)];
            parent.feature = n.split.feature;
            parent.threshold = n.split.threshold;
            parent.missing_left = n.split.missing_left;
            parent.left = left_index;
            parent.right = right_index;
        }
        tree.emplace_back();
        tree.emplace_back();
        ctx.importance[static_cast<size_t>(n.split.feature)] += n.split.gain;

        std::vector<uint32_t> left_rows, right_rows;
        partition_rows(ctx.data, n.rows, n.split, left_rows, right_rows);
        ++leaves;

        grow_node left_child = make_node(std::move(left_rows), left_index, counter++);
        if (left_child.split.valid && left_child.split.gain > 0.0) queue.push(std::move(left_child));
        else settled.push_back(std::move(left_child));

        grow_node right_child = make_node(std::move(right_rows), right_index, counter++);
        if (right_child.split.valid && right_child.split.gain > 0.0) queue.push(std::move(right_child));
        else settled.push_back(std::move(right_child));
    }
    while (!queue.empty()) {
        settled.push_back(queue.top());
        queue.pop();
    }
    for (const auto& n : settled) finalize_leaf(ctx, tree, n);
    return tree;
}

inline std::vector<tree_node> grow_levelwise(build_context& ctx) {
    std::vector<tree_node> tree(1);
    node_histogram hist;

    std::vector<grow_node> frontier(1);
    frontier[0].rows.resize(ctx.data.n_rows);
    std::iota(frontier[0].rows.begin(), frontier[0].rows.end(), 0);
    for (uint32_t r : frontier[0].rows) {
        frontier[0].g_sum += ctx.grad[r];
        frontier[0].h_sum += ctx.hess[r];
    }

    for (int depth = 0; depth < ctx.cfg.max_depth && !frontier.empty(); ++depth) {
        std::vector<grow_node> next;
        for (auto& n : frontier) {
            hist.build(ctx.data, n.rows, ctx.grad, ctx.hess);
            split_candidate split = best_split(ctx.data, hist, n.g_sum, n.h_sum,
                                               static_cast<uint32_t>(n.rows.size()), ctx.cfg);
            if (!split.valid || split.gain <= 0.0) {
                finalize_leaf(ctx, tree, n);
                continue;
            }
            const int left_index = static_cast<int>(tree.size());
            const int right_index = left_index + 1;
            {
                auto& parent = tree[static_cast<size_t>(n.node_index)];
                parent.feature = split.feature;
                parent.threshold = split.threshold;
                parent.missing_left = split.missing_left;
                parent.left = left_index;
                parent.right = right_index;
            }
            tree.emplace_back();
            tree.emplace_back();
            ctx.importance[static_cast<size_t>(split.feature)] += split.gain;

            grow_node left, right;
            partition_rows(ctx.data, n.rows, split, left.rows, right.rows);
            left.node_index = left_index;
            right.node_index = right_index;
            for (uint32_t r : left.rows) {
                left.g_sum += ctx.grad[r];
                left.h_sum += ctx.hess[r];
            }
            for (uint32_t r : right.rows) {
                right.g_sum += ctx.grad[r];
                right.h_sum += ctx.hess[r];
            }
            next.push_back(std::move(left));
            next.push_back(std::move(right));
        }
        frontier = std::move(next);
    }
    for (const auto& n : frontier) finalize_leaf(ctx, tree, n);
    return tree;
}

// Symmetric trees: one (feature, threshold, missing direction) per depth,
// chosen to maximize the summed positive gain over all current leaves. The
// shared split applies to every leaf, so a leaf may produce an empty child;
// empty children settle at value 0.
inline std::vector<tree_node> grow_oblivious(build_context& ctx) {
    std::vector<tree_node> tree(1);

    std::vector<grow_node> frontier(1);
    frontier[0].rows.resize(ctx.data.n_rows);
    std::iota(frontier[0].rows.begin(), frontier[0].rows.end(), 0);
    for (uint32_t r : frontier[0].rows) {
        frontier[0].g_sum += ctx.grad[r];
        frontier[0].h_sum += ctx.hess[r];
    }

    for (int depth = 0; depth < ctx.cfg.max_depth; ++depth) {
        std::vector<node_histogram> hists(frontier.size());
        for (size_t i = 0; i < frontier.size(); ++i)
            if (!frontier[i].rows.empty())
                hists[i].build(ctx.data, frontier[i].rows, ctx.grad, ctx.hess);

        split_candidate best;
        double best_total = 0.0;
        std::vector<hist_entry> prefix; // per leaf, cumulative up to current bin

        for (size_t f = 0; f < ctx.data.n_features; ++f) {
            const int finite = ctx.data.n_finite_bins[f];
            if (finite < 2) continue;
            prefix.assign(frontier.size(), {});
            for (int b = 0; b + 1 < finite; ++b) {
                for (size_t i = 0; i < frontier.size(); ++i) {
                    if (frontier[i].rows.empty()) continue;
                    const hist_entry& e = hists[i].feature(f)[b];
                    prefix[i].g += e.g;
                    prefix[i].h += e.h;
                    prefix[i].c += e.c;
                }
                for (int dir = 0; dir < 2; ++dir) {
                    const bool missing_left = dir == 0;
                    double total = 0.0;
                    bool any_valid = false;
                    for (size_t i = 0; i < frontier.size(); ++i) {
                        const auto& n = frontier[i];
                        if (n.rows.empty()) continue;
                        const hist_entry& miss = hists[i].feature(f)[finite];
                        double gl = prefix[i].g + (missing_left ? miss.g : 0.0);
                        double hl = prefix[i].h + (missing_left ? miss.h : 0.0);
                        uint32_t cl = prefix[i].c + (missing_left ? miss.c : 0);
                        double gr = n.g_sum - gl;
                        double hr = n.h_sum - hl;
                        uint32_t cr = static_cast<uint32_t>(n.rows.size()) - cl;
                        if (cl == 0 || cr == 0) continue;
                        if (hl < ctx.cfg.min_child_weight || hr < ctx.cfg.min_child_weight) continue;
                        double gain = 0.5 * (leaf_objective(gl, hl, ctx.cfg.l2_lambda) +
                                             leaf_objective(gr, hr, ctx.cfg.l2_lambda) -
                                             leaf_objective(n.g_sum, n.h_sum, ctx.cfg.l2_lambda));
                        if (gain > 0.0) {
                            total += gain;
                            any_valid = true;
                        }
                    }
                    if (any_valid && total > best_total) {
                        best_total = total;
                        best.valid = true;
                        best.gain = total;
                        best.feature = static_cast<int>(f);
                        best.bin = b;
                        best.missing_left = missing_left;
                        best.threshold = ctx.data.thresholds[f][static_cast<size_t>(b)];
                    }
                }
            }
        }

        if (!best.valid) break;
        ctx.importance[static_cast<size_t>(best.feature)] += best_total;

        std::vector<grow_node> next;
        next.reserve(frontier.size() * 2);
        for (auto& n : frontier) {
            const int left_index = static_cast<int>(tree.size());
            const int right_index = left_index + 1;
            {
                auto& parent = tree[static_cast<size_t>(n.node_index)];
                parent.feature = best.feature;
                parent.threshold = best.threshold;
                parent.missing_left = best.missing_left;
                parent.left = left_index;
                parent.right = right_index;
            }
            tree.emplace_back();
            tree.emplace_back();

            grow_node left, right;
            partition_rows(ctx.data, n.rows, best, left.rows, right.rows);
            left.node_index = left_index;
            right.node_index = right_index;
            for (uint32_t r : left.rows) {
                left.g_sum += ctx.grad[r];
                left.h_sum += ctx.hess[r];
            }
            for (uint32_t r : right.rows) {
                right.g_sum += ctx.grad[r];
                right.h_sum += ctx.hess[r];
            }
            next.push_back(std::move(left));
            next.push_back(std::move(right));
        }
        frontier = std::move(next);
    }
    for (const auto& n : frontier) finalize_leaf(ctx, tree, n);
    return tree;
}

} // namespace gbdt_detail

// Boosted binary logistic training. Per round: g = p - y, h = p(1 - p),
// histogram second-order gain, leaf value -lr * G / (H + lambda).
inline boosted_model train_gbdt(const feature_frame& frame, const gbdt_config& config,
                                growth_kind growth, uint64_t seed) {
    const size_t n = frame.n_rows();
    if (n < 2) throw training_error("need at least 2 rows");
    if (config.n_bins < 2 || config.n_bins > 256)
        throw parameter_error("n_bins must lie in [2, 256]");
    if (config.n_trees < 0) throw parameter_error("n_trees must be >= 0");

    size_t n_pos = 0;
    for (int y : frame.labels) {
        if (y != 0 && y != 1) throw training_error("labels must be 0/1");
        n_pos += static_cast<size_t>(y);
    }
    if (n_pos == 0 || n_pos == n) throw training_error("training rows contain a single class");
    for (double v : frame.values)
        if (std::isinf(v)) throw data_error("non-finite feature value (only NaN marks missing)");

    boosted_model model;
    model.growth = growth;
    model.config = config;
    model.feature_names = frame.feature_names();
    model.gain_importance.assign(frame.n_cols(), 0.0);
    model.seed = seed;

    const double pos_rate = static_cast<double>(n_pos) / static_cast<double>(n);
    model.base_score = std::log(pos_rate / (1.0 - pos_rate));

    gbdt_detail::binned_data data = gbdt_detail::bin_features(frame, config.n_bins);

    std::vector<double> scores(n, model.base_score);
    std::vector<double> grad(n), hess(n), updates(n);

    auto mean_logloss = [&] {
        double sum = 0.0;
        for (size_t i = 0; i < n; ++i)
            sum += bce_loss(static_cast<double>(frame.labels[i]), sigmoid(scores[i]));
        return sum / static_cast<double>(n);
    };
    model.loss_trace.push_back(mean_logloss());

    for (int t = 0; t < config.n_trees; ++t) {
        for (size_t i = 0; i < n; ++i) {
            double p = sigmoid(scores[i]);
            grad[i] = p - static_cast<double>(frame.labels[i]);
            hess[i] = p * (1.0 - p);
        }
        std::fill(updates.begin(), updates.end(), 0.0);
        gbdt_detail::build_context ctx{data, grad, hess, config, model.gain_importance, updates};

        std::vector<tree_node> tree;
        switch (growth) {
            case growth_kind::leafwise: tree = gbdt_detail::grow_leafwise(ctx); break;
            case growth_kind::levelwise: tree = gbdt_detail::grow_levelwise(ctx); break;
            case growth_kind::oblivious: tree = gbdt_detail::grow_oblivious(ctx); break;
        }
        for (size_t i = 0; i < n; ++i) scores[i] += updates[i];
        model.trees.push_back(std::move(tree));
        model.loss_trace.push_back(mean_logloss());
    }
    return model;
}

inline constexpr int model_format_version = 1;

inline nlohmann::json model_to_json(const boosted_model& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees) {
        nlohmann::json jt = nlohmann::json::array();
        for (const auto& n : tree)
            jt.push_back({{"f", n.feature},
                          {"t", n.threshold},
                          {"ml", n.missing_left},
                          {"l", n.left},
                          {"r", n.right},
                          {"v", n.value}});
        trees.push_back(std::move(jt));
    }
    return {{"format_version", model_format_version},
            {"kind", "gbdt-binary-logistic"},
            {"growth", to_string(model.growth)},
            {"base_score", model.base_score},
            {"config", model.config.to_json()},
            {"seed", model.seed},
            {"feature_names", model.feature_names},
            {"gain_importance", model.gain_importance},
            {"loss_trace", model.loss_trace},
            {"trees", std::move(trees)}};
}

inline boosted_model model_from_json(const nlohmann::json& j) {
    int version = j.at("format_version").get<int>();
    if (version != model_format_version)
        throw integrity_error("model format version " + std::to_string(version) +
                              " not supported (expected " + std::to_string(model_format_version) + ")");
    boosted_model model;
    model.growth = growth_from_string(j.at("growth").get<std::string>());
    model.base_score = j.at("base_score").get<double>();
    model.config = gbdt_config::from_json(j.at("config"));
    model.seed = j.at("seed").get<uint64_t>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.gain_importance = j.at("gain_importance").get<std::vector<double>>();
    model.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    for (const auto& jt : j.at("trees")) {
        std::vector<tree_node> tree;
        for (const auto& jn : jt) {
            tree_node n;
            n.feature = jn.at("f").get<int>();
            n.threshold = jn.at("t").get<double>();
            n.missing_left = jn.at("ml").get<bool>();
            n.left = jn.at("l").get<int>();
            n.right = jn.at("r").get<int>();
            n.value = jn.at("v").get<double>();
            tree.push_back(n);
        }
        model.trees.push_back(std::move(tree));
    }
    if (model.gain_importance.size() != model.feature_names.size())
        throw integrity_error("model importance/feature name length mismatch");
    return model;
}

} // namespace lesionboost
