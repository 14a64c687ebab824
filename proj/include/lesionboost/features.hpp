#pragma once
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lesionboost/catalog.hpp"
#include "lesionboost/csv.hpp"
#include "lesionboost/dataset.hpp"
#include "lesionboost/errors.hpp"
#include "lesionboost/hash.hpp"
#include "lesionboost/schema.hpp"

namespace lesionboost {

constexpr double missing_value = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

enum class feature_group : uint8_t {
    raw_numeric,
    raw_categorical, // label-encoded category codes, one column per variable
    onehot,
    engineered,
    patient_norm,
    patient_agg,
    external_pred
};

inline std::string to_string(feature_group g) {
    switch (g) {
        case feature_group::raw_numeric: return "raw_numeric";
        case feature_group::raw_categorical: return "raw_categorical";
        case feature_group::onehot: return "onehot";
        case feature_group::engineered: return "engineered";
        case feature_group::patient_norm: return "patient_norm";
        case feature_group::patient_agg: return "patient_agg";
        case feature_group::external_pred: return "external_pred";
    }
    return "raw_numeric";
}

inline feature_group feature_group_from_string(const std::string& s) {
    if (s == "raw_numeric") return feature_group::raw_numeric;
    if (s == "raw_categorical") return feature_group::raw_categorical;
    if (s == "onehot") return feature_group::onehot;
    if (s == "engineered") return feature_group::engineered;
    if (s == "patient_norm") return feature_group::patient_norm;
    if (s == "patient_agg") return feature_group::patient_agg;
    if (s == "external_pred") return feature_group::external_pred;
    throw input_error("unknown feature group '" + s + "'");
}

struct feature_column {
    std::string name;
    feature_group group;
    std::string origin;

    bool operator==(const feature_column&) const = default;
};

// Row-major numeric matrix with column metadata. Missing cells are NaN.
struct feature_frame {
    std::vector<feature_column> columns;
    std::vector<double> values;
    std::vector<std::string> row_ids;
    std::vector<std::string> row_patients;
    std::vector<int> labels;

    size_t n_rows() const { return row_ids.size(); }
    size_t n_cols() const { return columns.size(); }

    double at(size_t r, size_t c) const { return values[r * n_cols() + c]; }
    double& at(size_t r, size_t c) { return values[r * n_cols() + c]; }
    std::span<const double> row(size_t r) const { return {values.data() + r * n_cols(), n_cols()}; }

    std::optional<size_t> column_index(const std::string& name) const {
        for (size_t i = 0; i < columns.size(); ++i)
            if (columns[i].name == name) return i;
        return std::nullopt;
    }

    std::map<feature_group, size_t> group_counts() const {
        std::map<feature_group, size_t> counts;
        for (const auto& c : columns) ++counts[c.group];
        return counts;
    }

    std::vector<std::string> feature_names() const {
        std::vector<std::string> names;
        names.reserve(columns.size());
        for (const auto& c : columns) names.push_back(c.name);
        return names;
    }

    // Row subset; duplicate indices are allowed (used by rebalancing).
    feature_frame select_rows(const std::vector<size_t>& indices) const {
        feature_frame out;
        out.columns = columns;
        out.values.reserve(indices.size() * n_cols());
        for (size_t idx : indices) {
            if (idx >= n_rows()) throw input_error("row index out of range");
            auto r = row(idx);
            out.values.insert(out.values.end(), r.begin(), r.end());
            out.row_ids.push_back(row_ids[idx]);
            out.row_patients.push_back(row_patients[idx]);
            out.labels.push_back(labels[idx]);
        }
        return out;
    }

    feature_frame select_groups(const std::set<feature_group>& keep) const {
        std::vector<size_t> cols;
        for (size_t c = 0; c < columns.size(); ++c)
            if (keep.count(columns[c].group)) cols.push_back(c);
        feature_frame out;
        out.row_ids = row_ids;
        out.row_patients = row_patients;
        out.labels = labels;
        for (size_t c : cols) out.columns.push_back(columns[c]);
        out.values.resize(n_rows() * cols.size());
        for (size_t r = 0; r < n_rows(); ++r)
            for (size_t i = 0; i < cols.size(); ++i)
                out.values[r * cols.size() + i] = at(r, cols[i]);
        return out;
    }
};

struct patient_moments {
    double mean = 0.0;
    double stddev = 0.0; // population
};

// Statistics fitted on training rows and replayed on held-out rows so the
// transform never looks at held-out distributions.
struct feature_stats {
    std::map<std::string, std::vector<std::string>> vocabulary;
    std::map<std::string, double> medians; // per output column, imputation value
    std::map<std::string, std::map<std::string, patient_moments>> patient_stats;
};

struct featurize_result {
    feature_frame frame;
    feature_stats stats;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    std::erase_if(v, [](double x) { return is_missing(x); });
    if (v.empty()) return missing_value;
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline patient_moments moments_of(const std::vector<double>& values) {
    double sum = 0.0;
    size_t n = 0;
    for (double v : values)
        if (!is_missing(v)) {
            sum += v;
            ++n;
        }
    patient_moments m;
    if (n == 0) {
        m.mean = missing_value;
        m.stddev = missing_value;
        return m;
    }
    m.mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values)
        if (!is_missing(v)) {
            double d = v - m.mean;
            ss += d * d;
        }
    m.stddev = std::sqrt(ss / static_cast<double>(n));
    return m;
}

} // namespace detail

constexpr double patient_norm_epsilon = 1e-5;

// Builds the full 6-group feature matrix. When `fit` is null the statistics
// (one-hot vocabularies, imputation medians, per-patient moments) are
// computed from `ds` itself and returned for reuse on held-out rows.
inline featurize_result featurize(const dataset& ds, const feature_catalog& catalog,
                                  const feature_stats* fit = nullptr) {
    if (ds.empty()) throw input_error("cannot featurize an empty dataset");
    const dataset_schema& schema = ds.schema();
    const auto& records = ds.records();
    const size_t n = records.size();

    std::vector<compiled_expr> exprs = catalog.bind(schema.numeric_columns);

    feature_stats stats;
    feature_frame frame;
    frame.row_ids.reserve(n);
    for (const auto& r : records) {
        frame.row_ids.push_back(r.lesion_id);
        frame.row_patients.push_back(r.patient_id);
        frame.labels.push_back(r.target);
    }

    // Raw numerics, row-major.
    const size_t n_raw = schema.numeric_columns.size();
    std::vector<double> raw(n * n_raw, missing_value);
    for (size_t r = 0; r < n; ++r)
        for (size_t c = 0; c < n_raw; ++c) {
            auto it = records[r].numerics.find(schema.numeric_columns[c]);
            if (it != records[r].numerics.end()) raw[r * n_raw + c] = it->second;
        }

    // Engineered columns from the catalog.
    const size_t n_eng = catalog.entries.size();
    std::vector<double> engineered(n * n_eng, missing_value);
    for (size_t r = 0; r < n; ++r) {
        std::span<const double> raw_row(raw.data() + r * n_raw, n_raw);
        for (size_t c = 0; c < n_eng; ++c) {
            double v = exprs[c].eval(raw_row);
            engineered[r * n_eng + c] = std::isfinite(v) ? v : missing_value;
        }
    }

    // One-hot block. Vocabulary priority: schema pin, then fitted stats,
    // then the sorted distinct values of this dataset.
    struct onehot_plan {
        std::string variable;
        std::vector<std::string> categories; // + implicit "missing" column
    };
    std::vector<onehot_plan> onehots;
    for (const auto& var : schema.categorical_columns) {
        onehot_plan plan;
        plan.variable = var;
        auto pinned = schema.categorical_vocabulary.find(var);
        if (pinned != schema.categorical_vocabulary.end()) {
            plan.categories = pinned->second;
        } else if (fit && fit->vocabulary.count(var)) {
            plan.categories = fit->vocabulary.at(var);
        } else {
            std::set<std::string> seen;
            for (const auto& rec : records) {
                auto it = rec.categoricals.find(var);
                if (it != rec.categoricals.end()) seen.insert(it->second);
            }
            plan.categories.assign(seen.begin(), seen.end());
        }
        stats.vocabulary[var] = plan.categories;
        onehots.push_back(std::move(plan));
    }

    // Patient-normalized sources may be raw or engineered names.
    struct norm_source {
        std::string name;
        bool from_raw;
        size_t index;
    };
    std::vector<norm_source> norm_sources;
    for (const auto& name : schema.patient_norm_columns) {
        norm_source s{name, true, 0};
        auto raw_it = std::find(schema.numeric_columns.begin(), schema.numeric_columns.end(), name);
        if (raw_it != schema.numeric_columns.end()) {
            s.index = static_cast<size_t>(raw_it - schema.numeric_columns.begin());
        } else {
            s.from_raw = false;
            bool found = false;
            for (size_t i = 0; i < catalog.entries.size(); ++i)
                if (catalog.entries[i].name == name) {
                    s.index = i;
                    found = true;
                    break;
                }
            if (!found)
                throw schema_error("patient_norm column '" + name +
                                   "' is neither a raw numeric nor a catalog feature");
        }
        norm_sources.push_back(std::move(s));
    }

    auto source_value = [&](const norm_source& s, size_t r) {
        return s.from_raw ? raw[r * n_raw + s.index] : engineered[r * n_eng + s.index];
    };

    const auto& groups = ds.patient_groups();

    std::vector<double> patient_norm(n * norm_sources.size(), missing_value);
    for (size_t c = 0; c < norm_sources.size(); ++c) {
        const auto& src = norm_sources[c];
        auto& fitted = stats.patient_stats[src.name];
        for (const auto& [patient, rows] : groups) {
            patient_moments m;
            const std::map<std::string, patient_moments>* prior =
                fit && fit->patient_stats.count(src.name) ? &fit->patient_stats.at(src.name) : nullptr;
            if (prior && prior->count(patient)) {
                m = prior->at(patient);
            } else {
                std::vector<double> vals;
                vals.reserve(rows.size());
                for (size_t r : rows) vals.push_back(source_value(src, r));
                m = detail::moments_of(vals);
            }
            fitted[patient] = m;
            for (size_t r : rows) {
                double v = source_value(src, r);
                if (is_missing(v) || is_missing(m.mean)) continue;
                patient_norm[r * norm_sources.size() + c] =
                    (v - m.mean) / (m.stddev + patient_norm_epsilon);
            }
        }
    }

    // Patient aggregates: lesion count, mean area per (patient, site), and
    // the patient's largest clinical diameter.
    auto raw_index = [&](const std::string& name) -> std::optional<size_t> {
        auto it = std::find(schema.numeric_columns.begin(), schema.numeric_columns.end(), name);
        if (it == schema.numeric_columns.end()) return std::nullopt;
        return static_cast<size_t>(it - schema.numeric_columns.begin());
    };
    auto area_col = raw_index("tbp_lv_areaMM2");
    auto size_col = raw_index("clin_size_long_diam_mm");
    const bool has_site = schema.is_categorical("anatom_site_general");

    std::vector<double> agg(n * 3, missing_value);
    for (const auto& [patient, rows] : groups) {
        for (size_t r : rows) agg[r * 3 + 0] = static_cast<double>(rows.size());

        if (area_col) {
            std::map<std::string, std::pair<double, size_t>> site_sums;
            for (size_t r : rows) {
                double a = raw[r * n_raw + *area_col];
                if (is_missing(a)) continue;
                std::string site = "missing";
                if (has_site) {
                    auto it = records[r].categoricals.find("anatom_site_general");
                    if (it != records[r].categoricals.end()) site = it->second;
                }
                auto& acc = site_sums[site];
                acc.first += a;
                acc.second += 1;
            }
            for (size_t r : rows) {
                std::string site = "missing";
                if (has_site) {
                    auto it = records[r].categoricals.find("anatom_site_general");
                    if (it != records[r].categoricals.end()) site = it->second;
                }
                auto acc = site_sums.find(site);
                if (acc != site_sums.end() && acc->second.second > 0)
                    agg[r * 3 + 1] = acc->second.first / static_cast<double>(acc->second.second);
            }
        }

        if (size_col) {
            double best = missing_value;
            for (size_t r : rows) {
                double v = raw[r * n_raw + *size_col];
                if (is_missing(v)) continue;
                if (is_missing(best) || v > best) best = v;
            }
            for (size_t r : rows)
                if (!is_missing(best)) agg[r * 3 + 2] = best;
        }
    }

    // External prediction columns.
    const size_t n_pred = schema.prediction_columns.size();
    std::vector<double> preds(n * n_pred, missing_value);
    for (size_t r = 0; r < n; ++r)
        for (size_t c = 0; c < n_pred; ++c) {
            auto it = records[r].predictions.find(schema.prediction_columns[c]);
            if (it != records[r].predictions.end()) preds[r * n_pred + c] = it->second;
        }

    // Raw categorical codes: the category's vocabulary index, with "missing"
    // mapping to |vocabulary| and unseen values to NaN.
    std::vector<double> cat_codes(n * onehots.size(), missing_value);
    for (size_t c = 0; c < onehots.size(); ++c) {
        const auto& plan = onehots[c];
        for (size_t r = 0; r < n; ++r) {
            auto it = records[r].categoricals.find(plan.variable);
            if (it == records[r].categoricals.end()) {
                cat_codes[r * onehots.size() + c] = static_cast<double>(plan.categories.size());
                continue;
            }
            auto cat = std::find(plan.categories.begin(), plan.categories.end(), it->second);
            if (cat != plan.categories.end())
                cat_codes[r * onehots.size() + c] =
                    static_cast<double>(cat - plan.categories.begin());
        }
    }

    // Assemble in Table-style group order.
    for (const auto& name : schema.numeric_columns)
        frame.columns.push_back({name, feature_group::raw_numeric, "metadata column"});
    for (const auto& plan : onehots)
        frame.columns.push_back(
            {plan.variable, feature_group::raw_categorical, "category code of " + plan.variable});
    for (const auto& plan : onehots) {
        for (const auto& cat : plan.categories)
            frame.columns.push_back(
                {plan.variable + "=" + cat, feature_group::onehot, "indicator of " + plan.variable});
        frame.columns.push_back(
            {plan.variable + "=missing", feature_group::onehot, "missing indicator of " + plan.variable});
    }
    for (const auto& e : catalog.entries)
        frame.columns.push_back({e.name, feature_group::engineered, e.expression});
    for (const auto& src : norm_sources)
        frame.columns.push_back({src.name + "_patient_norm", feature_group::patient_norm,
                                 "per-patient deviation of " + src.name});
    frame.columns.push_back({"count_per_patient", feature_group::patient_agg, "lesions per patient"});
    frame.columns.push_back(
        {"tbp_lv_areaMM2_bp", feature_group::patient_agg, "mean area per (patient, site)"});
    frame.columns.push_back(
        {"max_size_per_patient", feature_group::patient_agg, "max clinical diameter per patient"});
    for (const auto& name : schema.prediction_columns)
        frame.columns.push_back({name, feature_group::external_pred, "external model output"});

    const size_t n_cols = frame.columns.size();
    frame.values.assign(n * n_cols, missing_value);
    for (size_t r = 0; r < n; ++r) {
        size_t c = 0;
        for (size_t i = 0; i < n_raw; ++i) frame.values[r * n_cols + c++] = raw[r * n_raw + i];
        for (size_t i = 0; i < onehots.size(); ++i)
            frame.values[r * n_cols + c++] = cat_codes[r * onehots.size() + i];
        for (const auto& plan : onehots) {
            auto it = records[r].categoricals.find(plan.variable);
            size_t block_start = c;
            size_t block_size = plan.categories.size() + 1;
            for (size_t i = 0; i < block_size; ++i) frame.values[r * n_cols + c + i] = 0.0;
            if (it == records[r].categoricals.end()) {
                frame.values[r * n_cols + block_start + plan.categories.size()] = 1.0;
            } else {
                auto cat = std::find(plan.categories.begin(), plan.categories.end(), it->second);
                if (cat != plan.categories.end())
                    frame.values[r * n_cols + block_start +
                                 static_cast<size_t>(cat - plan.categories.begin())] = 1.0;
                // unseen category: all zeros
            }
            c += block_size;
        }
        for (size_t i = 0; i < n_eng; ++i) frame.values[r * n_cols + c++] = engineered[r * n_eng + i];
        for (size_t i = 0; i < norm_sources.size(); ++i)
            frame.values[r * n_cols + c++] = patient_norm[r * norm_sources.size() + i];
        for (size_t i = 0; i < 3; ++i) frame.values[r * n_cols + c++] = agg[r * 3 + i];
        for (size_t i = 0; i < n_pred; ++i) frame.values[r * n_cols + c++] = preds[r * n_pred + i];
    }

    // Median imputation, fold-local when fit stats are supplied.
    for (size_t c = 0; c < n_cols; ++c) {
        if (frame.columns[c].group == feature_group::onehot) continue;
        const std::string& name = frame.columns[c].name;
        double med;
        if (fit) {
            auto it = fit->medians.find(name);
            if (it == fit->medians.end())
                throw input_error("fit statistics carry no median for column '" + name + "'");
            med = it->second;
        } else {
            std::vector<double> col(n);
            for (size_t r = 0; r < n; ++r) col[r] = frame.values[r * n_cols + c];
            med = detail::median_of(std::move(col));
        }
        stats.medians[name] = med;
        if (is_missing(med)) continue;
        for (size_t r = 0; r < n; ++r) {
            double& v = frame.values[r * n_cols + c];
            if (is_missing(v)) v = med;
        }
    }

    if (fit) stats = *fit;
    return {std::move(frame), std::move(stats)};
}

// Gaussian regularization noise on the external prediction columns only.
// Deterministic per seed; sigma = 0 is an exact no-op.
inline feature_frame inject_prediction_noise(const feature_frame& frame, double sigma, uint64_t seed) {
    if (sigma < 0.0) throw parameter_error("noise sigma must be >= 0");
    feature_frame out = frame;
    if (sigma == 0.0) return out;

    std::vector<size_t> pred_cols;
    for (size_t c = 0; c < frame.columns.size(); ++c)
        if (frame.columns[c].group == feature_group::external_pred) pred_cols.push_back(c);
    if (pred_cols.empty()) return out;

    // Box-Muller on top of mt19937_64 keeps the draw sequence identical
    // across standard libraries.
    std::mt19937_64 rng(seed);
    auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    bool have_spare = false;
    double spare = 0.0;
    auto normal = [&]() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        double u1 = uniform();
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * M_PI * u2;
        spare = radius * std::sin(angle);
        have_spare = true;
        return radius * std::cos(angle);
    };

    const size_t n_cols = out.n_cols();
    for (size_t r = 0; r < out.n_rows(); ++r)
        for (size_t c : pred_cols) out.values[r * n_cols + c] += sigma * normal();
    return out;
}

inline constexpr int frame_format_version = 1;

inline nlohmann::json frame_columns_json(const feature_frame& frame) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : frame.columns)
        cols.push_back({{"name", c.name}, {"group", to_string(c.group)}, {"origin", c.origin}});
    return {{"format_version", frame_format_version}, {"columns", cols}};
}

// CSV export with a JSON sidecar describing the column groups.
inline void export_frame_csv(const feature_frame& frame, const std::string& csv_path,
                             const std::string& sidecar_path) {
    std::vector<std::string> header = {"lesion_id", "patient_id", "target"};
    for (const auto& c : frame.columns) header.push_back(c.name);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(frame.n_rows());
    for (size_t r = 0; r < frame.n_rows(); ++r) {
        std::vector<std::string> cells = {frame.row_ids[r], frame.row_patients[r],
                                          std::to_string(frame.labels[r])};
        for (size_t c = 0; c < frame.n_cols(); ++c) {
            double v = frame.at(r, c);
            cells.push_back(is_missing(v) ? std::string() : format_double(v, 17));
        }
        rows.push_back(std::move(cells));
    }
    write_csv(csv_path, header, rows);

    std::ofstream side(sidecar_path, std::ios::binary);
    if (!side) throw io_error("cannot write '" + sidecar_path + "'");
    side << frame_columns_json(frame).dump(2) << '\n';
}

inline feature_frame import_frame_csv(const std::string& csv_path, const std::string& sidecar_path) {
    std::ifstream side(sidecar_path, std::ios::binary);
    if (!side) throw io_error("cannot open '" + sidecar_path + "'");
    nlohmann::json meta;
    side >> meta;
    if (meta.at("format_version").get<int>() != frame_format_version)
        throw integrity_error("frame sidecar version mismatch");

    feature_frame frame;
    for (const auto& jc : meta.at("columns"))
        frame.columns.push_back({jc.at("name").get<std::string>(),
                                 feature_group_from_string(jc.at("group").get<std::string>()),
                                 jc.at("origin").get<std::string>()});

    csv_table csv = read_csv(csv_path);
    size_t id_col = csv.require("lesion_id");
    size_t patient_col = csv.require("patient_id");
    size_t target_col = csv.require("target");
    std::vector<size_t> value_cols;
    for (const auto& c : frame.columns) value_cols.push_back(csv.require(c.name));

    frame.values.reserve(csv.rows.size() * frame.columns.size());
    for (const auto& row : csv.rows) {
        frame.row_ids.push_back(row[id_col]);
        frame.row_patients.push_back(row[patient_col]);
        auto target = parse_double(row[target_col]);
        if (!target || (*target != 0.0 && *target != 1.0))
            throw integrity_error("bad target for row '" + row[id_col] + "'");
        frame.labels.push_back(static_cast<int>(*target));
        for (size_t c : value_cols) {
            if (row[c].empty()) {
                frame.values.push_back(missing_value);
                continue;
            }
            auto v = parse_double(row[c]);
            if (!v) throw integrity_error("bad numeric cell for row '" + row[id_col] + "'");
            frame.values.push_back(*v);
        }
    }
    return frame;
}

namespace detail {

inline void write_u64(std::ofstream& out, uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline uint64_t read_u64(std::ifstream& in) {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

inline void write_str(std::ofstream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_str(std::ifstream& in) {
    uint64_t len = read_u64(in);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    return s;
}

} // namespace detail

// Binary cache: little-endian, hash-checked against the column metadata.
inline void save_frame_cache(const feature_frame& frame, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write '" + path + "'");
    out.write("LBFC", 4);
    detail::write_u64(out, frame_format_version);
    std::string meta = frame_columns_json(frame).dump();
    detail::write_u64(out, fnv1a64(meta));
    detail::write_str(out, meta);
    detail::write_u64(out, frame.n_rows());
    for (size_t r = 0; r < frame.n_rows(); ++r) {
        detail::write_str(out, frame.row_ids[r]);
        detail::write_str(out, frame.row_patients[r]);
        detail::write_u64(out, static_cast<uint64_t>(frame.labels[r]));
    }
    out.write(reinterpret_cast<const char*>(frame.values.data()),
              static_cast<std::streamsize>(frame.values.size() * sizeof(double)));
}

inline feature_frame load_frame_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "LBFC", 4) != 0) throw integrity_error("not a frame cache: '" + path + "'");
    if (detail::read_u64(in) != frame_format_version)
        throw integrity_error("frame cache version mismatch");
    uint64_t stored_hash = detail::read_u64(in);
    std::string meta = detail::read_str(in);
    if (fnv1a64(meta) != stored_hash) throw integrity_error("frame cache hash mismatch");

    feature_frame frame;
    nlohmann::json jmeta = nlohmann::json::parse(meta);
    for (const auto& jc : jmeta.at("columns"))
        frame.columns.push_back({jc.at("name").get<std::string>(),
                                 feature_group_from_string(jc.at("group").get<std::string>()),
                                 jc.at("origin").get<std::string>()});
    uint64_t n = detail::read_u64(in);
    for (uint64_t r = 0; r < n; ++r) {
        frame.row_ids.push_back(detail::read_str(in));
        frame.row_patients.push_back(detail::read_str(in));
        frame.labels.push_back(static_cast<int>(detail::read_u64(in)));
    }
    frame.values.resize(n * frame.columns.size());
    in.read(reinterpret_cast<char*>(frame.values.data()),
            static_cast<std::streamsize>(frame.values.size() * sizeof(double)));
    if (!in) throw integrity_error("truncated frame cache: '" + path + "'");
    return frame;
}

} // namespace lesionboost
