#pragma once
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lesionboost/csv.hpp"
#include "lesionboost/errors.hpp"
#include "lesionboost/hash.hpp"
#include "lesionboost/schema.hpp"

namespace lesionboost {

enum class provenance : uint8_t { real, synthetic };

inline std::string to_string(provenance p) { return p == provenance::real ? "real" : "synthetic"; }

inline provenance provenance_from_string(const std::string& s) {
    if (s == "real") return provenance::real;
    if (s == "synthetic") return provenance::synthetic;
    throw integrity_error("unknown provenance '" + s + "'");
}

enum class three_class_label : uint8_t { melanoma, nevus, bkl };

inline std::string to_string(three_class_label l) {
    switch (l) {
        case three_class_label::melanoma: return "melanoma";
        case three_class_label::nevus: return "nevus";
        case three_class_label::bkl: return "bkl";
    }
    return "nevus";
}

// Diagnosis harmonization into melanoma / nevus / bkl. Matching is
// case-insensitive after trimming; keratinocyte diagnoses collapse into bkl
// and anything unrecognized falls back to nevus.
inline three_class_label relabel_diagnosis(std::string_view diagnosis) {
    size_t b = diagnosis.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) throw input_error("empty diagnosis string");
    size_t e = diagnosis.find_last_not_of(" \t\r\n");
    std::string key(diagnosis.substr(b, e - b + 1));
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    if (key == "melanoma") return three_class_label::melanoma;
    if (key == "nevus") return three_class_label::nevus;
    // the unified class name maps to itself so relabeling is idempotent
    static const std::set<std::string> keratinocyte = {
        "basal cell carcinoma", "seborrheic keratosis", "solar lentigo", "lentigo nos", "bkl"};
    if (keratinocyte.count(key)) return three_class_label::bkl;
    return three_class_label::nevus;
}

inline bool diagnosis_is_known(std::string_view diagnosis) {
    size_t b = diagnosis.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return false;
    size_t e = diagnosis.find_last_not_of(" \t\r\n");
    std::string key(diagnosis.substr(b, e - b + 1));
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    static const std::set<std::string> known = {"melanoma", "nevus", "basal cell carcinoma",
                                                "seborrheic keratosis", "solar lentigo",
                                                "lentigo nos"};
    return known.count(key) != 0;
}

struct lesion_record {
    std::string lesion_id;
    std::string patient_id;
    int target = 0; // 1 = malignant
    std::string diagnosis; // empty when absent
    std::map<std::string, double> numerics;
    std::map<std::string, std::string> categoricals;
    std::map<std::string, double> predictions;
    provenance origin = provenance::real;

    bool operator==(const lesion_record&) const = default;
};

class dataset {
  public:
    dataset() = default;

    dataset(dataset_schema schema, std::vector<lesion_record> records)
        : schema_(std::move(schema)), records_(std::move(records)) {
        schema_.validate();
        std::set<std::string> ids;
        for (size_t i = 0; i < records_.size(); ++i) {
            const auto& r = records_[i];
            if (r.target != 0 && r.target != 1)
                throw integrity_error("record '" + r.lesion_id + "' has target outside {0,1}");
            if (!ids.insert(r.lesion_id).second)
                throw integrity_error("duplicate lesion_id '" + r.lesion_id + "'");
            for (const auto& [k, v] : r.numerics) {
                (void)v;
                if (!schema_.is_numeric(k))
                    throw schema_error("record '" + r.lesion_id + "' carries unknown numeric '" + k + "'");
            }
            for (const auto& [k, v] : r.categoricals) {
                (void)v;
                if (!schema_.is_categorical(k))
                    throw schema_error("record '" + r.lesion_id + "' carries unknown categorical '" + k + "'");
            }
            for (const auto& [k, v] : r.predictions) {
                (void)v;
                if (!schema_.is_prediction(k))
                    throw schema_error("record '" + r.lesion_id + "' carries unknown prediction '" + k + "'");
            }
            patient_rows_[r.patient_id].push_back(i);
        }
    }

    const dataset_schema& schema() const { return schema_; }
    const std::vector<lesion_record>& records() const { return records_; }
    size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    const std::map<std::string, std::vector<size_t>>& patient_groups() const { return patient_rows_; }

    std::vector<std::string> patients() const {
        std::vector<std::string> out;
        out.reserve(patient_rows_.size());
        for (const auto& [p, rows] : patient_rows_) out.push_back(p);
        return out; // std::map keeps them sorted
    }

    dataset filter_real() const {
        std::vector<lesion_record> kept;
        for (const auto& r : records_)
            if (r.origin == provenance::real) kept.push_back(r);
        return dataset(schema_, std::move(kept));
    }

    bool operator==(const dataset& other) const {
        return schema_ == other.schema_ && records_ == other.records_;
    }

  private:
    dataset_schema schema_;
    std::vector<lesion_record> records_;
    std::map<std::string, std::vector<size_t>> patient_rows_;
};

struct load_report {
    size_t rows_read = 0;
    size_t rows_loaded = 0;
    std::vector<size_t> rejected_rows; // 1-based data row numbers
    std::map<std::string, size_t> missing_counts;
    std::map<std::string, size_t> parse_failures;
    std::map<std::string, size_t> unknown_diagnoses;

    nlohmann::json to_json() const {
        return {{"rows_read", rows_read},
                {"rows_loaded", rows_loaded},
                {"rejected_rows", rejected_rows},
                {"missing_counts", missing_counts},
                {"parse_failures", parse_failures},
                {"unknown_diagnoses", unknown_diagnoses}};
    }
};

struct load_result {
    dataset data;
    load_report report;
};

// Reads the lesion metadata CSV. Required header columns: isic_id,
// patient_id, target and every schema numeric/categorical column. Prediction
// columns are consumed when present. Rows whose target is not 0/1 are
// rejected and counted; numeric cells that fail to parse become missing.
inline load_result load_dataset(const std::string& path, const dataset_schema& schema) {
    schema.validate();
    csv_table csv = read_csv(path);

    size_t id_col = csv.require("isic_id");
    size_t patient_col = csv.require("patient_id");
    size_t target_col = csv.require("target");
    std::map<std::string, size_t> numeric_cols, categorical_cols, prediction_cols;
    for (const auto& c : schema.numeric_columns) numeric_cols[c] = csv.require(c);
    for (const auto& c : schema.categorical_columns) categorical_cols[c] = csv.require(c);
    for (const auto& c : schema.prediction_columns)
        if (auto idx = csv.find(c)) prediction_cols[c] = *idx;
    auto diagnosis_col = schema.diagnosis_column.empty()
                             ? std::nullopt
                             : csv.find(schema.diagnosis_column);
    auto provenance_col = csv.find("provenance");

    load_report report;
    std::vector<lesion_record> records;
    records.reserve(csv.rows.size());

    for (size_t i = 0; i < csv.rows.size(); ++i) {
        const auto& row = csv.rows[i];
        ++report.rows_read;

        auto target = parse_double(row[target_col]);
        if (!target || (*target != 0.0 && *target != 1.0)) {
            report.rejected_rows.push_back(i + 1);
            continue;
        }

        lesion_record rec;
        rec.lesion_id = row[id_col];
        rec.patient_id = row[patient_col];
        rec.target = static_cast<int>(*target);
        if (diagnosis_col) rec.diagnosis = row[*diagnosis_col];
        if (provenance_col && !row[*provenance_col].empty())
            rec.origin = provenance_from_string(row[*provenance_col]);

        for (const auto& [name, col] : numeric_cols) {
            const std::string& cell = row[col];
            if (cell.empty() || cell.find_first_not_of(" \t") == std::string::npos) {
                ++report.missing_counts[name];
                continue;
            }
            if (auto v = parse_double(cell)) {
                rec.numerics[name] = *v;
            } else {
                ++report.missing_counts[name];
                ++report.parse_failures[name];
            }
        }
        for (const auto& [name, col] : categorical_cols) {
            const std::string& cell = row[col];
            if (cell.empty()) {
                ++report.missing_counts[name];
                continue;
            }
            rec.categoricals[name] = cell;
        }
        for (const auto& [name, col] : prediction_cols) {
            const std::string& cell = row[col];
            if (cell.empty()) {
                ++report.missing_counts[name];
                continue;
            }
            if (auto v = parse_double(cell)) {
                if (*v < 0.0 || *v > 1.0)
                    throw range_error("prediction '" + name + "' out of [0,1] for lesion '" +
                                      rec.lesion_id + "'");
                rec.predictions[name] = *v;
            } else {
                ++report.missing_counts[name];
                ++report.parse_failures[name];
            }
        }

        if (!rec.diagnosis.empty() && !diagnosis_is_known(rec.diagnosis))
            ++report.unknown_diagnoses[rec.diagnosis];

        records.push_back(std::move(rec));
    }

    report.rows_loaded = records.size();
    return {dataset(schema, std::move(records)), report};
}

using prediction_table = std::map<std::string, std::map<std::string, double>>;

// Reads a predictions CSV keyed by isic_id. Only schema prediction columns
// present in the header are consumed.
inline prediction_table load_prediction_table(const std::string& path, const dataset_schema& schema) {
    csv_table csv = read_csv(path);
    size_t id_col = csv.require("isic_id");
    std::map<std::string, size_t> cols;
    for (const auto& c : schema.prediction_columns)
        if (auto idx = csv.find(c)) cols[c] = *idx;
    if (cols.empty())
        throw schema_error("predictions file '" + path + "' has no schema prediction columns");
    prediction_table table;
    for (const auto& row : csv.rows) {
        auto& entry = table[row[id_col]];
        for (const auto& [name, col] : cols) {
            if (row[col].empty()) continue;
            if (auto v = parse_double(row[col])) entry[name] = *v;
        }
    }
    return table;
}

struct merge_report {
    size_t matched = 0;
    size_t total = 0;
    double coverage = 0.0;
};

// Attaches external model probabilities to the dataset. The table may cover
// a subset of lesions; uncovered lesions keep missing prediction values.
inline std::pair<dataset, merge_report> merge_prediction_columns(const dataset& ds,
                                                                 const prediction_table& preds) {
    for (const auto& [lesion_id, values] : preds) {
        for (const auto& [name, v] : values) {
            if (!ds.schema().is_prediction(name))
                throw schema_error("prediction table carries unknown column '" + name + "'");
            if (v < 0.0 || v > 1.0)
                throw range_error("prediction '" + name + "' out of [0,1] for lesion '" + lesion_id + "'");
        }
    }

    merge_report report;
    report.total = ds.size();
    std::vector<lesion_record> records = ds.records();
    for (auto& rec : records) {
        auto it = preds.find(rec.lesion_id);
        if (it == preds.end()) continue;
        ++report.matched;
        for (const auto& [name, v] : it->second) rec.predictions[name] = v;
    }
    report.coverage = report.total == 0 ? 0.0 : static_cast<double>(report.matched) / report.total;
    return {dataset(ds.schema(), std::move(records)), report};
}

inline constexpr int dataset_format_version = 1;

inline nlohmann::json dataset_to_json(const dataset& ds) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : ds.records()) {
        nlohmann::json jr;
        jr["lesion_id"] = r.lesion_id;
        jr["patient_id"] = r.patient_id;
        jr["target"] = r.target;
        if (r.diagnosis.empty()) jr["diagnosis"] = nullptr;
        else jr["diagnosis"] = r.diagnosis;
        jr["numerics"] = r.numerics;
        jr["categoricals"] = r.categoricals;
        jr["predictions"] = r.predictions;
        jr["provenance"] = to_string(r.origin);
        records.push_back(std::move(jr));
    }
    nlohmann::json j;
    j["format_version"] = dataset_format_version;
    j["schema"] = ds.schema().to_json();
    j["schema_hash"] = ds.schema().hash();
    j["records"] = std::move(records);
    return j;
}

inline dataset dataset_from_json(const nlohmann::json& j) {
    int version = j.at("format_version").get<int>();
    if (version != dataset_format_version)
        throw integrity_error("dataset format version " + std::to_string(version) +
                              " not supported (expected " + std::to_string(dataset_format_version) + ")");
    dataset_schema schema = dataset_schema::from_json(j.at("schema"));
    std::string stored_hash = j.at("schema_hash").get<std::string>();
    if (schema.hash() != stored_hash)
        throw integrity_error("embedded schema hash mismatch (" + stored_hash + " vs " +
                              schema.hash() + ")");
    std::vector<lesion_record> records;
    for (const auto& jr : j.at("records")) {
        lesion_record r;
        r.lesion_id = jr.at("lesion_id").get<std::string>();
        r.patient_id = jr.at("patient_id").get<std::string>();
        r.target = jr.at("target").get<int>();
        if (!jr.at("diagnosis").is_null()) r.diagnosis = jr["diagnosis"].get<std::string>();
        r.numerics = jr.at("numerics").get<std::map<std::string, double>>();
        r.categoricals = jr.at("categoricals").get<std::map<std::string, std::string>>();
        r.predictions = jr.at("predictions").get<std::map<std::string, double>>();
        r.origin = provenance_from_string(jr.at("provenance").get<std::string>());
        records.push_back(std::move(r));
    }
    return dataset(std::move(schema), std::move(records));
}

inline void save_dataset(const dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << dataset_to_json(ds).dump(2) << '\n';
}

inline dataset load_canonical_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("malformed dataset file '" + path + "': " + e.what());
    }
    return dataset_from_json(j);
}

} // namespace lesionboost
