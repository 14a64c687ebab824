#pragma once
#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lesionboost/catalog.hpp"
#include "lesionboost/errors.hpp"
#include "lesionboost/hash.hpp"

namespace lesionboost {

// Column groups for one lesion metadata table. The shipped default matches
// the ISIC 2024 TBP export: 34 numeric columns, 6 categoricals and 5
// externally produced model-probability columns.
struct dataset_schema {
    std::vector<std::string> numeric_columns;
    std::vector<std::string> categorical_columns;
    std::vector<std::string> prediction_columns;

    // Optional pinned one-hot vocabularies. Variables without an entry learn
    // their vocabulary from the fitting rows.
    std::map<std::string, std::vector<std::string>> categorical_vocabulary;

    // Columns (raw or engineered names) that receive a *_patient_norm twin.
    std::vector<std::string> patient_norm_columns;

    std::string diagnosis_column = "iddx_full";

    bool operator==(const dataset_schema&) const = default;

    bool is_numeric(const std::string& name) const {
        return std::find(numeric_columns.begin(), numeric_columns.end(), name) != numeric_columns.end();
    }
    bool is_categorical(const std::string& name) const {
        return std::find(categorical_columns.begin(), categorical_columns.end(), name) != categorical_columns.end();
    }
    bool is_prediction(const std::string& name) const {
        return std::find(prediction_columns.begin(), prediction_columns.end(), name) != prediction_columns.end();
    }

    void validate() const {
        std::set<std::string> seen;
        auto check = [&](const std::vector<std::string>& cols, const char* group) {
            for (const auto& c : cols) {
                if (c.empty()) throw schema_error(std::string("empty column name in ") + group);
                if (!seen.insert(c).second)
                    throw schema_error("column '" + c + "' appears in more than one group");
            }
        };
        check(numeric_columns, "numeric_columns");
        check(categorical_columns, "categorical_columns");
        check(prediction_columns, "prediction_columns");
        for (const auto& [var, vocab] : categorical_vocabulary) {
            if (!is_categorical(var))
                throw schema_error("vocabulary given for unknown categorical '" + var + "'");
            std::set<std::string> cats(vocab.begin(), vocab.end());
            if (cats.size() != vocab.size())
                throw schema_error("duplicate category in vocabulary of '" + var + "'");
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["numeric_columns"] = numeric_columns;
        j["categorical_columns"] = categorical_columns;
        j["prediction_columns"] = prediction_columns;
        j["categorical_vocabulary"] = categorical_vocabulary;
        j["patient_norm_columns"] = patient_norm_columns;
        j["diagnosis_column"] = diagnosis_column;
        return j;
    }

    static dataset_schema from_json(const nlohmann::json& j) {
        static const std::set<std::string> known = {
            "numeric_columns", "categorical_columns", "prediction_columns",
            "categorical_vocabulary", "patient_norm_columns", "diagnosis_column"};
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!known.count(it.key()))
                throw schema_error("unknown key '" + it.key() + "' in schema document");
        }
        dataset_schema s;
        s.numeric_columns = j.at("numeric_columns").get<std::vector<std::string>>();
        s.categorical_columns = j.at("categorical_columns").get<std::vector<std::string>>();
        s.prediction_columns = j.at("prediction_columns").get<std::vector<std::string>>();
        if (j.contains("categorical_vocabulary"))
            s.categorical_vocabulary =
                j["categorical_vocabulary"].get<std::map<std::string, std::vector<std::string>>>();
        if (j.contains("patient_norm_columns"))
            s.patient_norm_columns = j["patient_norm_columns"].get<std::vector<std::string>>();
        if (j.contains("diagnosis_column")) s.diagnosis_column = j["diagnosis_column"].get<std::string>();
        s.validate();
        return s;
    }

    std::string hash() const { return fingerprint(to_json().dump()); }
};

inline const std::vector<std::string>& default_numeric_columns() {
    static const std::vector<std::string> cols = {
        "age_approx",
        "clin_size_long_diam_mm",
        "tbp_lv_A",
        "tbp_lv_Aext",
        "tbp_lv_B",
        "tbp_lv_Bext",
        "tbp_lv_C",
        "tbp_lv_Cext",
        "tbp_lv_H",
        "tbp_lv_Hext",
        "tbp_lv_L",
        "tbp_lv_Lext",
        "tbp_lv_areaMM2",
        "tbp_lv_area_perim_ratio",
        "tbp_lv_color_std_mean",
        "tbp_lv_deltaA",
        "tbp_lv_deltaB",
        "tbp_lv_deltaL",
        "tbp_lv_deltaLB",
        "tbp_lv_deltaLBnorm",
        "tbp_lv_eccentricity",
        "tbp_lv_minorAxisMM",
        "tbp_lv_nevi_confidence",
        "tbp_lv_norm_border",
        "tbp_lv_norm_color",
        "tbp_lv_perimeterMM",
        "tbp_lv_radial_color_std_max",
        "tbp_lv_stdL",
        "tbp_lv_stdLExt",
        "tbp_lv_symm_2axis",
        "tbp_lv_symm_2axis_angle",
        "tbp_lv_x",
        "tbp_lv_y",
        "tbp_lv_z",
    };
    return cols;
}

// 41 pinned categories + one "missing" indicator per variable = 47 one-hot
// columns under the default schema.
inline const std::map<std::string, std::vector<std::string>>& default_categorical_vocabulary() {
    static const std::map<std::string, std::vector<std::string>> vocab = {
        {"sex", {"female", "male"}},
        {"anatom_site_general",
         {"anterior torso", "head/neck", "lower extremity", "posterior torso", "upper extremity"}},
        {"tbp_tile_type", {"3D: XP", "3D: white"}},
        {"tbp_lv_location",
         {"Head & Neck", "Left Arm", "Left Arm - Lower", "Left Arm - Upper", "Left Leg",
          "Left Leg - Lower", "Left Leg - Upper", "Right Arm", "Right Arm - Lower",
          "Right Arm - Upper", "Right Leg", "Right Leg - Lower", "Right Leg - Upper",
          "Torso Back", "Torso Back Bottom Third", "Torso Back Middle Third",
          "Torso Back Top Third", "Torso Front", "Torso Front Bottom Half",
          "Torso Front Top Half", "Unknown"}},
        {"tbp_lv_location_simple",
         {"Head & Neck", "Left Arm", "Left Leg", "Right Arm", "Right Leg", "Torso Back",
          "Torso Front", "Unknown"}},
        {"image_type", {"TBP tile: close-up", "TBP tile: overview", "dermoscopic"}},
    };
    return vocab;
}

// All 34 raw numerics plus the first 42 default engineered features, 76
// names in total. The last catalog entry is the one left out.
inline const std::vector<std::string>& default_patient_norm_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> out = default_numeric_columns();
        const auto& catalog = default_catalog().entries;
        for (size_t i = 0; i + 1 < catalog.size(); ++i) out.push_back(catalog[i].name);
        return out;
    }();
    return cols;
}

inline dataset_schema default_schema() {
    dataset_schema s;
    s.numeric_columns = default_numeric_columns();
    s.categorical_columns = {"sex",
                             "anatom_site_general",
                             "tbp_tile_type",
                             "tbp_lv_location",
                             "tbp_lv_location_simple",
                             "image_type"};
    s.prediction_columns = {"predictions_eva", "predictions_edg", "predictions_mel",
                            "predictions_nev", "predictions_bkl"};
    s.categorical_vocabulary = default_categorical_vocabulary();
    s.patient_norm_columns = default_patient_norm_columns();
    s.validate();
    return s;
}

} // namespace lesionboost
