#pragma once
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lesionboost/errors.hpp"
#include "lesionboost/expr.hpp"

namespace lesionboost {

struct engineered_feature {
    std::string name;
    std::string expression;

    bool operator==(const engineered_feature&) const = default;
};

// Declarative list of engineered columns. Each expression is evaluated
// row-wise over the raw numeric columns.
struct feature_catalog {
    std::vector<engineered_feature> entries;

    bool operator==(const feature_catalog&) const = default;

    void validate() const {
        std::set<std::string> names;
        for (const auto& e : entries) {
            if (e.name.empty()) throw catalog_error("engineered feature with empty name");
            if (!names.insert(e.name).second)
                throw catalog_error("duplicate engineered feature '" + e.name + "'");
        }
    }

    std::vector<compiled_expr> bind(const std::vector<std::string>& raw_columns) const {
        validate();
        std::vector<compiled_expr> compiled;
        compiled.reserve(entries.size());
        for (const auto& e : entries) {
            try {
                compiled.push_back(expr_parser::compile(e.expression, raw_columns));
            } catch (const catalog_error& err) {
                throw catalog_error("feature '" + e.name + "': " + err.what());
            }
        }
        return compiled;
    }

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& e : entries) j.push_back({{"name", e.name}, {"expression", e.expression}});
        return j;
    }

    static feature_catalog from_json(const nlohmann::json& j) {
        if (!j.is_array()) throw catalog_error("catalog document must be a JSON list");
        feature_catalog c;
        for (const auto& item : j) {
            engineered_feature e;
            e.name = item.at("name").get<std::string>();
            e.expression = item.at("expression").get<std::string>();
            c.entries.push_back(std::move(e));
        }
        c.validate();
        return c;
    }
};

// 43 shipped descriptors: shape, color contrast, patient-context interactions.
// The formulas are repository defaults over the TBP export columns.
inline const feature_catalog& default_catalog() {
    static const feature_catalog catalog = {{
        {"lesion_shape_index", "tbp_lv_areaMM2 / (tbp_lv_perimeterMM * tbp_lv_perimeterMM)"},
        {"hue_contrast", "abs(tbp_lv_H - tbp_lv_Hext)"},
        {"luminance_contrast", "abs(tbp_lv_L - tbp_lv_Lext)"},
        {"lesion_color_difference",
         "sqrt(tbp_lv_deltaA * tbp_lv_deltaA + tbp_lv_deltaB * tbp_lv_deltaB + tbp_lv_deltaL * tbp_lv_deltaL)"},
        {"border_complexity", "tbp_lv_norm_border + (1 - tbp_lv_symm_2axis)"},
        {"lesion_size_ratio", "clin_size_long_diam_mm / sqrt(tbp_lv_areaMM2)"},
        {"color_uniformity", "tbp_lv_color_std_mean / tbp_lv_radial_color_std_max"},
        {"position_distance_3d", "sqrt(tbp_lv_x * tbp_lv_x + tbp_lv_y * tbp_lv_y + tbp_lv_z * tbp_lv_z)"},
        {"perimeter_to_area_ratio", "tbp_lv_perimeterMM / tbp_lv_areaMM2"},
        {"area_to_perimeter_ratio", "tbp_lv_areaMM2 / tbp_lv_perimeterMM"},
        {"lesion_visibility_score", "tbp_lv_deltaLBnorm + tbp_lv_norm_color"},
        {"symmetry_border_consistency", "tbp_lv_symm_2axis * tbp_lv_norm_border"},
        {"consistency_symmetry_border",
         "(tbp_lv_symm_2axis * tbp_lv_norm_border) / (tbp_lv_symm_2axis + tbp_lv_norm_border)"},
        {"color_consistency", "tbp_lv_stdL / tbp_lv_Lext"},
        {"consistency_color", "(tbp_lv_stdL * tbp_lv_Lext) / (tbp_lv_stdL + tbp_lv_Lext)"},
        {"size_age_interaction", "clin_size_long_diam_mm * age_approx"},
        {"hue_color_std_interaction", "tbp_lv_H * tbp_lv_color_std_mean"},
        {"lesion_severity_index", "(tbp_lv_norm_border + tbp_lv_norm_color + tbp_lv_eccentricity) / 3"},
        {"shape_complexity_index",
         "tbp_lv_areaMM2 / (tbp_lv_perimeterMM * tbp_lv_perimeterMM) + tbp_lv_norm_border + (1 - tbp_lv_symm_2axis)"},
        {"color_contrast_index", "tbp_lv_deltaA + tbp_lv_deltaB + tbp_lv_deltaL + tbp_lv_deltaLBnorm"},
        {"log_lesion_area", "log(tbp_lv_areaMM2 + 1)"},
        {"normalized_lesion_size", "clin_size_long_diam_mm / age_approx"},
        {"mean_hue_difference", "(tbp_lv_H + tbp_lv_Hext) / 2"},
        {"std_dev_contrast",
         "sqrt((tbp_lv_deltaA * tbp_lv_deltaA + tbp_lv_deltaB * tbp_lv_deltaB + tbp_lv_deltaL * tbp_lv_deltaL) / 3)"},
        {"color_shape_composite_index",
         "(tbp_lv_color_std_mean + tbp_lv_area_perim_ratio + tbp_lv_symm_2axis) / 3"},
        {"overall_color_difference", "(tbp_lv_deltaA + tbp_lv_deltaB + tbp_lv_deltaL) / 3"},
        {"symmetry_perimeter_interaction", "tbp_lv_symm_2axis * tbp_lv_perimeterMM"},
        {"comprehensive_lesion_index",
         "(tbp_lv_area_perim_ratio + tbp_lv_eccentricity + tbp_lv_norm_color + tbp_lv_symm_2axis) / 4"},
        {"color_variance_ratio", "tbp_lv_color_std_mean / tbp_lv_stdLExt"},
        {"border_color_interaction", "tbp_lv_norm_border * tbp_lv_norm_color"},
        {"size_color_contrast_ratio", "clin_size_long_diam_mm / tbp_lv_deltaLBnorm"},
        {"age_normalized_nevi_confidence", "tbp_lv_nevi_confidence / age_approx"},
        {"color_asymmetry_index", "tbp_lv_radial_color_std_max * tbp_lv_symm_2axis"},
        {"volume_approximation_3d",
         "tbp_lv_areaMM2 * sqrt(tbp_lv_x * tbp_lv_x + tbp_lv_y * tbp_lv_y + tbp_lv_z * tbp_lv_z)"},
        {"color_range",
         "abs(tbp_lv_L - tbp_lv_Lext) + abs(tbp_lv_A - tbp_lv_Aext) + abs(tbp_lv_B - tbp_lv_Bext)"},
        {"shape_color_consistency", "tbp_lv_eccentricity * tbp_lv_color_std_mean"},
        {"border_length_ratio",
         "tbp_lv_perimeterMM / (2 * 3.141592653589793 * sqrt(tbp_lv_areaMM2 / 3.141592653589793))"},
        {"age_size_symmetry_index", "age_approx * clin_size_long_diam_mm * tbp_lv_symm_2axis"},
        {"index_age_size_symmetry", "age_approx * tbp_lv_areaMM2 * tbp_lv_symm_2axis"},
        {"aspect_ratio", "tbp_lv_minorAxisMM / clin_size_long_diam_mm"},
        {"luminance_delta_ratio", "tbp_lv_deltaL / tbp_lv_deltaLB"},
        {"eccentricity_area_interaction", "tbp_lv_eccentricity * tbp_lv_areaMM2"},
        {"nevi_size_interaction", "tbp_lv_nevi_confidence * clin_size_long_diam_mm"},
    }};
    return catalog;
}

} // namespace lesionboost
