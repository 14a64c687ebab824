#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "lesionboost/dataset.hpp"
#include "test_support.hpp"

using namespace lesionboost;
using testsupport::fixture_path;

namespace {

std::string small_csv(const std::string& target_row3 = "0") {
    return "isic_id,patient_id,target,a,b,cat\n"
           "L1,P1,1,1.0,2.0,red\n"
           "L2,P1,0,3.5,,blue\n"
           "L3,P2," + target_row3 + ",0.5,1.5,red\n"
           "L4,P2,1,xx,4.0,\n";
}

dataset_schema small_schema() {
    return testsupport::tiny_schema({"a", "b"}, {"cat"});
}

} // namespace

TEST_CASE("load_dataset on a 4-row file") {
    std::string dir = testsupport::make_temp_dir("ingest");
    std::string path = testsupport::write_temp_file(dir, "t.csv", small_csv());

    auto [ds, report] = load_dataset(path, small_schema());
    REQUIRE(ds.size() == 4);
    CHECK(ds.patient_groups().size() == 2);
    CHECK(report.rows_loaded == 4);
    CHECK(report.rejected_rows.empty());
    CHECK(report.missing_counts.at("b") == 1);
    CHECK(report.missing_counts.at("a") == 1);  // "xx" fails to parse
    CHECK(report.parse_failures.at("a") == 1);
    CHECK(report.missing_counts.at("cat") == 1);
}

TEST_CASE("rows with a target outside {0,1} are rejected and counted") {
    std::string dir = testsupport::make_temp_dir("ingest");
    std::string path = testsupport::write_temp_file(dir, "t.csv", small_csv("2"));
    auto [ds, report] = load_dataset(path, small_schema());
    CHECK(ds.size() == 3);
    REQUIRE(report.rejected_rows.size() == 1);
    CHECK(report.rejected_rows[0] == 3);
}

TEST_CASE("missing required header column names the column") {
    std::string dir = testsupport::make_temp_dir("ingest");
    std::string path = testsupport::write_temp_file(
        dir, "t.csv", "isic_id,patient_id,target,a,cat\nL1,P1,0,1,red\n");
    try {
        load_dataset(path, small_schema());
        FAIL("expected schema_error");
    } catch (const schema_error& e) {
        CHECK(std::string(e.what()).find("'b'") != std::string::npos);
    }
}

TEST_CASE("duplicate lesion ids are an integrity error") {
    std::string dir = testsupport::make_temp_dir("ingest");
    std::string path = testsupport::write_temp_file(
        dir, "t.csv",
        "isic_id,patient_id,target,a,b,cat\nL1,P1,0,1,2,red\nL1,P2,1,3,4,blue\n");
    CHECK_THROWS_AS(load_dataset(path, small_schema()), integrity_error);
}

TEST_CASE("fixture load report counts blanks per column") {
    auto [ds, report] = load_dataset(fixture_path("lesions_10.csv"), default_schema());
    CHECK(ds.size() == 10);
    CHECK(report.missing_counts.at("age_approx") == 3);
}

TEST_CASE("fixture dataset loads with patient partition intact") {
    auto [ds, report] = load_dataset(fixture_path("lesions_50.csv"), default_schema());
    REQUIRE(ds.size() == 50);
    CHECK(ds.patient_groups().size() == 10);
    CHECK(report.rejected_rows.empty());

    // groups are disjoint and cover all records
    std::set<size_t> seen;
    for (const auto& [patient, rows] : ds.patient_groups()) {
        for (size_t r : rows) {
            CHECK(ds.records()[r].patient_id == patient);
            CHECK(seen.insert(r).second);
        }
    }
    CHECK(seen.size() == ds.size());
}

TEST_CASE("relabel_diagnosis follows the three-class mapping") {
    CHECK(relabel_diagnosis("melanoma") == three_class_label::melanoma);
    CHECK(relabel_diagnosis("  Melanoma ") == three_class_label::melanoma);
    CHECK(relabel_diagnosis("nevus") == three_class_label::nevus);
    CHECK(relabel_diagnosis("basal cell carcinoma") == three_class_label::bkl);
    CHECK(relabel_diagnosis("seborrheic keratosis") == three_class_label::bkl);
    CHECK(relabel_diagnosis("solar lentigo") == three_class_label::bkl);
    CHECK(relabel_diagnosis("Lentigo NOS") == three_class_label::bkl);
    CHECK(relabel_diagnosis("dermatofibroma") == three_class_label::nevus);
    CHECK(relabel_diagnosis("angiofibroma or fibrous papule") == three_class_label::nevus);
    CHECK_THROWS_AS(relabel_diagnosis(""), input_error);
    CHECK_THROWS_AS(relabel_diagnosis("   "), input_error);
}

TEST_CASE("relabel_diagnosis is idempotent on the class names") {
    for (auto label : {three_class_label::melanoma, three_class_label::nevus,
                       three_class_label::bkl})
        CHECK(relabel_diagnosis(to_string(label)) == label);
}

TEST_CASE("merge_prediction_columns coverage and range checks") {
    auto schema = testsupport::tiny_schema({"a"}, {}, {"p1"});
    std::vector<lesion_record> records;
    for (int i = 0; i < 4; ++i) {
        lesion_record r;
        r.lesion_id = "L" + std::to_string(i);
        r.patient_id = "P" + std::to_string(i / 2);
        r.target = i % 2;
        records.push_back(r);
    }
    dataset ds(schema, records);

    SECTION("full coverage") {
        prediction_table preds;
        for (int i = 0; i < 4; ++i) preds["L" + std::to_string(i)]["p1"] = 0.25 * i;
        auto [merged, rep] = merge_prediction_columns(ds, preds);
        CHECK(rep.coverage == 1.0);
        CHECK(merged.records()[3].predictions.at("p1") == 0.75);
    }
    SECTION("partial coverage leaves gaps") {
        prediction_table preds;
        preds["L0"]["p1"] = 0.1;
        preds["L2"]["p1"] = 0.9;
        auto [merged, rep] = merge_prediction_columns(ds, preds);
        CHECK(rep.coverage == 0.5);
        CHECK(merged.records()[1].predictions.empty());
        CHECK(merged.records()[3].predictions.empty());
    }
    SECTION("out-of-range value names the lesion") {
        prediction_table preds;
        preds["L1"]["p1"] = 1.3;
        try {
            merge_prediction_columns(ds, preds);
            FAIL("expected range_error");
        } catch (const lesionboost::range_error& e) {
            CHECK(std::string(e.what()).find("L1") != std::string::npos);
        }
    }
}

TEST_CASE("canonical dataset round trip is identical") {
    auto [ds, report] = load_dataset(fixture_path("lesions_50.csv"), default_schema());
    auto preds = load_prediction_table(fixture_path("predictions_50.csv"), ds.schema());
    auto [merged, rep] = merge_prediction_columns(ds, preds);
    CHECK(rep.coverage == Catch::Approx(0.88));

    std::string dir = testsupport::make_temp_dir("roundtrip");
    std::string path = dir + "/dataset.json";
    save_dataset(merged, path);
    dataset reloaded = load_canonical_dataset(path);
    CHECK(reloaded == merged);
}

TEST_CASE("schema hash mismatch on reload is an error") {
    auto [ds, report] = load_dataset(fixture_path("lesions_10.csv"), default_schema());
    std::string dir = testsupport::make_temp_dir("hash");
    std::string path = dir + "/dataset.json";
    save_dataset(ds, path);

    nlohmann::json j;
    {
        std::ifstream in(path);
        in >> j;
    }
    j["schema"]["diagnosis_column"] = "tampered";
    testsupport::write_temp_file(dir, "dataset.json", j.dump());
    CHECK_THROWS_AS(load_canonical_dataset(path), integrity_error);
}

TEST_CASE("synthetic provenance is a pure row filter") {
    auto [ds, report] = load_dataset(fixture_path("lesions_50.csv"), default_schema());
    dataset real = ds.filter_real();
    size_t n_synth = 0;
    for (const auto& r : ds.records())
        if (r.origin == provenance::synthetic) ++n_synth;
    REQUIRE(n_synth > 0);
    CHECK(real.size() == ds.size() - n_synth);

    size_t j = 0;
    for (const auto& r : ds.records()) {
        if (r.origin != provenance::real) continue;
        CHECK(real.records()[j] == r);
        ++j;
    }
}

TEST_CASE("dataset rejects records outside the schema") {
    auto schema = testsupport::tiny_schema({"a"});
    lesion_record r;
    r.lesion_id = "L1";
    r.patient_id = "P1";
    r.numerics["not_in_schema"] = 1.0;
    CHECK_THROWS_AS(dataset(schema, {r}), schema_error);
}
