#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "lifetail/design.hpp"
#include "testutil.hpp"

using namespace lifetail;

namespace {

const char* kSchemaText =
    "# demographic covariates\n"
    "civ = widowed*,unmarried,married,divorced\n"
    "edu = primary*,secondary,tertiary,unobserved\n"
    "hht = collective*,single,couple,family,other\n"
    "org = native*,west-europe,other\n"
    "sex = female*,male\n";

CovariateSchema text_schema() {
    std::istringstream in(kSchemaText);
    return parse_schema(in);
}

}  // namespace

TEST_CASE("schema file parses names, categories and references") {
    auto schema = text_schema();
    REQUIRE(schema.covariates.size() == 5);
    CHECK(schema.covariates[0].name == "civ");
    CHECK(schema.covariates[0].reference == "widowed");
    CHECK(schema.covariates[2].categories.size() == 5);
    CHECK(schema.covariates[3].categories[1] == "west-europe");
    CHECK(schema.resolved());
    CHECK(schema.design_dim() == 14);
    auto names = schema.column_names();
    REQUIRE(names.size() == 14);
    CHECK(names[0] == "(intercept)");
    CHECK(names[1] == "civ=unmarried");
    CHECK(names[13] == "sex=male");
}

TEST_CASE("malformed schemas are rejected") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return parse_schema(in);
    };
    CHECK_THROWS(parse("civ widowed,married\n"));           // no '='
    CHECK_THROWS(parse("civ = widowed*,married*\n"));       // two references
    CHECK_THROWS(parse("civ = widowed,widowed*\n"));        // duplicate category
    CHECK_THROWS(parse("civ = Widowed*,married\n"));        // bad alphabet
    CHECK_THROWS(parse("civ = a*,b\nciv = c*,d\n"));        // duplicate covariate
}

TEST_CASE("records parse from the documented CSV layout") {
    auto schema = text_schema();
    std::istringstream in(
        "entry_age,exit_age,event,civ,edu,hht,org,sex\n"
        "90.0,101.3,1,widowed,primary,collective,native,female\n"
        "102.4,104.0,0,widowed,secondary,single,native,male\n");
    auto records = load_records(in, schema);
    REQUIRE(records.size() == 2);
    CHECK(records[0].entry_age == 90.0);
    CHECK(records[0].exit_age == 101.3);
    CHECK(records[0].event);
    CHECK(records[0].covariates.at("civ") == "widowed");
    CHECK_FALSE(records[1].event);

    ModelSpec spec{100.0, schema};
    auto extraction = to_exceedances(records, spec);
    REQUIRE(extraction.kept == 2);
    CHECK(extraction.data[0].y == doctest::Approx(1.3));
    CHECK(extraction.data[0].a == 0.0);
    CHECK(extraction.data[0].event);
    CHECK(extraction.data[1].y == doctest::Approx(4.0));
    CHECK(extraction.data[1].a == doctest::Approx(2.4));
    CHECK_FALSE(extraction.data[1].event);
}

TEST_CASE("bad rows are rejected with their row number") {
    auto schema = text_schema();
    auto load = [&](const std::string& body) {
        std::istringstream in("entry_age,exit_age,event,civ,edu,hht,org,sex\n" + body);
        return load_records(in, schema);
    };
    CHECK_THROWS_WITH_AS(load("104.0,102.4,0,widowed,primary,collective,native,female\n"),
                         doctest::Contains("row 2"), std::runtime_error);
    CHECK_THROWS_WITH_AS(load("90.0,abc,1,widowed,primary,collective,native,female\n"),
                         doctest::Contains("exit_age"), std::runtime_error);
    CHECK_THROWS_WITH_AS(load("90.0,101.0,2,widowed,primary,collective,native,female\n"),
                         doctest::Contains("event"), std::runtime_error);
    CHECK_THROWS_WITH_AS(load("90.0,101.0,1,widowed,doctorate,collective,native,female\n"),
                         doctest::Contains("doctorate"), std::runtime_error);
    CHECK_THROWS_WITH_AS(load("-1.0,101.0,1,widowed,primary,collective,native,female\n"),
                         doctest::Contains("positive"), std::runtime_error);

    std::istringstream missing("entry_age,exit_age,event,civ,edu,hht,org\n");
    CHECK_THROWS_WITH_AS(load_records(missing, schema), doctest::Contains("sex"),
                         std::runtime_error);
}

TEST_CASE("extra descriptive columns ride along") {
    auto schema = text_schema();
    std::istringstream in(
        "entry_age,exit_age,event,civ,edu,hht,org,sex,period\n"
        "90.0,101.3,1,widowed,primary,collective,native,female,2003\n");
    auto records = load_records(in, schema);
    CHECK(records[0].covariates.at("period") == "2003");
}

TEST_CASE("exceedance extraction drops and counts correctly") {
    auto schema = text_schema();
    auto base = testutil::all_reference_profile();
    std::vector<IndividualRecord> records;
    records.push_back({90.0, 99.5, true, base});    // below threshold
    records.push_back({90.0, 100.0, true, base});   // exactly at threshold: dropped
    records.push_back({90.0, 101.0, true, base});   // kept, a=0, y=1
    records.push_back({103.0, 105.2, false, base}); // kept, a=3, y=5.2
    records.push_back({101.0, 101.0, true, base});  // degenerate: entry == exit above u

    ModelSpec spec{100.0, schema};
    auto extraction = to_exceedances(records, spec);
    CHECK(extraction.kept == 2);
    CHECK(extraction.dropped_below_threshold == 2);
    CHECK(extraction.dropped_degenerate == 1);
    CHECK(extraction.kept + extraction.dropped_below_threshold +
              extraction.dropped_degenerate ==
          records.size());
    for (const auto& e : extraction.data) {
        CHECK(e.y > 0.0);
        CHECK(e.a < e.y);
        CHECK(e.design_row.size() == schema.design_dim());
    }
    CHECK(extraction.data[1].a == doctest::Approx(3.0));
    CHECK(extraction.data[1].y == doctest::Approx(5.2));
}

TEST_CASE("profile encoding") {
    auto schema = text_schema();
    auto row = encode_profile(testutil::all_reference_profile(), schema);
    REQUIRE(row.size() == 14);
    CHECK(row[0] == 1.0);
    for (std::size_t j = 1; j < row.size(); ++j) CHECK(row[j] == 0.0);

    // widowed + tertiary + single + native + female: exactly the
    // edu=tertiary and hht=single indicators fire.
    auto labels = testutil::all_reference_profile();
    labels["edu"] = "tertiary";
    labels["hht"] = "single";
    auto row9 = encode_profile(labels, schema);
    auto names = schema.column_names();
    for (std::size_t j = 1; j < row9.size(); ++j) {
        const bool expected = names[j] == "edu=tertiary" || names[j] == "hht=single";
        CHECK(row9[j] == (expected ? 1.0 : 0.0));
    }
    CHECK(row9 != row);

    auto bad = testutil::all_reference_profile();
    bad["sex"] = "robot";
    CHECK_THROWS_AS(encode_profile(bad, schema), std::invalid_argument);
    auto missing = testutil::all_reference_profile();
    missing.erase("sex");
    CHECK_THROWS_AS(encode_profile(missing, schema), std::invalid_argument);
}

TEST_CASE("encode/decode round-trips every schema-valid profile") {
    auto schema = text_schema();
    std::size_t count = 0;
    for (const auto& civ : schema.covariates[0].categories)
        for (const auto& edu : schema.covariates[1].categories)
            for (const auto& hht : schema.covariates[2].categories)
                for (const auto& org : schema.covariates[3].categories)
                    for (const auto& sex : schema.covariates[4].categories) {
                        std::map<std::string, std::string> labels = {
                            {"civ", civ}, {"edu", edu}, {"hht", hht},
                            {"org", org}, {"sex", sex}};
                        auto row = encode_profile(labels, schema);
                        CHECK(decode_profile(row, schema) == labels);
                        ++count;
                    }
    CHECK(count == 480);
}

TEST_CASE("reference resolution picks the highest-frequency category") {
    CovariateSchema schema;
    schema.covariates = {{"sex", {"female", "male"}, ""},
                         {"grp", {"a", "b", "c"}, ""}};
    std::vector<IndividualRecord> records;
    for (int i = 0; i < 3; ++i)
        records.push_back({90, 101, true, {{"sex", "male"}, {"grp", "b"}}});
    for (int i = 0; i < 2; ++i)
        records.push_back({90, 101, true, {{"sex", "female"}, {"grp", "a"}}});
    records.push_back({90, 101, true, {{"sex", "female"}, {"grp", "c"}}});
    CHECK_FALSE(schema.resolved());
    resolve_references(schema, records);
    CHECK(schema.resolved());
    CHECK(schema.covariates[0].reference == "female");  // 3 vs 3: earlier listed wins
    CHECK(schema.covariates[1].reference == "b");
}

TEST_CASE("records write/load round-trip") {
    auto schema = text_schema();
    std::vector<IndividualRecord> records;
    records.push_back({90.25, 101.375, true, testutil::all_reference_profile()});
    auto l2 = testutil::all_reference_profile();
    l2["sex"] = "male";
    records.push_back({102.5, 104.125, false, l2});
    std::ostringstream out;
    write_records(out, records, schema);
    std::istringstream in(out.str());
    auto back = load_records(in, schema);
    REQUIRE(back.size() == 2);
    CHECK(back[0].entry_age == records[0].entry_age);
    CHECK(back[1].exit_age == records[1].exit_age);
    CHECK(back[1].covariates.at("sex") == "male");
}

TEST_CASE("contingency summary counts and margins") {
    auto base = testutil::all_reference_profile();

    SUBCASE("single record, one band") {
        std::vector<IndividualRecord> records{{95.0, 101.0, true, base}};
        auto t = contingency_summary(records, {100.0}, {});
        CHECK(t.total == 1);
        CHECK(t.age_totals.size() == 2);
        CHECK(t.period_bands == std::vector<std::string>{"all"});
        CHECK(t.age_totals[1] == 1);  // 101 is above the only break
    }

    SUBCASE("boundary ages go to the lower-open upper-closed band") {
        std::vector<IndividualRecord> records{
            {90, 92.0, true, base},   // exactly at 92 -> (90,92]
            {90, 92.5, true, base},   // (92,94]
            {90, 94.0, false, base},  // exactly at 94 -> (92,94]
            {90, 90.0, false, base},  // at the lowest break -> underflow band
        };
        auto t = contingency_summary(records, {90.0, 92.0, 94.0}, {});
        REQUIRE(t.age_bands.size() == 4);
        CHECK(t.age_bands[1] == "(90,92]");
        CHECK(t.age_totals[0] == 1);
        CHECK(t.age_totals[1] == 1);
        CHECK(t.age_totals[2] == 2);
        CHECK(t.age_totals[3] == 0);
        CHECK(t.total == 4);
    }

    SUBCASE("period column splits calendar time; counts are conserved") {
        std::vector<IndividualRecord> records;
        for (int i = 0; i < 1000; ++i) {
            auto labels = base;
            labels["period"] = std::to_string(1995 + (i % 14) * 2);
            records.push_back({90.0, 90.5 + static_cast<double>(i % 40) * 0.4,
                               i % 3 != 0, labels});
        }
        auto t = contingency_summary(records, {92.0, 96.0, 100.0}, {1998, 2006, 2014});
        std::size_t sum = 0;
        for (const auto& row : t.counts)
            for (auto c : row) sum += c;
        CHECK(sum == 1000);
        CHECK(t.total == 1000);
        std::size_t asum = 0, psum = 0;
        for (auto c : t.age_totals) asum += c;
        for (auto c : t.period_totals) psum += c;
        CHECK(asum == 1000);
        CHECK(psum == 1000);
        CHECK(t.period_bands.size() == 4);
    }

    SUBCASE("breaks must be strictly increasing") {
        std::vector<IndividualRecord> records{{95.0, 101.0, true, base}};
        CHECK_THROWS(contingency_summary(records, {100.0, 100.0}, {}));
        CHECK_THROWS(contingency_summary(records, {100.0, 99.0}, {}));
    }
}
