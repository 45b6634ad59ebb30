#include <doctest.h>

#include "regcov/analysis.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

using namespace regcov;
using namespace regcov::analysis;
namespace fs = std::filesystem;

namespace {

fs::path fixture_path() {
  return fs::path(REGCOV_DATA_DIR) / "reference_coverage.json";
}

judge::Classification labeled(const std::string& id, const std::string& benchmark,
                              std::initializer_list<const char*> caps,
                              std::initializer_list<const char*> props) {
  judge::Classification c;
  c.question_id = id;
  c.benchmark = benchmark;
  c.model_id = "judge-1";
  for (const char* t : caps) c.capabilities.insert(parse_code(t));
  for (const char* t : props) c.propensities.insert(parse_code(t));
  return c;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("aggregate counts label occurrences per benchmark") {
  std::vector<judge::Classification> classifications = {
      labeled("b_0", "bench", {}, {"P3"}),
      labeled("b_1", "bench", {"C1"}, {"P3"}),
      labeled("b_2", "bench", {}, {}),  // unlabeled question
      labeled("o_0", "other", {"C1", "C2"}, {}),
  };
  std::map<std::string, std::size_t> sizes = {{"bench", 10}, {"other", 5},
                                              {"empty", 3}};
  auto matrix = aggregate(classifications, sizes);

  CHECK(matrix.count("bench", parse_code("P3")) == 2);
  CHECK(matrix.count("bench", parse_code("C1")) == 1);
  CHECK(matrix.count("other", parse_code("C1")) == 1);
  CHECK(matrix.count("other", parse_code("C2")) == 1);  // k labels, k cells
  CHECK(matrix.count("empty", parse_code("C1")) == 0);

  CHECK(matrix.labeled("bench") == 2);  // b_2 carries no label
  CHECK(matrix.labeled("other") == 1);
  CHECK(matrix.labeled("empty") == 0);
  CHECK(matrix.ingested("bench") == 10);
  CHECK(matrix.ingested("empty") == 3);

  CHECK(matrix.category_totals.at(parse_code("P3")) == 2);
  CHECK(matrix.category_totals.at(parse_code("C1")) == 2);

  // Column sums always equal the per-benchmark cells.
  for (const auto& [code, total] : matrix.category_totals) {
    std::size_t sum = 0;
    for (const auto& benchmark : matrix.benchmarks) sum += matrix.count(benchmark, code);
    CHECK(sum == total);
  }

  CHECK(matrix.benchmarks ==
        std::vector<std::string>{"bench", "empty", "other"});
}

TEST_CASE("aggregate rejects unknown benchmarks") {
  std::vector<judge::Classification> classifications = {
      labeled("x_0", "mystery", {"C1"}, {}),
  };
  CHECK_THROWS_AS(aggregate(classifications, {{"bench", 5}}), UnknownBenchmarkError);
}

TEST_CASE("aggregate is permutation-invariant") {
  std::vector<judge::Classification> classifications;
  std::mt19937_64 rng(5150);
  for (int i = 0; i < 60; ++i) {
    std::string benchmark = i % 2 ? "a" : "b";
    judge::Classification c;
    c.question_id = benchmark + "_" + std::to_string(i);
    c.benchmark = benchmark;
    c.model_id = "judge-1";
    for (const auto& def : all_categories()) {
      if (rng() % 4 == 0) {
        (def.code.kind() == CategoryKind::Capability ? c.capabilities
                                                     : c.propensities)
            .insert(def.code);
      }
    }
    classifications.push_back(std::move(c));
  }
  std::map<std::string, std::size_t> sizes = {{"a", 30}, {"b", 30}};
  auto base = aggregate(classifications, sizes);

  auto shuffled = classifications;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto again = aggregate(shuffled, sizes);
  CHECK(again.counts == base.counts);
  CHECK(again.labeled_totals == base.labeled_totals);
  CHECK(again.ingested_totals == base.ingested_totals);
  CHECK(again.category_totals == base.category_totals);
}

TEST_CASE("tier boundaries match the published ranges") {
  CHECK(tier(104640) == CoverageTier::Dominant);
  CHECK(tier(10001) == CoverageTier::Dominant);
  CHECK(tier(10000) == CoverageTier::Moderate);
  CHECK(tier(9502) == CoverageTier::Moderate);
  CHECK(tier(1000) == CoverageTier::Moderate);
  CHECK(tier(999) == CoverageTier::Minimal);
  CHECK(tier(1) == CoverageTier::Minimal);
  CHECK(tier(0) == CoverageTier::Zero);
  CHECK(tier_name(CoverageTier::Dominant) == "Dominant");
  CHECK(tier_name(CoverageTier::Zero) == "Zero");
}

TEST_CASE("normalized shares divide by the chosen denominator") {
  std::vector<judge::Classification> classifications;
  for (int i = 0; i < 200; ++i) {
    bool carries = i < 50;
    classifications.push_back(labeled("b_" + std::to_string(i), "bench",
                                      carries ? std::initializer_list<const char*>{"C3"}
                                              : std::initializer_list<const char*>{"C1"},
                                      {}));
  }
  auto matrix = aggregate(classifications, {{"bench", 400}});
  CHECK(normalized_share(matrix, "bench", parse_code("C3"),
                         DenominatorMode::LabeledQuestions) == 0.25);
  CHECK(normalized_share(matrix, "bench", parse_code("C3"),
                         DenominatorMode::AllQuestions) == 0.125);
  CHECK(normalized_share(matrix, "bench", parse_code("P9"),
                         DenominatorMode::AllQuestions) == 0.0);
}

TEST_CASE("a category carried by every labeled question has share 1") {
  std::vector<judge::Classification> classifications = {
      labeled("b_0", "bench", {"C11"}, {"P3"}),
      labeled("b_1", "bench", {"C11"}, {}),
  };
  auto matrix = aggregate(classifications, {{"bench", 2}});
  CHECK(normalized_share(matrix, "bench", parse_code("C11"),
                         DenominatorMode::LabeledQuestions) == 1.0);
}

TEST_CASE("zero denominators give zero shares") {
  std::vector<judge::Classification> none;
  auto matrix = aggregate(none, {{"bench", 0}});
  CHECK(normalized_share(matrix, "bench", parse_code("C1"),
                         DenominatorMode::AllQuestions) == 0.0);
  CHECK(normalized_share(matrix, "bench", parse_code("C1"),
                         DenominatorMode::LabeledQuestions) == 0.0);
}

TEST_CASE("avg_normalized is the unweighted benchmark mean") {
  std::vector<judge::Classification> classifications;
  // bench a: 1 of 2 labeled questions carries C1 (share 0.5);
  // bench b: 7 of 10 carry C1 (share 0.7); average 0.6.
  for (int i = 0; i < 2; ++i)
    classifications.push_back(
        labeled("a_" + std::to_string(i), "a", i < 1 ? std::initializer_list<const char*>{"C1"}
                                                     : std::initializer_list<const char*>{"C2"},
                {}));
  for (int i = 0; i < 10; ++i)
    classifications.push_back(
        labeled("b_" + std::to_string(i), "b", i < 7 ? std::initializer_list<const char*>{"C1"}
                                                     : std::initializer_list<const char*>{"C2"},
                {}));
  auto matrix = aggregate(classifications, {{"a", 2}, {"b", 10}});
  CHECK(avg_normalized(matrix, parse_code("C1"), DenominatorMode::LabeledQuestions) ==
        doctest::Approx(0.6).epsilon(1e-12));
  // A single-benchmark matrix reduces to the share itself.
  auto only_b = aggregate({classifications.begin() + 2, classifications.end()},
                          {{"b", 10}});
  CHECK(avg_normalized(only_b, parse_code("C1"), DenominatorMode::LabeledQuestions) ==
        doctest::Approx(0.7).epsilon(1e-12));
  CHECK(avg_normalized(matrix, parse_code("C13"), DenominatorMode::AllQuestions) == 0.0);
}

TEST_CASE("the reference fixture carries cells and reported totals side by side") {
  auto fixture = load_fixture(fixture_path());
  CHECK(fixture.benchmarks ==
        std::vector<std::string>{"BBH", "BBQ", "CQA", "HLE", "MMLU", "TQA"});
  CHECK(fixture.corpus_total() == 194955);
  CHECK(fixture.corpus_sizes.at("MMLU") == 115700);

  // Reported summary totals.
  CHECK(fixture.reported_capability_grand_total == 11696);
  CHECK(fixture.reported_propensity_grand_total == 200788);
  CHECK(fixture.reported_category_totals.at(parse_code("P3")) == 104640);
  CHECK(fixture.reported_category_totals.at(parse_code("C11")) == 9502);

  // The per-benchmark cells do not sum to the reported totals everywhere;
  // both are kept, and the divergence is part of the record.
  auto matrix = fixture.to_matrix();
  std::size_t cap_cells = 0, prop_cells = 0;
  for (const auto& [code, total] : matrix.category_totals) {
    (code.kind() == CategoryKind::Capability ? cap_cells : prop_cells) += total;
  }
  CHECK(cap_cells == 12196);
  CHECK(prop_cells == 202655);
  CHECK(matrix.category_totals.at(parse_code("C11")) == 10002);
  CHECK(matrix.category_totals.at(parse_code("P3")) == 106680);
  // A row where the cells and the summary totals do agree.
  CHECK(matrix.category_totals.at(parse_code("C7")) ==
        fixture.reported_category_totals.at(parse_code("C7")));
  CHECK_FALSE(fixture.notes.empty());
}

TEST_CASE("fixture reports reproduce the published risk rows") {
  auto fixture = load_fixture(fixture_path());
  auto report = build_report(fixture, default_risk_mapping(),
                             DenominatorMode::AllQuestions);
  CHECK(report.totals_reported);
  CHECK(report.corpus_size == 194955);
  CHECK(report.capability_grand_total == 11696);
  CHECK(report.propensity_grand_total == 200788);

  REQUIRE(report.risks.size() == 4);
  const auto& hm = report.risks[0];
  CHECK(hm.risk == SystemicRisk::HarmfulManipulation);
  CHECK(hm.question_sum == 171846);
  CHECK(std::abs(hm.coverage_pct - 171846.0 / 194955.0) < 1e-12);

  const auto& cyber = report.risks[1];
  CHECK(cyber.question_sum == 1595);
  CHECK(std::abs(cyber.coverage_pct * 100.0 - 0.8) < 0.05);

  const auto& cbrn = report.risks[2];
  CHECK(cbrn.question_sum == 3396);
  CHECK(std::abs(cbrn.coverage_pct * 100.0 - 1.7) < 0.05);

  const auto& loc = report.risks[3];
  CHECK(loc.question_sum == 844);
  CHECK(std::abs(loc.coverage_pct * 100.0 - 0.4) < 0.05);
}

TEST_CASE("fixture tiers match the published groupings") {
  auto fixture = load_fixture(fixture_path());
  auto report = build_report(fixture, default_risk_mapping(),
                             DenominatorMode::AllQuestions);
  auto tier_of = [&](const char* code) {
    return tier(report.category_totals.at(parse_code(code)));
  };
  CHECK(tier_of("P3") == CoverageTier::Dominant);
  CHECK(tier_of("P4") == CoverageTier::Dominant);
  CHECK(tier_of("P5") == CoverageTier::Dominant);
  CHECK(tier_of("C11") == CoverageTier::Moderate);
  CHECK(tier_of("P2") == CoverageTier::Moderate);
  CHECK(tier_of("P6") == CoverageTier::Moderate);
  for (const char* code : {"C8", "C9", "C10", "P8", "P9"}) {
    CAPTURE(code);
    CHECK(tier_of(code) == CoverageTier::Zero);
  }
}

TEST_CASE("risk sums have no deduplication across components or risks") {
  std::map<CategoryCode, std::size_t> totals;
  for (const auto& def : all_categories()) totals[def.code] = 0;
  totals[parse_code("P6")] = 100;  // P6 sits in both CBRN and Cyber Offence
  totals[parse_code("C1")] = 7;
  auto rows = risk_coverage(totals, default_risk_mapping(), 1000);
  REQUIRE(rows.size() == 4);
  CHECK(rows[1].risk == SystemicRisk::CyberOffence);
  CHECK(rows[1].question_sum == 107);
  CHECK(rows[2].risk == SystemicRisk::CbrnRisks);
  CHECK(rows[2].question_sum == 100);
  CHECK(rows[1].coverage_pct == doctest::Approx(0.107).epsilon(1e-12));
}

TEST_CASE("an empty component set covers nothing") {
  auto mapping = load_risk_mapping(R"({"Cyber Offence": []})");
  std::map<CategoryCode, std::size_t> totals = {{parse_code("C1"), 50}};
  auto rows = risk_coverage(totals, mapping, 200);
  CHECK(rows[1].risk == SystemicRisk::CyberOffence);
  CHECK(rows[1].question_sum == 0);
  CHECK(rows[1].coverage_pct == 0.0);
}

TEST_CASE("derived reports use the matrix column sums") {
  std::vector<judge::Classification> classifications = {
      labeled("a_0", "a", {"C1"}, {"P3"}),
      labeled("a_1", "a", {"C1"}, {}),
  };
  auto matrix = aggregate(classifications, {{"a", 4}});
  auto report = build_report(matrix, default_risk_mapping(),
                             DenominatorMode::LabeledQuestions);
  CHECK_FALSE(report.totals_reported);
  CHECK(report.corpus_size == 4);
  CHECK(report.capability_grand_total == 2);
  CHECK(report.propensity_grand_total == 1);
  CHECK(report.category_totals.at(parse_code("C1")) == 2);
  REQUIRE(report.risks.size() == 4);
  // C1 belongs to Cyber Offence; P3 to Harmful Manipulation.
  CHECK(report.risks[0].question_sum == 1);
  CHECK(report.risks[1].question_sum == 2);
}

TEST_CASE("empty classifications produce an all-zero report") {
  auto matrix = aggregate({}, {{"a", 5}, {"b", 5}});
  auto report =
      build_report(matrix, default_risk_mapping(), DenominatorMode::AllQuestions);
  CHECK(report.capability_grand_total == 0);
  CHECK(report.propensity_grand_total == 0);
  for (const auto& def : all_categories()) {
    auto it = report.category_totals.find(def.code);
    CHECK((it == report.category_totals.end() || it->second == 0));
  }
  for (const auto& row : report.risks) {
    CHECK(row.question_sum == 0);
    CHECK(row.coverage_pct == 0.0);
  }
  auto doc = nlohmann::json::parse(report_to_json(report));
  CHECK(doc.at("tiers").at("Zero").size() == 22);
  CHECK(doc.at("tiers").at("Dominant").empty());
}

TEST_CASE("report JSON carries provenance and both matrices") {
  auto fixture = load_fixture(fixture_path());
  auto report = build_report(fixture, default_risk_mapping(),
                             DenominatorMode::AllQuestions);
  auto doc = nlohmann::json::parse(report_to_json(report, R"({"seed": 42})"));

  CHECK(doc.at("metadata").at("denominator_mode") == "all");
  CHECK(doc.at("metadata").at("totals_source") == "reported");
  CHECK(doc.at("metadata").at("corpus_size") == 194955);
  CHECK(doc.at("metadata").at("config").at("seed") == 42);

  CHECK(doc.at("capability_matrix").at("MMLU").at("C11") == 6649);
  CHECK(doc.at("propensity_matrix").at("BBQ").at("P4") == 54202);
  CHECK(doc.at("benchmark_totals").at("ingested").at("HLE") == 2500);
  CHECK(doc.at("category_totals").at("P3") == 104640);
  CHECK(doc.at("derived_category_totals").at("C11") == 10002);
  CHECK(doc.at("grand_totals").at("capabilities") == 11696);
  CHECK(doc.at("grand_totals").at("propensities") == 200788);

  auto zero = doc.at("tiers").at("Zero");
  std::vector<std::string> zero_codes(zero.begin(), zero.end());
  CHECK(zero_codes == std::vector<std::string>{"C8", "C9", "C10", "P8", "P9"});

  REQUIRE(doc.at("risk_coverage").size() == 4);
  CHECK(doc["risk_coverage"][0].at("risk") == "Harmful Manipulation");
  CHECK(doc["risk_coverage"][0].at("questions") == 171846);

  // Identical inputs serialize to identical bytes.
  CHECK(report_to_json(report, R"({"seed": 42})") ==
        report_to_json(report, R"({"seed": 42})"));
}

TEST_CASE("CSV matrices have category columns and total margins") {
  auto fixture = load_fixture(fixture_path());
  auto matrix = fixture.to_matrix();

  std::string caps = matrix_to_csv(matrix, CategoryKind::Capability);
  CHECK(caps.rfind("benchmark,C1,C2,C3,C4,C5,C6,C7,C8,C9,C10,C11,C12,C13,total\n",
                   0) == 0);
  CHECK(caps.find("\ntotal,") != std::string::npos);
  CHECK(caps.find(",12196\n") != std::string::npos);  // cells grand total

  std::string props = matrix_to_csv(matrix, CategoryKind::Propensity);
  CHECK(props.rfind("benchmark,P1,P2,P3,P4,P5,P6,P7,P8,P9,total\n", 0) == 0);
  CHECK(props.find("BBQ,3,0,4018,54202,802,245,0,0,0,59270\n") != std::string::npos);
}

TEST_CASE("heatmap JSON lists per-benchmark percentage shares") {
  std::vector<judge::Classification> classifications = {
      labeled("a_0", "a", {"C1"}, {}),
      labeled("a_1", "a", {}, {"P3"}),
  };
  auto matrix = aggregate(classifications, {{"a", 4}});
  auto doc = nlohmann::json::parse(heatmap_json(matrix, DenominatorMode::AllQuestions));
  CHECK(doc.at("denominator_mode") == "all");
  CHECK(doc.at("categories").size() == 22);
  REQUIRE(doc.at("values_pct").size() == 1);
  REQUIRE(doc["values_pct"][0].size() == 22);
  CHECK(doc["values_pct"][0][0] == 25.0);  // C1: 1 of 4 ingested
}

TEST_CASE("markdown report includes tier and risk tables") {
  auto fixture = load_fixture(fixture_path());
  auto report = build_report(fixture, default_risk_mapping(),
                             DenominatorMode::AllQuestions);
  std::string md = report_to_markdown(report);
  CHECK(md.find("## Coverage tiers") != std::string::npos);
  CHECK(md.find("## Systemic-risk coverage") != std::string::npos);
  CHECK(md.find("Harmful Manipulation") != std::string::npos);
  CHECK(md.find("171,846") != std::string::npos);
  CHECK(md.find("1,595") != std::string::npos);
  CHECK(md.find("0.8%") != std::string::npos);
  CHECK(md.find("1.7%") != std::string::npos);
  CHECK(md.find("0.4%") != std::string::npos);
}

TEST_CASE("denominator modes parse and print") {
  CHECK(parse_denominator("labeled") == DenominatorMode::LabeledQuestions);
  CHECK(parse_denominator("all") == DenominatorMode::AllQuestions);
  CHECK(denominator_name(DenominatorMode::LabeledQuestions) == "labeled");
  CHECK(denominator_name(DenominatorMode::AllQuestions) == "all");
  CHECK_THROWS_AS(parse_denominator("none"), Error);
}

TEST_CASE("fixture parsing is strict") {
  CHECK_THROWS_AS(parse_fixture("not json"), Error);
  CHECK_THROWS_AS(parse_fixture("[]"), Error);
  // A benchmark missing from corpus_sizes fails the load.
  CHECK_THROWS_AS(parse_fixture(R"({
    "benchmarks": ["A"],
    "corpus_sizes": {},
    "capability_cells": {},
    "propensity_cells": {},
    "reported": {
      "category_totals": {},
      "capability_benchmark_totals": {},
      "propensity_benchmark_totals": {},
      "capability_grand_total": 0,
      "propensity_grand_total": 0
    }
  })"),
                  Error);
}

}  // TEST_SUITE("analysis")
