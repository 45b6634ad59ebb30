#include "regcov/analysis.hpp"

#include "util.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace regcov::analysis {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

}  // namespace

std::string_view denominator_name(DenominatorMode mode) {
  return mode == DenominatorMode::LabeledQuestions ? "labeled" : "all";
}

DenominatorMode parse_denominator(std::string_view name) {
  if (name == "labeled") return DenominatorMode::LabeledQuestions;
  if (name == "all") return DenominatorMode::AllQuestions;
  throw Error("unknown denominator mode \"" + std::string(name) +
              "\" (expected \"labeled\" or \"all\")");
}

std::size_t CoverageMatrix::count(const std::string& benchmark,
                                  CategoryCode code) const {
  auto row = counts.find(benchmark);
  if (row == counts.end()) return 0;
  auto cell = row->second.find(code);
  return cell == row->second.end() ? 0 : cell->second;
}

std::size_t CoverageMatrix::labeled(const std::string& benchmark) const {
  auto it = labeled_totals.find(benchmark);
  return it == labeled_totals.end() ? 0 : it->second;
}

std::size_t CoverageMatrix::ingested(const std::string& benchmark) const {
  auto it = ingested_totals.find(benchmark);
  return it == ingested_totals.end() ? 0 : it->second;
}

CoverageMatrix aggregate(const std::vector<judge::Classification>& classifications,
                         const std::map<std::string, std::size_t>& corpus_sizes) {
  CoverageMatrix matrix;
  for (const auto& [benchmark, size] : corpus_sizes) {
    matrix.benchmarks.push_back(benchmark);
    matrix.ingested_totals[benchmark] = size;
    matrix.labeled_totals[benchmark] = 0;
    matrix.counts[benchmark];
  }
  for (const auto& item : classifications) {
    if (!corpus_sizes.count(item.benchmark)) {
      throw UnknownBenchmarkError("classification for question " +
                                  item.question_id +
                                  " names unknown benchmark \"" +
                                  item.benchmark + "\"");
    }
    bool labeled = false;
    for (const CodeSet* labels : {&item.capabilities, &item.propensities}) {
      for (const auto& code : *labels) {
        ++matrix.counts[item.benchmark][code];
        ++matrix.category_totals[code];
        labeled = true;
      }
    }
    if (labeled) ++matrix.labeled_totals[item.benchmark];
  }
  return matrix;
}

CoverageTier tier(std::size_t category_total) {
  if (category_total > 10000) return CoverageTier::Dominant;
  if (category_total >= 1000) return CoverageTier::Moderate;
  if (category_total > 0) return CoverageTier::Minimal;
  return CoverageTier::Zero;
}

std::string_view tier_name(CoverageTier tier) {
  switch (tier) {
    case CoverageTier::Dominant:
      return "Dominant";
    case CoverageTier::Moderate:
      return "Moderate";
    case CoverageTier::Minimal:
      return "Minimal";
    case CoverageTier::Zero:
      return "Zero";
  }
  return "Zero";
}

double normalized_share(const CoverageMatrix& matrix, const std::string& benchmark,
                        CategoryCode code, DenominatorMode mode) {
  std::size_t denominator = mode == DenominatorMode::LabeledQuestions
                                ? matrix.labeled(benchmark)
                                : matrix.ingested(benchmark);
  if (denominator == 0) return 0.0;
  return static_cast<double>(matrix.count(benchmark, code)) /
         static_cast<double>(denominator);
}

double avg_normalized(const CoverageMatrix& matrix, CategoryCode code,
                      DenominatorMode mode) {
  if (matrix.benchmarks.empty()) {
    throw Error("avg_normalized needs at least one benchmark");
  }
  double sum = 0;
  for (const auto& benchmark : matrix.benchmarks) {
    sum += normalized_share(matrix, benchmark, code, mode);
  }
  return sum / static_cast<double>(matrix.benchmarks.size());
}

std::vector<RiskCoverage> risk_coverage(
    const std::map<CategoryCode, std::size_t>& category_totals,
    const RiskMapping& risk_map, std::size_t corpus_size) {
  if (corpus_size == 0) {
    throw Error("risk coverage needs a positive corpus size");
  }
  std::vector<RiskCoverage> out;
  for (SystemicRisk risk : kAllRisks) {
    RiskCoverage row;
    row.risk = risk;
    auto it = risk_map.find(risk);
    if (it != risk_map.end()) row.components = it->second;
    for (const auto& code : row.components) {
      auto total = category_totals.find(code);
      if (total != category_totals.end()) row.question_sum += total->second;
    }
    row.coverage_pct = static_cast<double>(row.question_sum) /
                       static_cast<double>(corpus_size);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<RiskCoverage> risk_coverage(const CoverageMatrix& matrix,
                                        const RiskMapping& risk_map,
                                        std::size_t corpus_size) {
  return risk_coverage(matrix.category_totals, risk_map, corpus_size);
}

CoverageMatrix CoverageFixture::to_matrix() const {
  CoverageMatrix matrix;
  matrix.benchmarks = benchmarks;
  for (const auto& benchmark : benchmarks) {
    matrix.ingested_totals[benchmark] = corpus_sizes.at(benchmark);
    matrix.labeled_totals[benchmark] = 0;  // not part of the published data
    auto row = cells.find(benchmark);
    matrix.counts[benchmark] = row == cells.end()
                                   ? std::map<CategoryCode, std::size_t>{}
                                   : row->second;
    for (const auto& [code, count] : matrix.counts[benchmark]) {
      matrix.category_totals[code] += count;
    }
  }
  return matrix;
}

std::size_t CoverageFixture::corpus_total() const {
  std::size_t total = 0;
  for (const auto& [benchmark, size] : corpus_sizes) total += size;
  return total;
}

namespace {

std::size_t require_count(const json& value, const std::string& what) {
  if (!value.is_number_unsigned()) {
    throw Error(what + " must be a nonnegative integer");
  }
  return value.get<std::size_t>();
}

void parse_cell_rows(const json& rows, CategoryKind kind,
                     CoverageFixture& fixture, const char* field) {
  if (!rows.is_object()) {
    throw Error(std::string(field) + " must be an object of code -> counts");
  }
  std::set<CategoryCode> seen;
  for (const auto& [key, row] : rows.items()) {
    CategoryCode code = parse_code(key);
    if (code.kind() != kind) {
      throw Error(std::string(field) + " has a code of the wrong family: " + key);
    }
    if (!row.is_array() || row.size() != fixture.benchmarks.size()) {
      throw Error(std::string(field) + " row " + key + " must list one count per benchmark");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::size_t count = require_count(row[i], std::string(field) + " cell " + key);
      fixture.cells[fixture.benchmarks[i]][code] = count;
    }
    seen.insert(code);
  }
  if (seen.size() != category_count(kind)) {
    throw Error(std::string(field) + " must cover every " +
                std::string(kind_name(kind)) + " code");
  }
}

std::map<std::string, std::size_t> parse_benchmark_totals(
    const json& obj, const CoverageFixture& fixture, const std::string& what) {
  if (!obj.is_object()) throw Error(what + " must be an object");
  std::map<std::string, std::size_t> out;
  for (const auto& [key, value] : obj.items()) {
    if (std::find(fixture.benchmarks.begin(), fixture.benchmarks.end(), key) ==
        fixture.benchmarks.end()) {
      throw Error(what + " names unknown benchmark \"" + key + "\"");
    }
    out[key] = require_count(value, what + " entry " + key);
  }
  if (out.size() != fixture.benchmarks.size()) {
    throw Error(what + " must cover every benchmark");
  }
  return out;
}

}  // namespace

CoverageFixture parse_fixture(const std::string& json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error("fixture is not a JSON object");
  }
  CoverageFixture fixture;
  if (!doc.contains("benchmarks") || !doc["benchmarks"].is_array() ||
      doc["benchmarks"].empty()) {
    throw Error("fixture needs a non-empty benchmarks array");
  }
  for (const auto& item : doc["benchmarks"]) {
    if (!item.is_string()) throw Error("benchmarks entries must be strings");
    fixture.benchmarks.push_back(item.get<std::string>());
  }
  if (std::set<std::string>(fixture.benchmarks.begin(), fixture.benchmarks.end())
          .size() != fixture.benchmarks.size()) {
    throw Error("fixture benchmarks must be unique");
  }
  if (!doc.contains("corpus_sizes") || !doc["corpus_sizes"].is_object()) {
    throw Error("fixture needs a corpus_sizes object");
  }
  fixture.corpus_sizes =
      parse_benchmark_totals(doc["corpus_sizes"], fixture, "corpus_sizes");
  if (!doc.contains("capability_cells") || !doc.contains("propensity_cells")) {
    throw Error("fixture needs capability_cells and propensity_cells");
  }
  parse_cell_rows(doc["capability_cells"], CategoryKind::Capability, fixture,
                  "capability_cells");
  parse_cell_rows(doc["propensity_cells"], CategoryKind::Propensity, fixture,
                  "propensity_cells");

  if (!doc.contains("reported") || !doc["reported"].is_object()) {
    throw Error("fixture needs a reported block of published totals");
  }
  const json& reported = doc["reported"];
  if (!reported.contains("category_totals") ||
      !reported["category_totals"].is_object()) {
    throw Error("reported.category_totals must be an object");
  }
  for (const auto& [key, value] : reported["category_totals"].items()) {
    fixture.reported_category_totals[parse_code(key)] =
        require_count(value, "reported.category_totals entry " + key);
  }
  if (fixture.reported_category_totals.size() !=
      category_count(CategoryKind::Capability) +
          category_count(CategoryKind::Propensity)) {
    throw Error("reported.category_totals must cover all 22 codes");
  }
  fixture.reported_capability_benchmark_totals = parse_benchmark_totals(
      reported.value("capability_benchmark_totals", json()), fixture,
      "reported.capability_benchmark_totals");
  fixture.reported_propensity_benchmark_totals = parse_benchmark_totals(
      reported.value("propensity_benchmark_totals", json()), fixture,
      "reported.propensity_benchmark_totals");
  fixture.reported_capability_grand_total = require_count(
      reported.value("capability_grand_total", json()),
      "reported.capability_grand_total");
  fixture.reported_propensity_grand_total = require_count(
      reported.value("propensity_grand_total", json()),
      "reported.propensity_grand_total");
  fixture.notes = doc.value("notes", std::string());
  return fixture;
}

CoverageFixture load_fixture(const std::filesystem::path& path) {
  try {
    return parse_fixture(util::read_file(path));
  } catch (const Error& err) {
    throw Error(path.string() + ": " + err.what());
  }
}

AnalysisReport build_report(const CoverageMatrix& matrix, const RiskMapping& risk_map,
                            DenominatorMode mode) {
  AnalysisReport report;
  report.mode = mode;
  report.matrix = matrix;
  report.category_totals = matrix.category_totals;
  report.totals_reported = false;
  for (const auto& benchmark : matrix.benchmarks) {
    report.corpus_size += matrix.ingested(benchmark);
  }
  for (const auto& def : all_categories()) {
    auto it = report.category_totals.find(def.code);
    std::size_t total = it == report.category_totals.end() ? 0 : it->second;
    if (def.code.kind() == CategoryKind::Capability) {
      report.capability_grand_total += total;
    } else {
      report.propensity_grand_total += total;
    }
    if (!matrix.benchmarks.empty()) {
      report.avg_normalized_share[def.code] = avg_normalized(matrix, def.code, mode);
    }
  }
  report.risk_map = risk_map;
  if (report.corpus_size > 0) {
    report.risks = risk_coverage(report.category_totals, risk_map, report.corpus_size);
  }
  return report;
}

AnalysisReport build_report(const CoverageFixture& fixture, const RiskMapping& risk_map,
                            DenominatorMode mode) {
  AnalysisReport report = build_report(fixture.to_matrix(), risk_map, mode);
  report.category_totals = fixture.reported_category_totals;
  report.totals_reported = true;
  report.capability_grand_total = fixture.reported_capability_grand_total;
  report.propensity_grand_total = fixture.reported_propensity_grand_total;
  if (report.corpus_size > 0) {
    report.risks = risk_coverage(report.category_totals, risk_map, report.corpus_size);
  }
  return report;
}

namespace {

ordered_json matrix_cells_json(const CoverageMatrix& matrix, CategoryKind kind) {
  ordered_json out = ordered_json::object();
  for (const auto& benchmark : matrix.benchmarks) {
    ordered_json row = ordered_json::object();
    for (const auto& code : all_codes(kind)) {
      row[code.text()] = matrix.count(benchmark, code);
    }
    out[benchmark] = std::move(row);
  }
  return out;
}

ordered_json totals_json(const std::map<CategoryCode, std::size_t>& totals) {
  ordered_json out = ordered_json::object();
  for (const auto& def : all_categories()) {
    auto it = totals.find(def.code);
    out[def.code.text()] = it == totals.end() ? 0 : it->second;
  }
  return out;
}

}  // namespace

std::string report_to_json(const AnalysisReport& report,
                           const std::string& config_json) {
  ordered_json out;
  ordered_json metadata;
  metadata["denominator_mode"] = std::string(denominator_name(report.mode));
  metadata["totals_source"] = report.totals_reported ? "reported" : "derived";
  metadata["corpus_size"] = report.corpus_size;
  if (!config_json.empty()) {
    json config = json::parse(config_json, nullptr, false);
    metadata["config"] = config.is_discarded() ? json(config_json) : config;
  }
  out["metadata"] = metadata;
  out["benchmarks"] = report.matrix.benchmarks;
  out["capability_matrix"] =
      matrix_cells_json(report.matrix, CategoryKind::Capability);
  out["propensity_matrix"] =
      matrix_cells_json(report.matrix, CategoryKind::Propensity);
  ordered_json benchmark_totals;
  ordered_json labeled = ordered_json::object();
  ordered_json ingested = ordered_json::object();
  for (const auto& benchmark : report.matrix.benchmarks) {
    labeled[benchmark] = report.matrix.labeled(benchmark);
    ingested[benchmark] = report.matrix.ingested(benchmark);
  }
  benchmark_totals["labeled"] = labeled;
  benchmark_totals["ingested"] = ingested;
  out["benchmark_totals"] = benchmark_totals;
  out["category_totals"] = totals_json(report.category_totals);
  if (report.totals_reported) {
    out["derived_category_totals"] = totals_json(report.matrix.category_totals);
  }
  ordered_json grand;
  grand["capabilities"] = report.capability_grand_total;
  grand["propensities"] = report.propensity_grand_total;
  out["grand_totals"] = grand;

  ordered_json tiers;
  for (CoverageTier t : {CoverageTier::Dominant, CoverageTier::Moderate,
                         CoverageTier::Minimal, CoverageTier::Zero}) {
    ordered_json codes = ordered_json::array();
    for (const auto& def : all_categories()) {
      auto it = report.category_totals.find(def.code);
      std::size_t total = it == report.category_totals.end() ? 0 : it->second;
      if (tier(total) == t) codes.push_back(def.code.text());
    }
    tiers[std::string(tier_name(t))] = codes;
  }
  out["tiers"] = tiers;

  ordered_json shares = ordered_json::object();
  for (const auto& def : all_categories()) {
    auto it = report.avg_normalized_share.find(def.code);
    shares[def.code.text()] = it == report.avg_normalized_share.end()
                                  ? 0.0
                                  : it->second * 100.0;
  }
  out["avg_normalized_pct"] = shares;

  ordered_json risks = ordered_json::array();
  for (const auto& row : report.risks) {
    ordered_json entry;
    entry["risk"] = std::string(risk_name(row.risk));
    ordered_json components = ordered_json::array();
    for (const auto& code : row.components) components.push_back(code.text());
    entry["components"] = components;
    entry["questions"] = row.question_sum;
    entry["coverage_fraction"] = row.coverage_pct;
    entry["coverage_pct"] = row.coverage_pct * 100.0;
    risks.push_back(std::move(entry));
  }
  out["risk_coverage"] = risks;
  return out.dump(2) + "\n";
}

std::string matrix_to_csv(const CoverageMatrix& matrix, CategoryKind kind) {
  std::vector<CategoryCode> codes = all_codes(kind);
  std::string out = "benchmark";
  for (const auto& code : codes) out += "," + code.text();
  out += ",total\n";
  std::map<CategoryCode, std::size_t> column_sums;
  for (const auto& benchmark : matrix.benchmarks) {
    out += benchmark;
    std::size_t row_sum = 0;
    for (const auto& code : codes) {
      std::size_t cell = matrix.count(benchmark, code);
      column_sums[code] += cell;
      row_sum += cell;
      out += "," + std::to_string(cell);
    }
    out += "," + std::to_string(row_sum) + "\n";
  }
  out += "total";
  std::size_t grand = 0;
  for (const auto& code : codes) {
    grand += column_sums[code];
    out += "," + std::to_string(column_sums[code]);
  }
  out += "," + std::to_string(grand) + "\n";
  return out;
}

std::string heatmap_json(const CoverageMatrix& matrix, DenominatorMode mode) {
  ordered_json out;
  out["denominator_mode"] = std::string(denominator_name(mode));
  out["benchmarks"] = matrix.benchmarks;
  ordered_json categories = ordered_json::array();
  for (const auto& def : all_categories()) categories.push_back(def.code.text());
  out["categories"] = categories;
  ordered_json values = ordered_json::array();
  for (const auto& benchmark : matrix.benchmarks) {
    ordered_json row = ordered_json::array();
    for (const auto& def : all_categories()) {
      row.push_back(normalized_share(matrix, benchmark, def.code, mode) * 100.0);
    }
    values.push_back(std::move(row));
  }
  out["values_pct"] = values;
  return out.dump(2) + "\n";
}

std::string report_to_markdown(const AnalysisReport& report) {
  std::string out = "# Coverage analysis\n\n";
  out += "Corpus size: " + util::with_thousands(report.corpus_size) +
         " questions across " + std::to_string(report.matrix.benchmarks.size()) +
         " benchmarks. Category totals are " +
         (report.totals_reported ? std::string("the published summary values")
                                 : std::string("derived from the matrix cells")) +
         "; normalization uses the " + std::string(denominator_name(report.mode)) +
         "-questions denominator.\n\n";

  out += "Grand totals: capabilities " +
         util::with_thousands(report.capability_grand_total) + ", propensities " +
         util::with_thousands(report.propensity_grand_total) + ".\n\n";

  out += "## Coverage tiers\n\n| Tier | Categories |\n|---|---|\n";
  for (CoverageTier t : {CoverageTier::Dominant, CoverageTier::Moderate,
                         CoverageTier::Minimal, CoverageTier::Zero}) {
    std::string row;
    for (const auto& def : all_categories()) {
      auto it = report.category_totals.find(def.code);
      std::size_t total = it == report.category_totals.end() ? 0 : it->second;
      if (tier(total) != t) continue;
      if (!row.empty()) row += ", ";
      row += def.code.text() + " (" + util::with_thousands(total) + ")";
    }
    out += "| " + std::string(tier_name(t)) + " | " + (row.empty() ? "-" : row) +
           " |\n";
  }

  out += "\n## Systemic-risk coverage\n\n";
  out += "| Systemic risk | Components | Questions | Coverage |\n|---|---|---|---|\n";
  for (const auto& row : report.risks) {
    std::string components;
    for (const auto& code : row.components) {
      if (!components.empty()) components += ", ";
      components += code.text();
    }
    out += "| " + std::string(risk_name(row.risk)) + " | " + components + " | " +
           util::with_thousands(row.question_sum) + " | " +
           util::fixed(row.coverage_pct * 100.0, 1) + "% |\n";
  }
  out += "\n";
  return out;
}

}  // namespace regcov::analysis
