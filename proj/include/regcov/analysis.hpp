#pragma once
// Coverage aggregation: per-benchmark category matrices, coverage tiers,
// normalized shares, and systemic-risk coverage sums. Also loads the bundled
// reference fixture of published per-benchmark counts, which carries the
// matrix cells and the published summary totals side by side because the two
// do not agree everywhere.

#include "regcov/error.hpp"
#include "regcov/judge.hpp"
#include "regcov/taxonomy.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace regcov::analysis {

class UnknownBenchmarkError : public Error {
 public:
  using Error::Error;
};

enum class DenominatorMode { LabeledQuestions, AllQuestions };

std::string_view denominator_name(DenominatorMode mode);  // "labeled" / "all"
DenominatorMode parse_denominator(std::string_view name);

struct CoverageMatrix {
  std::vector<std::string> benchmarks;  // display order
  // counts[b][c]: questions of benchmark b whose label set contains c. A
  // question with k labels contributes to k cells.
  std::map<std::string, std::map<CategoryCode, std::size_t>> counts;
  std::map<std::string, std::size_t> labeled_totals;   // questions with >=1 label
  std::map<std::string, std::size_t> ingested_totals;  // questions ingested
  std::map<CategoryCode, std::size_t> category_totals;  // column sums of counts

  std::size_t count(const std::string& benchmark, CategoryCode code) const;
  std::size_t labeled(const std::string& benchmark) const;
  std::size_t ingested(const std::string& benchmark) const;
};

// Every classification must name a benchmark present in corpus_sizes; one
// classification per question is assumed (the CLI enforces a single model).
CoverageMatrix aggregate(const std::vector<judge::Classification>& classifications,
                         const std::map<std::string, std::size_t>& corpus_sizes);

enum class CoverageTier { Dominant, Moderate, Minimal, Zero };

// Dominant > 10,000; Moderate 1,000..10,000 inclusive; Minimal 1..999; Zero 0.
CoverageTier tier(std::size_t category_total);
std::string_view tier_name(CoverageTier tier);

// Share of benchmark b's questions labeled with the category, against either
// its labeled-question count or its ingested count; 0 when the denominator is 0.
double normalized_share(const CoverageMatrix& matrix, const std::string& benchmark,
                        CategoryCode code, DenominatorMode mode);

// Unweighted mean of normalized_share over every benchmark in the matrix.
double avg_normalized(const CoverageMatrix& matrix, CategoryCode code,
                      DenominatorMode mode);

struct RiskCoverage {
  SystemicRisk risk;
  CodeSet components;
  std::size_t question_sum = 0;   // sum over components, no deduplication
  double coverage_pct = 0;        // fraction: question_sum / corpus_size
};

// One row per risk, in the fixed risk order. Components drawn from risk_map;
// sums take each component's category total (a question counted under several
// components or risks counts each time).
std::vector<RiskCoverage> risk_coverage(
    const std::map<CategoryCode, std::size_t>& category_totals,
    const RiskMapping& risk_map, std::size_t corpus_size);
std::vector<RiskCoverage> risk_coverage(const CoverageMatrix& matrix,
                                        const RiskMapping& risk_map,
                                        std::size_t corpus_size);

// Bundled reference data: the published six-benchmark coverage survey. The
// per-cell matrix and the published summary totals are kept side by side; the
// published totals are authoritative for tier and risk arithmetic because the
// cells do not always sum to them.
struct CoverageFixture {
  std::vector<std::string> benchmarks;
  std::map<std::string, std::size_t> corpus_sizes;
  std::map<std::string, std::map<CategoryCode, std::size_t>> cells;
  std::map<CategoryCode, std::size_t> reported_category_totals;
  std::map<std::string, std::size_t> reported_capability_benchmark_totals;
  std::map<std::string, std::size_t> reported_propensity_benchmark_totals;
  std::size_t reported_capability_grand_total = 0;
  std::size_t reported_propensity_grand_total = 0;
  std::string notes;

  CoverageMatrix to_matrix() const;  // cells only; labeled totals unpublished
  std::size_t corpus_total() const;
};

CoverageFixture parse_fixture(const std::string& json_text);
CoverageFixture load_fixture(const std::filesystem::path& path);

struct AnalysisReport {
  DenominatorMode mode = DenominatorMode::AllQuestions;
  std::size_t corpus_size = 0;
  CoverageMatrix matrix;
  // Totals driving tiers, risks, and grand totals: the published summary
  // values when built from the fixture, otherwise the matrix column sums.
  std::map<CategoryCode, std::size_t> category_totals;
  bool totals_reported = false;
  std::size_t capability_grand_total = 0;
  std::size_t propensity_grand_total = 0;
  std::map<CategoryCode, double> avg_normalized_share;
  std::vector<RiskCoverage> risks;
  RiskMapping risk_map;
};

AnalysisReport build_report(const CoverageMatrix& matrix, const RiskMapping& risk_map,
                            DenominatorMode mode);
AnalysisReport build_report(const CoverageFixture& fixture, const RiskMapping& risk_map,
                            DenominatorMode mode);

// config_json: the effective run configuration to embed for provenance; pass
// an empty string to omit.
std::string report_to_json(const AnalysisReport& report,
                           const std::string& config_json = "");
std::string report_to_markdown(const AnalysisReport& report);
// benchmark rows x category columns of one family, with a trailing total row
// and column computed from the cells.
std::string matrix_to_csv(const CoverageMatrix& matrix, CategoryKind kind);
// Per-benchmark percentage shares for plotting.
std::string heatmap_json(const CoverageMatrix& matrix, DenominatorMode mode);

}  // namespace regcov::analysis
