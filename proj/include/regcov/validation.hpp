#pragma once
// Gold-standard annotations and agreement metrics: pooled multi-label
// confusion counts, micro precision/recall/F1, Cohen's kappa with the
// Landis-Koch bands, annotator agreement, and consensus merging.

#include "regcov/error.hpp"
#include "regcov/judge.hpp"
#include "regcov/taxonomy.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace regcov::validation {

class LengthMismatchError : public Error {
 public:
  using Error::Error;
};

class DegenerateMarginalsError : public Error {
 public:
  using Error::Error;
};

class MissingPredictionError : public Error {
 public:
  MissingPredictionError(const std::string& model, std::vector<std::string> ids);

  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
};

class NoOverlapError : public Error {
 public:
  using Error::Error;
};

class DuplicateAnnotationError : public Error {
 public:
  using Error::Error;
};

struct GoldAnnotation {
  std::string question_id;
  std::string annotator_id;
  CodeSet capabilities;
  CodeSet propensities;
  std::string rationale;  // optional free text

  bool operator==(const GoldAnnotation&) const = default;
};

// JSONL: {"question_id", "annotator_id", "capab": [...], "prop": [...],
// "rationale"?}. (question_id, annotator_id) must be unique.
std::string gold_to_jsonl(const std::vector<GoldAnnotation>& annotations);
std::vector<GoldAnnotation> parse_gold_jsonl(const std::string& text);
void save_gold(const std::vector<GoldAnnotation>& annotations,
               const std::filesystem::path& path);
std::vector<GoldAnnotation> load_gold(const std::filesystem::path& path);

struct LabelSets {
  CodeSet capabilities;
  CodeSet propensities;

  const CodeSet& of(CategoryKind kind) const {
    return kind == CategoryKind::Capability ? capabilities : propensities;
  }
  bool operator==(const LabelSets&) const = default;
};

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  bool operator==(const ConfusionCounts&) const = default;
};

// Pooled over every (question, label) decision of one family, across the gold
// ids. Every gold id must have a prediction; extra predictions are ignored.
ConfusionCounts confusion(const std::map<std::string, LabelSets>& predictions,
                          const std::map<std::string, LabelSets>& gold,
                          CategoryKind kind);

struct Prf {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// precision = tp/(tp+fp), recall = tp/(tp+fn), f1 = 2PR/(P+R). A zero
// denominator makes the metric vacuously 1.0 (no positives predicted, or
// none in gold); f1 is 0.0 when P+R is 0.
Prf micro_prf(const ConfusionCounts& counts);

// Cohen's kappa over two aligned decision sequences (categories are the
// distinct values; pooled binary decisions in practice). Identical constant
// sequences return 1.0; p_e == 1 with disagreement is impossible but guarded.
double cohen_kappa(const std::vector<int>& rater_a, const std::vector<int>& rater_b);

// Landis-Koch reading: <=0 "poor", (0,0.20] "slight", (0.20,0.40] "fair",
// (0.40,0.60] "moderate", (0.60,0.80] "substantial", (0.80,1] "almost perfect".
std::string_view kappa_band(double kappa);

struct AnnotatorPairKappa {
  std::string annotator_a;  // lexicographically before annotator_b
  std::string annotator_b;
  std::size_t shared_questions = 0;
  double capability_kappa = 0;
  double propensity_kappa = 0;
};

// Per-family kappa for every annotator pair over the questions both labeled;
// pairs with no shared questions are omitted. With overlap_only set, throws
// NoOverlap when no pair shares anything.
std::vector<AnnotatorPairKappa> interrater_agreement(
    const std::vector<GoldAnnotation>& annotations, bool overlap_only = true);

struct ConsensusResult {
  CodeSet capabilities;
  CodeSet propensities;
  CodeSet needs_review;  // labels included only by the tie rule

  bool operator==(const ConsensusResult&) const = default;
};

// Majority vote per label over one question's annotations; exact ties are
// included and flagged. An annotation by annotator "consensus" is a recorded
// manual decision and wins outright.
ConsensusResult consensus_merge(const std::vector<GoldAnnotation>& annotations);
std::map<std::string, ConsensusResult> consensus_by_question(
    const std::vector<GoldAnnotation>& annotations);

struct FamilyMetrics {
  ConfusionCounts counts;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double kappa = 0;
  std::string kappa_band;
  std::map<std::string, double> per_label_kappa;  // diagnostic, not headline
};

struct ModelMetrics {
  std::string model;
  std::size_t n_questions = 0;
  FamilyMetrics capabilities;
  FamilyMetrics propensities;
};

struct MetricsReport {
  std::vector<ModelMetrics> models;  // sorted by model id
  std::string averaging = "micro";
};

// Compares judge classifications against the consensus of the gold
// annotations, one report entry per model id present. Every consensus
// question must be classified by every model.
MetricsReport evaluate(const std::vector<judge::Classification>& classifications,
                       const std::vector<GoldAnnotation>& gold);

std::string metrics_to_json(const MetricsReport& report);
std::string metrics_to_markdown(const MetricsReport& report);

}  // namespace regcov::validation
