#include "regcov/validation.hpp"

#include "util.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

namespace regcov::validation {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  return out;
}

json codes_to_json(const CodeSet& codes) {
  json arr = json::array();
  for (const auto& code : codes) arr.push_back(code.text());
  return arr;
}

CodeSet codes_from_json(const json& arr, CategoryKind kind, std::size_t line,
                        const char* field) {
  if (!arr.is_array()) {
    throw ParseError(std::string(field) + " must be an array", line);
  }
  CodeSet out;
  for (const auto& item : arr) {
    if (!item.is_string()) {
      throw ParseError(std::string(field) + " entries must be strings", line);
    }
    CategoryCode code = [&] {
      try {
        return parse_code(item.get<std::string>());
      } catch (const UnknownCodeError& err) {
        throw ParseError(err.what(), line);
      }
    }();
    if (code.kind() != kind) {
      throw ParseError("code " + code.text() + " is not a " +
                           std::string(kind_name(kind)) + " code",
                       line);
    }
    out.insert(code);
  }
  return out;
}

}  // namespace

MissingPredictionError::MissingPredictionError(const std::string& model,
                                               std::vector<std::string> ids)
    : Error("model " + model + " has no prediction for gold question(s): " +
            join_ids(ids)),
      ids_(std::move(ids)) {}

std::string gold_to_jsonl(const std::vector<GoldAnnotation>& annotations) {
  std::string out;
  for (const auto& ann : annotations) {
    ordered_json row;
    row["question_id"] = ann.question_id;
    row["annotator_id"] = ann.annotator_id;
    row["capab"] = codes_to_json(ann.capabilities);
    row["prop"] = codes_to_json(ann.propensities);
    if (!ann.rationale.empty()) row["rationale"] = ann.rationale;
    out += row.dump();
    out += '\n';
  }
  return out;
}

std::vector<GoldAnnotation> parse_gold_jsonl(const std::string& text) {
  std::vector<GoldAnnotation> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 0;
  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      // Trailing newline only; a blank line elsewhere is malformed.
      if (stream.peek() == std::istringstream::traits_type::eof()) break;
      throw ParseError("blank line in annotation file", line_no);
    }
    json row = json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object()) {
      throw ParseError("line is not a JSON object", line_no);
    }
    GoldAnnotation ann;
    for (const char* field : {"question_id", "annotator_id"}) {
      if (!row.contains(field) || !row[field].is_string() ||
          row[field].get<std::string>().empty()) {
        throw ParseError(std::string(field) + " must be a non-empty string",
                         line_no);
      }
    }
    ann.question_id = row["question_id"].get<std::string>();
    ann.annotator_id = row["annotator_id"].get<std::string>();
    if (!row.contains("capab") || !row.contains("prop")) {
      throw ParseError("annotation needs capab and prop arrays", line_no);
    }
    ann.capabilities =
        codes_from_json(row["capab"], CategoryKind::Capability, line_no, "capab");
    ann.propensities =
        codes_from_json(row["prop"], CategoryKind::Propensity, line_no, "prop");
    if (row.contains("rationale")) {
      if (!row["rationale"].is_string()) {
        throw ParseError("rationale must be a string", line_no);
      }
      ann.rationale = row["rationale"].get<std::string>();
    }
    if (!seen.insert({ann.question_id, ann.annotator_id}).second) {
      throw DuplicateAnnotationError(
          "line " + std::to_string(line_no) + ": duplicate annotation for question " +
          ann.question_id + " by annotator " + ann.annotator_id);
    }
    out.push_back(std::move(ann));
  }
  return out;
}

void save_gold(const std::vector<GoldAnnotation>& annotations,
               const std::filesystem::path& path) {
  util::write_file(path, gold_to_jsonl(annotations));
}

std::vector<GoldAnnotation> load_gold(const std::filesystem::path& path) {
  return parse_gold_jsonl(util::read_file(path));
}

ConfusionCounts confusion(const std::map<std::string, LabelSets>& predictions,
                          const std::map<std::string, LabelSets>& gold,
                          CategoryKind kind) {
  std::vector<CategoryCode> labels = all_codes(kind);
  ConfusionCounts counts;
  std::vector<std::string> missing;
  for (const auto& [question_id, truth] : gold) {
    auto pred_it = predictions.find(question_id);
    if (pred_it == predictions.end()) {
      missing.push_back(question_id);
      continue;
    }
    const CodeSet& predicted = pred_it->second.of(kind);
    const CodeSet& actual = truth.of(kind);
    for (const auto& label : labels) {
      bool p = predicted.count(label) > 0;
      bool a = actual.count(label) > 0;
      if (p && a) {
        ++counts.tp;
      } else if (p && !a) {
        ++counts.fp;
      } else if (!p && a) {
        ++counts.fn;
      } else {
        ++counts.tn;
      }
    }
  }
  if (!missing.empty()) {
    throw MissingPredictionError("(unspecified)", std::move(missing));
  }
  return counts;
}

Prf micro_prf(const ConfusionCounts& counts) {
  Prf out;
  std::size_t pred_pos = counts.tp + counts.fp;
  std::size_t gold_pos = counts.tp + counts.fn;
  out.precision =
      pred_pos == 0 ? 1.0 : static_cast<double>(counts.tp) / static_cast<double>(pred_pos);
  out.recall =
      gold_pos == 0 ? 1.0 : static_cast<double>(counts.tp) / static_cast<double>(gold_pos);
  double pr = out.precision + out.recall;
  out.f1 = pr == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / pr;
  return out;
}

double cohen_kappa(const std::vector<int>& rater_a, const std::vector<int>& rater_b) {
  if (rater_a.size() != rater_b.size()) {
    throw LengthMismatchError("rater sequences differ in length (" +
                              std::to_string(rater_a.size()) + " vs " +
                              std::to_string(rater_b.size()) + ")");
  }
  if (rater_a.empty()) {
    throw LengthMismatchError("rater sequences are empty");
  }
  const double n = static_cast<double>(rater_a.size());
  std::size_t agree = 0;
  std::map<int, std::size_t> count_a;
  std::map<int, std::size_t> count_b;
  for (std::size_t i = 0; i < rater_a.size(); ++i) {
    if (rater_a[i] == rater_b[i]) ++agree;
    ++count_a[rater_a[i]];
    ++count_b[rater_b[i]];
  }
  double p_o = static_cast<double>(agree) / n;
  double p_e = 0;
  for (const auto& [category, ca] : count_a) {
    auto it = count_b.find(category);
    if (it == count_b.end()) continue;
    p_e += (static_cast<double>(ca) / n) * (static_cast<double>(it->second) / n);
  }
  if (p_e >= 1.0 - 1e-12) {
    if (p_o >= 1.0 - 1e-12) return 1.0;
    throw DegenerateMarginalsError(
        "expected agreement is 1 but observed agreement is below 1");
  }
  return (p_o - p_e) / (1.0 - p_e);
}

std::string_view kappa_band(double kappa) {
  if (kappa <= 0.0) return "poor";
  if (kappa <= 0.20) return "slight";
  if (kappa <= 0.40) return "fair";
  if (kappa <= 0.60) return "moderate";
  if (kappa <= 0.80) return "substantial";
  return "almost perfect";
}

namespace {

// Pooled binary decision vectors: every (question, label) cell of one family,
// questions in sorted-id order, labels in taxonomy order.
std::pair<std::vector<int>, std::vector<int>> pooled_decisions(
    const std::map<std::string, LabelSets>& a,
    const std::map<std::string, LabelSets>& b, CategoryKind kind) {
  std::vector<CategoryCode> labels = all_codes(kind);
  std::vector<int> va;
  std::vector<int> vb;
  for (const auto& [question_id, sets_b] : b) {
    const auto it = a.find(question_id);
    if (it == a.end()) continue;
    for (const auto& label : labels) {
      va.push_back(it->second.of(kind).count(label) ? 1 : 0);
      vb.push_back(sets_b.of(kind).count(label) ? 1 : 0);
    }
  }
  return {std::move(va), std::move(vb)};
}

std::map<std::string, std::map<std::string, LabelSets>> by_annotator(
    const std::vector<GoldAnnotation>& annotations) {
  std::map<std::string, std::map<std::string, LabelSets>> grouped;
  for (const auto& ann : annotations) {
    auto [it, inserted] = grouped[ann.annotator_id].emplace(
        ann.question_id, LabelSets{ann.capabilities, ann.propensities});
    if (!inserted) {
      throw DuplicateAnnotationError("annotator " + ann.annotator_id +
                                     " labeled question " + ann.question_id +
                                     " more than once");
    }
  }
  return grouped;
}

}  // namespace

std::vector<AnnotatorPairKappa> interrater_agreement(
    const std::vector<GoldAnnotation>& annotations, bool overlap_only) {
  auto grouped = by_annotator(annotations);
  std::vector<AnnotatorPairKappa> out;
  for (auto it_a = grouped.begin(); it_a != grouped.end(); ++it_a) {
    for (auto it_b = std::next(it_a); it_b != grouped.end(); ++it_b) {
      std::map<std::string, LabelSets> shared_a;
      std::map<std::string, LabelSets> shared_b;
      for (const auto& [question_id, sets] : it_a->second) {
        auto match = it_b->second.find(question_id);
        if (match == it_b->second.end()) continue;
        shared_a.emplace(question_id, sets);
        shared_b.emplace(question_id, match->second);
      }
      if (shared_a.empty()) continue;
      AnnotatorPairKappa pair;
      pair.annotator_a = it_a->first;
      pair.annotator_b = it_b->first;
      pair.shared_questions = shared_a.size();
      auto [ca, cb] =
          pooled_decisions(shared_a, shared_b, CategoryKind::Capability);
      pair.capability_kappa = cohen_kappa(ca, cb);
      auto [pa, pb] =
          pooled_decisions(shared_a, shared_b, CategoryKind::Propensity);
      pair.propensity_kappa = cohen_kappa(pa, pb);
      out.push_back(std::move(pair));
    }
  }
  if (out.empty() && overlap_only) {
    throw NoOverlapError("no annotator pair shares any question");
  }
  return out;
}

ConsensusResult consensus_merge(const std::vector<GoldAnnotation>& annotations) {
  if (annotations.empty()) {
    throw Error("cannot merge an empty set of annotations");
  }
  const std::string& question_id = annotations.front().question_id;
  std::set<std::string> annotators;
  for (const auto& ann : annotations) {
    if (ann.question_id != question_id) {
      throw Error("consensus_merge given annotations for different questions (" +
                  question_id + " vs " + ann.question_id + ")");
    }
    if (!annotators.insert(ann.annotator_id).second) {
      throw DuplicateAnnotationError("annotator " + ann.annotator_id +
                                     " labeled question " + question_id +
                                     " more than once");
    }
  }
  for (const auto& ann : annotations) {
    if (ann.annotator_id == "consensus") {
      return ConsensusResult{ann.capabilities, ann.propensities, {}};
    }
  }
  ConsensusResult result;
  std::size_t n = annotations.size();
  for (const auto& def : all_categories()) {
    std::size_t votes = 0;
    for (const auto& ann : annotations) {
      const CodeSet& sets = def.code.kind() == CategoryKind::Capability
                                ? ann.capabilities
                                : ann.propensities;
      if (sets.count(def.code)) ++votes;
    }
    if (votes == 0) continue;
    bool majority = 2 * votes > n;
    bool tie = 2 * votes == n;
    if (!majority && !tie) continue;
    if (def.code.kind() == CategoryKind::Capability) {
      result.capabilities.insert(def.code);
    } else {
      result.propensities.insert(def.code);
    }
    if (tie) result.needs_review.insert(def.code);
  }
  return result;
}

std::map<std::string, ConsensusResult> consensus_by_question(
    const std::vector<GoldAnnotation>& annotations) {
  std::map<std::string, std::vector<GoldAnnotation>> grouped;
  for (const auto& ann : annotations) grouped[ann.question_id].push_back(ann);
  std::map<std::string, ConsensusResult> out;
  for (const auto& [question_id, group] : grouped) {
    out.emplace(question_id, consensus_merge(group));
  }
  return out;
}

namespace {

FamilyMetrics family_metrics(const std::map<std::string, LabelSets>& predictions,
                             const std::map<std::string, LabelSets>& gold,
                             CategoryKind kind) {
  FamilyMetrics metrics;
  metrics.counts = confusion(predictions, gold, kind);
  Prf prf = micro_prf(metrics.counts);
  metrics.precision = prf.precision;
  metrics.recall = prf.recall;
  metrics.f1 = prf.f1;
  auto [pred_vec, gold_vec] = pooled_decisions(predictions, gold, kind);
  metrics.kappa = cohen_kappa(pred_vec, gold_vec);
  metrics.kappa_band = std::string(kappa_band(metrics.kappa));
  for (const auto& label : all_codes(kind)) {
    std::vector<int> pv;
    std::vector<int> gv;
    for (const auto& [question_id, truth] : gold) {
      const auto& pred = predictions.at(question_id);
      pv.push_back(pred.of(kind).count(label) ? 1 : 0);
      gv.push_back(truth.of(kind).count(label) ? 1 : 0);
    }
    metrics.per_label_kappa[label.text()] = cohen_kappa(pv, gv);
  }
  return metrics;
}

}  // namespace

MetricsReport evaluate(const std::vector<judge::Classification>& classifications,
                       const std::vector<GoldAnnotation>& gold) {
  std::map<std::string, ConsensusResult> consensus = consensus_by_question(gold);
  std::map<std::string, LabelSets> gold_sets;
  for (const auto& [question_id, result] : consensus) {
    gold_sets.emplace(question_id,
                      LabelSets{result.capabilities, result.propensities});
  }
  if (gold_sets.empty()) {
    throw Error("no gold annotations to evaluate against");
  }

  std::map<std::string, std::map<std::string, LabelSets>> by_model;
  for (const auto& item : classifications) {
    auto [it, inserted] = by_model[item.model_id].emplace(
        item.question_id, LabelSets{item.capabilities, item.propensities});
    if (!inserted) {
      throw Error("model " + item.model_id + " classified question " +
                  item.question_id + " more than once");
    }
  }
  if (by_model.empty()) {
    throw Error("no classifications to evaluate");
  }

  MetricsReport report;
  for (const auto& [model, predictions] : by_model) {
    std::vector<std::string> missing;
    for (const auto& [question_id, sets] : gold_sets) {
      if (!predictions.count(question_id)) missing.push_back(question_id);
    }
    if (!missing.empty()) {
      throw MissingPredictionError(model, std::move(missing));
    }
    ModelMetrics metrics;
    metrics.model = model;
    metrics.n_questions = gold_sets.size();
    metrics.capabilities =
        family_metrics(predictions, gold_sets, CategoryKind::Capability);
    metrics.propensities =
        family_metrics(predictions, gold_sets, CategoryKind::Propensity);
    report.models.push_back(std::move(metrics));
  }
  return report;
}

namespace {

ordered_json family_to_json(const FamilyMetrics& metrics) {
  ordered_json out;
  out["tp"] = metrics.counts.tp;
  out["fp"] = metrics.counts.fp;
  out["fn"] = metrics.counts.fn;
  out["tn"] = metrics.counts.tn;
  out["precision"] = metrics.precision;
  out["recall"] = metrics.recall;
  out["f1"] = metrics.f1;
  out["kappa"] = metrics.kappa;
  out["kappa_band"] = metrics.kappa_band;
  ordered_json per_label = ordered_json::object();
  for (const auto& [label, value] : metrics.per_label_kappa) {
    per_label[label] = value;
  }
  out["per_label_kappa"] = per_label;
  return out;
}

}  // namespace

std::string metrics_to_json(const MetricsReport& report) {
  ordered_json out;
  out["averaging"] = report.averaging;
  ordered_json models = ordered_json::array();
  for (const auto& metrics : report.models) {
    ordered_json entry;
    entry["model"] = metrics.model;
    entry["n_questions"] = metrics.n_questions;
    entry["capabilities"] = family_to_json(metrics.capabilities);
    entry["propensities"] = family_to_json(metrics.propensities);
    models.push_back(std::move(entry));
  }
  out["models"] = models;
  return out.dump(2) + "\n";
}

std::string metrics_to_markdown(const MetricsReport& report) {
  std::string out = "# Judge validation metrics\n\n";
  if (!report.models.empty()) {
    out += "Micro-averaged over " +
           std::to_string(report.models.front().n_questions) +
           " gold-labeled questions.\n\n";
  }
  out +=
      "| Model | Capabilities Precision | Capabilities Recall | Capabilities "
      "F1 | Capabilities Kappa | Propensities Precision | Propensities Recall "
      "| Propensities F1 | Propensities Kappa |\n";
  out += "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& metrics : report.models) {
    out += "| " + metrics.model;
    for (const FamilyMetrics* family :
         {&metrics.capabilities, &metrics.propensities}) {
      out += " | " + util::fixed(family->precision, 2);
      out += " | " + util::fixed(family->recall, 2);
      out += " | " + util::fixed(family->f1, 2);
      out += " | " + util::fixed(family->kappa, 2);
    }
    out += " |\n";
  }
  out += "\n";
  for (const auto& metrics : report.models) {
    out += "- " + metrics.model + ": capabilities kappa " +
           util::fixed(metrics.capabilities.kappa, 3) + " (" +
           metrics.capabilities.kappa_band + "), propensities kappa " +
           util::fixed(metrics.propensities.kappa, 3) + " (" +
           metrics.propensities.kappa_band + ")\n";
  }
  return out;
}

}  // namespace regcov::validation
