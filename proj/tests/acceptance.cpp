// Acceptance gate. Each invocation checks one numbered criterion and prints
// exactly one line to stdout:
//   criterion N: PASS - <evidence>
//   criterion N: FAIL - <every failed check, semicolon-joined>
// Exit code 0 on pass, 1 on fail. Criterion 8 drives the installed CLI binary
// named by REGCOV_CLI_PATH; everything else runs in process.

#include "regcov/analysis.hpp"
#include "regcov/cli.hpp"
#include "regcov/corpus.hpp"
#include "regcov/judge.hpp"
#include "regcov/sampler.hpp"
#include "regcov/taxonomy.hpp"
#include "regcov/validation.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

using namespace regcov;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Checker {
  std::vector<std::string> failures;
  std::string evidence;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }

  Outcome outcome() const {
    if (failures.empty()) return {true, evidence};
    std::string joined;
    for (const auto& f : failures) {
      if (!joined.empty()) joined += "; ";
      joined += f;
    }
    return {false, joined};
  }
};

fs::path data_dir() { return fs::path(REGCOV_DATA_DIR); }

fs::path temp_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("regcov_acceptance_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string fmt(double value, int digits) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << value;
  return out.str();
}

// ---- criterion 1: risk-coverage reproduction --------------------------------

Outcome criterion_1() {
  Checker c;
  fs::path out_dir = temp_dir();
  std::ostringstream out, err;
  auto start = std::chrono::steady_clock::now();
  int code = cli::run({"analyze", "--out", out_dir.string(), "--fixture",
                       (data_dir() / "reference_coverage.json").string()},
                      out, err);
  double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  c.require(code == 0, "analyze exited " + std::to_string(code) + ": " + err.str());
  c.require(elapsed < 1.0, "runtime " + fmt(elapsed, 3) + "s exceeds 1s");
  if (!c.failures.empty()) return c.outcome();

  json doc = json::parse(slurp(out_dir / "analysis.json"));
  const json& rows = doc.at("risk_coverage");
  struct Expected {
    const char* risk;
    std::size_t questions;
    double pct;
  };
  const Expected expected[] = {
      {"Harmful Manipulation", 171846, 88.2},
      {"Cyber Offence", 1595, 0.8},
      {"CBRN Risks", 3396, 1.7},
      {"Loss of Control", 844, 0.4},
  };
  c.require(rows.size() == 4, "expected 4 risk rows");
  for (std::size_t i = 0; i < 4 && i < rows.size(); ++i) {
    const json& row = rows[i];
    const Expected& want = expected[i];
    c.require(row.at("risk") == want.risk,
              std::string("row ") + std::to_string(i) + " is not " + want.risk);
    c.require(row.at("questions") == want.questions,
              std::string(want.risk) + " questions " +
                  row.at("questions").dump() + " != " +
                  std::to_string(want.questions));
    double pct = row.at("coverage_pct").get<double>();
    double off = std::abs(pct - want.pct);
    if (off > 0.05 + 1e-9) {
      std::string msg = std::string(want.risk) + " computed " + fmt(pct, 4) +
                        "% vs published " + fmt(want.pct, 1) + "% (off by " +
                        fmt(off, 4) + " pp, window 0.05)";
      if (row.at("questions") == want.questions) {
        msg += ": the published row is internally inconsistent, since " +
               std::to_string(want.questions) + "/194,955 = " + fmt(pct, 4) +
               "% rounds to " + fmt(std::round(pct * 10) / 10, 1) +
               "%, not " + fmt(want.pct, 1) + "%";
        // Check whether the published figure is the sum of per-component
        // percentages that were each rounded to one decimal first.
        double corpus = doc.at("metadata").at("corpus_size").get<double>();
        const json& totals = doc.at("category_totals");
        double rounded_sum = 0.0;
        std::string parts;
        for (const auto& comp : row.at("components")) {
          double share =
              totals.at(comp.get<std::string>()).get<double>() / corpus;
          double rounded = std::round(share * 1000.0) / 10.0;
          rounded_sum += rounded;
          if (!parts.empty()) parts += "+";
          parts += fmt(rounded, 1);
        }
        if (std::abs(rounded_sum - want.pct) < 1e-9) {
          msg += "; the published figure equals the sum of its component "
                 "percentages rounded to one decimal each (" +
                 parts + " = " + fmt(rounded_sum, 1) + ")";
        }
      }
      c.failures.push_back(msg);
    }
  }
  c.evidence =
      "question sums exact (171,846 / 1,595 / 3,396 / 844), percentages within "
      "0.05 pp, runtime " +
      fmt(elapsed, 3) + "s";
  return c.outcome();
}

// ---- criterion 2: grand totals ----------------------------------------------

Outcome criterion_2() {
  Checker c;
  auto fixture = analysis::load_fixture(data_dir() / "reference_coverage.json");
  auto report = analysis::build_report(fixture, default_risk_mapping(),
                                       analysis::DenominatorMode::AllQuestions);
  c.require(report.capability_grand_total == 11696,
            "capability grand total " +
                std::to_string(report.capability_grand_total) + " != 11696");
  c.require(report.propensity_grand_total == 200788,
            "propensity grand total " +
                std::to_string(report.propensity_grand_total) + " != 200788");
  c.evidence = "capabilities 11,696 and propensities 200,788, exact";
  return c.outcome();
}

// ---- criterion 3: tier assignment -------------------------------------------

Outcome criterion_3() {
  Checker c;
  auto fixture = analysis::load_fixture(data_dir() / "reference_coverage.json");
  auto report = analysis::build_report(fixture, default_risk_mapping(),
                                       analysis::DenominatorMode::AllQuestions);
  auto tier_of = [&](const char* code) {
    auto it = report.category_totals.find(parse_code(code));
    return analysis::tier(it == report.category_totals.end() ? 0 : it->second);
  };
  for (const char* code : {"P3", "P4", "P5"}) {
    c.require(tier_of(code) == analysis::CoverageTier::Dominant,
              std::string(code) + " is not Dominant");
  }
  for (const char* code : {"C11", "P2", "P6"}) {
    c.require(tier_of(code) == analysis::CoverageTier::Moderate,
              std::string(code) + " is not Moderate");
  }
  for (const char* code : {"C8", "C9", "C10", "P8", "P9"}) {
    c.require(tier_of(code) == analysis::CoverageTier::Zero,
              std::string(code) + " is not Zero");
  }
  c.evidence = "P3/P4/P5 Dominant, C11/P2/P6 Moderate, C8/C9/C10/P8/P9 Zero";
  return c.outcome();
}

// ---- criterion 4: stratified allocation -------------------------------------

Outcome criterion_4() {
  Checker c;
  const std::map<std::string, std::size_t> sizes = {
      {"BBH", 6511},  {"BBQ", 58492},       {"CommonsenseQA", 10962},
      {"HLE", 2500},  {"MMLU", 115700},     {"TruthfulQA", 790},
  };
  sampler::Allocation first = sampler::allocate(sizes, 600, 30);
  for (const char* name : {"BBH", "CommonsenseQA", "HLE", "TruthfulQA"}) {
    c.require(first.targets.at(name) == 30,
              std::string(name) + " target " +
                  std::to_string(first.targets.at(name)) + " != 30");
  }
  auto within = [&](const char* name, std::size_t center) {
    std::size_t got = first.targets.at(name);
    c.require(got + 2 >= center && got <= center + 2,
              std::string(name) + " target " + std::to_string(got) +
                  " outside " + std::to_string(center) + " +/- 2");
  };
  within("BBQ", 160);
  within("MMLU", 317);
  std::size_t total = 0;
  for (const auto& [name, target] : first.targets) total += target;
  c.require(total <= 600, "total " + std::to_string(total) + " exceeds 600");
  for (int i = 0; i < 100; ++i) {
    if (sampler::allocate(sizes, 600, 30).targets != first.targets) {
      c.failures.push_back("allocation differed on repeat " + std::to_string(i));
      break;
    }
  }
  c.evidence = "30/30/30/30 exact, BBQ " + std::to_string(first.targets.at("BBQ")) +
               ", MMLU " + std::to_string(first.targets.at("MMLU")) + ", total " +
               std::to_string(total) + ", stable over 100 calls";
  return c.outcome();
}

// ---- criterion 5: judge round-trip ------------------------------------------

Outcome criterion_5() {
  Checker c;
  auto records = corpus::load_corpus(data_dir() / "hle_sokoban.jsonl");
  c.require(records.size() == 1, "reference record file must hold one record");
  if (records.empty()) return c.outcome();
  const QuestionRecord& record = records.front();

  std::string prompt = judge::build_prompt(record);
  const char* sections[] = {
      "# AI Act Code of Practice Evaluation",
      "## Input Data",
      "### Capabilities (C1-C13)",
      "### Propensities (P1-P9)",
      "## Classification Criteria",
      "## Decision Examples",
      "## Required Output (JSON)",
  };
  for (const char* section : sections) {
    c.require(prompt.find(section) != std::string::npos,
              std::string("prompt is missing section \"") + section + "\"");
  }
  c.require(prompt.rfind("# AI Act Code of Practice Evaluation", 0) == 0,
            "prompt does not start with the title line");
  const std::string closing =
      "CRUCIAL: Return ONLY the JSON, no other text or explanations!";
  c.require(prompt.size() >= closing.size() &&
                prompt.compare(prompt.size() - closing.size(), closing.size(),
                               closing) == 0,
            "prompt does not end with the CRUCIAL line");
  c.require(prompt.find("- Question: " + record.question) != std::string::npos,
            "prompt is missing the substituted question");
  c.require(prompt.find("- Answer: dddddrrruurullll") != std::string::npos,
            "prompt is missing the substituted answer");
  c.require(prompt.find("- Category: Game Design - Other") != std::string::npos,
            "prompt is missing the substituted category");
  c.require(prompt.find("- Choices: []") != std::string::npos,
            "empty choices must render as []");

  auto [caps, props] = judge::parse_response(R"({"capab":["C6"],"prop":[]})");
  c.require(caps == CodeSet{parse_code("C6")} && props.empty(),
            "parse_response did not return ({C6}, {})");

  judge::Classification classification;
  classification.question_id = record.id;
  classification.benchmark = record.benchmark;
  classification.model_id = "google/gemini-2.5-flash";
  classification.capabilities = caps;
  classification.propensities = props;
  const std::string expected =
      R"({"model":"google/gemini-2.5-flash","id":"hle_194750","benchmark":"hle",)"
      R"("evaluation":{"capabilities":{"Long-horizon planning, forecasting, or strategising":1},)"
      R"("propensities":{}}})";
  std::string got = judge::enrich(classification).dump();
  c.require(got == expected, "enriched record differs: " + got);
  c.evidence = "verbatim prompt sections, ({C6}, {}) parse, enriched record "
               "field-identical for hle_194750";
  return c.outcome();
}

// ---- criterion 6: metrics oracle equivalence --------------------------------

double brute_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t n = a.size();
  std::size_t agree = 0;
  std::map<int, std::size_t> count_a, count_b;
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == b[i]) ++agree;
    ++count_a[a[i]];
    ++count_b[b[i]];
  }
  double po = static_cast<double>(agree) / static_cast<double>(n);
  double pe = 0;
  for (const auto& [value, ca] : count_a) {
    auto it = count_b.find(value);
    if (it == count_b.end()) continue;
    pe += (static_cast<double>(ca) / n) * (static_cast<double>(it->second) / n);
  }
  if (pe >= 1.0 - 1e-12) return 1.0;
  return (po - pe) / (1.0 - pe);
}

Outcome criterion_6() {
  Checker c;
  std::mt19937_64 rng(20250816);
  const auto& categories = all_categories();
  for (int instance = 0; instance < 200 && c.failures.empty(); ++instance) {
    std::size_t n_questions = 1 + rng() % 10;
    std::map<std::string, validation::LabelSets> gold, pred;
    for (std::size_t q = 0; q < n_questions; ++q) {
      std::string id = "q" + std::to_string(q);
      validation::LabelSets g, p;
      for (const auto& def : categories) {
        CodeSet& gset = def.code.kind() == CategoryKind::Capability
                            ? g.capabilities
                            : g.propensities;
        CodeSet& pset = def.code.kind() == CategoryKind::Capability
                            ? p.capabilities
                            : p.propensities;
        if (rng() % 4 == 0) gset.insert(def.code);
        if (rng() % 4 == 0) pset.insert(def.code);
      }
      gold[id] = g;
      pred[id] = p;
    }

    for (CategoryKind kind : {CategoryKind::Capability, CategoryKind::Propensity}) {
      // Brute force: enumerate every (question, label) pair.
      validation::ConfusionCounts brute;
      std::vector<int> gold_vec, pred_vec;
      for (const auto& [id, g] : gold) {
        const auto& p = pred.at(id);
        for (const auto& code : all_codes(kind)) {
          bool in_gold = g.of(kind).count(code) > 0;
          bool in_pred = p.of(kind).count(code) > 0;
          gold_vec.push_back(in_gold ? 1 : 0);
          pred_vec.push_back(in_pred ? 1 : 0);
          if (in_gold && in_pred) ++brute.tp;
          if (!in_gold && in_pred) ++brute.fp;
          if (in_gold && !in_pred) ++brute.fn;
          if (!in_gold && !in_pred) ++brute.tn;
        }
      }
      auto counts = validation::confusion(pred, gold, kind);
      if (!(counts == brute)) {
        c.failures.push_back("instance " + std::to_string(instance) +
                             ": confusion counts diverge from enumeration");
        break;
      }
      auto prf = validation::micro_prf(counts);
      double bp = brute.tp + brute.fp > 0
                      ? static_cast<double>(brute.tp) / (brute.tp + brute.fp)
                      : 1.0;
      double br = brute.tp + brute.fn > 0
                      ? static_cast<double>(brute.tp) / (brute.tp + brute.fn)
                      : 1.0;
      double bf = bp + br > 0 ? 2.0 * bp * br / (bp + br) : 0.0;
      if (std::abs(prf.precision - bp) > 1e-12 || std::abs(prf.recall - br) > 1e-12 ||
          std::abs(prf.f1 - bf) > 1e-12) {
        c.failures.push_back("instance " + std::to_string(instance) +
                             ": precision/recall/F1 diverge from enumeration");
        break;
      }
      double kappa = validation::cohen_kappa(gold_vec, pred_vec);
      if (std::abs(kappa - brute_kappa(gold_vec, pred_vec)) > 1e-12) {
        c.failures.push_back("instance " + std::to_string(instance) +
                             ": kappa diverges from enumeration");
        break;
      }
      if (validation::cohen_kappa(gold_vec, gold_vec) != 1.0) {
        c.failures.push_back("instance " + std::to_string(instance) +
                             ": kappa(x, x) != 1");
        break;
      }
      if (std::abs(kappa - validation::cohen_kappa(pred_vec, gold_vec)) > 1e-12) {
        c.failures.push_back("instance " + std::to_string(instance) +
                             ": kappa is not symmetric");
        break;
      }
    }
  }
  c.evidence = "200 random instances: confusion, PRF, and kappa match per-pair "
               "enumeration to 1e-12; kappa(x,x)=1 and symmetry hold";
  return c.outcome();
}

// ---- criterion 7: kappa banding ---------------------------------------------

Outcome criterion_7() {
  Checker c;
  c.require(validation::kappa_band(0.75) == "substantial",
            "0.75 banded as \"" + std::string(validation::kappa_band(0.75)) +
                "\", not \"substantial\"");
  c.require(validation::kappa_band(0.82) == "almost perfect",
            "0.82 banded as \"" + std::string(validation::kappa_band(0.82)) +
                "\", not \"almost perfect\"");
  c.evidence = "0.75 -> substantial, 0.82 -> almost perfect";
  return c.outcome();
}

// ---- criterion 8: end-to-end pipeline with the mock judge -------------------

// The rule table under test; keys are matched as plain substrings of each
// question, mirroring the mock backend's contract.
const std::map<std::string, std::string> kRules = {
    {"alpha", "C1"}, {"beta", "P4"}, {"gamma", "C6"}, {"delta", "P3"}};

std::string toy_question(const std::string& benchmark, int i, int shift) {
  std::string text = benchmark + " question " + std::to_string(i);
  switch ((i + shift) % 5) {
    case 0: text += " about alpha"; break;
    case 1: text += " about beta"; break;
    case 2: text += " about gamma and delta"; break;
    case 3: text += " about alpha and beta"; break;
    default: break;  // no keyword
  }
  return text;
}

int run_command(const std::string& command) {
  int status = std::system(command.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class CountingBackend : public judge::Backend {
 public:
  explicit CountingBackend(judge::Backend& inner) : inner_(inner) {}

  std::string complete(const std::string& prompt) override {
    ++calls_;
    return inner_.complete(prompt);
  }

  int calls() const { return calls_.load(); }

 private:
  judge::Backend& inner_;
  std::atomic<int> calls_{0};
};

Outcome criterion_8() {
  Checker c;
  const char* cli_path = REGCOV_CLI_PATH;
  if (!fs::exists(cli_path)) {
    return {false, std::string("CLI binary not found at ") + cli_path};
  }

  fs::path ws = temp_dir();
  struct Bench {
    std::string name;
    int shift;
  };
  const std::vector<Bench> benches = {{"toy_a", 0}, {"toy_b", 2}};
  for (const auto& bench : benches) {
    std::string lines;
    for (int i = 0; i < 30; ++i) {
      json row;
      row["question"] = toy_question(bench.name, i, bench.shift);
      row["answer"] = "answer " + std::to_string(i);
      row["category"] = "toy";
      lines += row.dump() + "\n";
    }
    spit(ws / (bench.name + ".jsonl"), lines);
  }
  json config;
  config["benchmarks"] = json::array();
  for (const auto& bench : benches) {
    json entry;
    entry["name"] = bench.name;
    entry["path"] = bench.name + ".jsonl";
    entry["adapter"] = "jsonl";
    entry["descriptor"] = {{"question", "question"},
                           {"answer", "answer"},
                           {"category", "category"}};
    config["benchmarks"].push_back(entry);
  }
  config["judge"] = {{"model", "mock-judge"},
                     {"max_concurrency", 8},
                     {"mock_rules", kRules}};
  config["output_dir"] = "out";
  spit(ws / "run.json", config.dump(2));

  std::string base = std::string(cli_path) + " ";
  std::string cfg = " --config " + (ws / "run.json").string();
  std::string log = " >> " + (ws / "log.txt").string() + " 2>&1";
  auto start = std::chrono::steady_clock::now();
  int ingest = run_command(base + "ingest" + cfg + log);
  int judged = run_command(base + "judge --mock" + cfg + log);
  int analyzed = run_command(
      base + "analyze" + cfg + " --classifications " +
      (ws / "out" / "classifications.jsonl").string() + " --corpus " +
      (ws / "out" / "corpus.jsonl").string() + log);
  double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  c.require(ingest == 0, "ingest exited " + std::to_string(ingest) +
                             " (log " + (ws / "log.txt").string() + ")");
  c.require(judged == 0, "judge exited " + std::to_string(judged) + " (log " +
                             (ws / "log.txt").string() + ")");
  c.require(analyzed == 0, "analyze exited " + std::to_string(analyzed) +
                               " (log " + (ws / "log.txt").string() + ")");
  c.require(elapsed < 5.0, "pipeline took " + fmt(elapsed, 2) + "s, over 5s");
  if (!c.failures.empty()) return c.outcome();

  // Brute-force application of the rule table to the same question texts.
  std::map<std::string, std::map<std::string, std::size_t>> expected_cells;
  std::map<std::string, std::size_t> expected_labeled;
  for (const auto& bench : benches) {
    for (int i = 0; i < 30; ++i) {
      std::string question = toy_question(bench.name, i, bench.shift);
      bool any = false;
      for (const auto& [keyword, code] : kRules) {
        if (question.find(keyword) != std::string::npos) {
          ++expected_cells[bench.name][code];
          any = true;
        }
      }
      if (any) ++expected_labeled[bench.name];
    }
  }

  json doc = json::parse(slurp(ws / "out" / "analysis.json"));
  for (const auto& bench : benches) {
    for (const auto& def : all_categories()) {
      const json& matrix = def.code.kind() == CategoryKind::Capability
                               ? doc.at("capability_matrix")
                               : doc.at("propensity_matrix");
      std::size_t want = 0;
      auto row = expected_cells.find(bench.name);
      if (row != expected_cells.end()) {
        auto cell = row->second.find(def.code.text());
        if (cell != row->second.end()) want = cell->second;
      }
      std::size_t got = matrix.at(bench.name).at(def.code.text()).get<std::size_t>();
      if (got != want) {
        c.failures.push_back(bench.name + "/" + def.code.text() + " = " +
                             std::to_string(got) + ", brute force says " +
                             std::to_string(want));
      }
    }
    c.require(doc.at("benchmark_totals").at("ingested").at(bench.name) == 30,
              bench.name + " ingested total is not 30");
    c.require(doc.at("benchmark_totals").at("labeled").at(bench.name) ==
                  expected_labeled[bench.name],
              bench.name + " labeled total diverges from brute force");
  }

  // Resume: replay the same batch against the CLI run's cache and count
  // backend calls. Zero calls means nothing was re-issued.
  auto records = corpus::load_corpus(ws / "out" / "corpus.jsonl");
  judge::MockBackend mock(kRules);
  CountingBackend counting(mock);
  judge::JudgeConfig judge_config;
  judge_config.model_id = "mock-judge";
  judge_config.cache_dir = ws / "out" / "judge_cache";
  judge_config.max_concurrency = 8;
  judge_config.backoff_base_seconds = 0;
  judge::BatchResult replay = judge::classify_batch(records, counting, judge_config);
  c.require(replay.errors.empty(), "replay produced errors");
  c.require(counting.calls() == 0,
            "resume issued " + std::to_string(counting.calls()) +
                " duplicate backend calls");
  auto saved = judge::load_enriched(ws / "out" / "classifications.jsonl");
  c.require(replay.classifications == saved,
            "replayed classifications differ from the saved run");

  c.evidence = "60-question corpus, matrix equals brute-force rule application, "
               "resume issued 0 backend calls, runtime " +
               fmt(elapsed, 2) + "s";
  return c.outcome();
}

// ---- criterion 9: persistence -----------------------------------------------

Outcome criterion_9() {
  Checker c;

  std::vector<QuestionRecord> records(2);
  records[0].id = "toy_0";
  records[0].benchmark = "toy";
  records[0].question = "what does \"caf\xC3\xA9\" mean\nacross two lines\xE2\x80\xA6";
  records[0].answer = "a coffee house";
  records[0].choices = {"a coffee house", "a sofa"};
  records[0].category = "language";
  records[0].metadata["source_row"] = "17";
  records[1].id = "toy_1";
  records[1].benchmark = "toy";
  records[1].question = "plain second question";
  records[1].answer = "42";
  records[1].context = "with some context";

  std::string bytes = corpus::to_jsonl(records);
  auto reparsed = corpus::parse_jsonl(bytes);
  c.require(reparsed == records, "corpus JSONL round-trip changed the records");
  c.require(corpus::to_jsonl(reparsed) == bytes,
            "corpus JSONL round-trip changed the bytes");

  fs::path dir = temp_dir();
  corpus::save_corpus(records, dir / "corpus.jsonl");
  c.require(slurp(dir / "corpus.jsonl") == bytes,
            "saved corpus file differs from the serialized bytes");
  c.require(corpus::load_corpus(dir / "corpus.jsonl") == records,
            "corpus file round-trip changed the records");

  std::vector<judge::Classification> classifications(2);
  classifications[0].question_id = "toy_0";
  classifications[0].benchmark = "toy";
  classifications[0].model_id = "mock-judge";
  classifications[0].capabilities = {parse_code("C2"), parse_code("C11")};
  classifications[0].propensities = {parse_code("P4")};
  classifications[1].question_id = "toy_1";
  classifications[1].benchmark = "toy";
  classifications[1].model_id = "mock-judge";

  std::string enriched = judge::to_enriched_jsonl(classifications);
  auto parsed = judge::parse_enriched_jsonl(enriched);
  c.require(parsed == classifications,
            "enriched JSONL round-trip changed the classifications");
  c.require(judge::to_enriched_jsonl(parsed) == enriched,
            "enriched JSONL round-trip changed the bytes");

  // Malformed lines must carry correct 1-based line numbers.
  std::string broken_corpus = bytes + "not json\n";
  try {
    corpus::parse_jsonl(broken_corpus);
    c.failures.push_back("malformed corpus line was accepted");
  } catch (const ParseError& e) {
    c.require(e.line() == 3, "corpus error line " + std::to_string(e.line()) +
                                 " != 3");
    c.require(std::string(e.what()).find("line 3") != std::string::npos,
              "corpus error message lacks \"line 3\"");
  }
  try {
    corpus::parse_jsonl("oops\n");
    c.failures.push_back("malformed first corpus line was accepted");
  } catch (const ParseError& e) {
    c.require(e.line() == 1, "first-line corpus error is not line 1");
  }
  std::string broken_enriched = enriched + "{\"model\": 7}\n";
  try {
    judge::parse_enriched_jsonl(broken_enriched);
    c.failures.push_back("malformed enriched line was accepted");
  } catch (const ParseError& e) {
    c.require(e.line() == 3, "enriched error line " + std::to_string(e.line()) +
                                 " != 3");
  }

  c.evidence = "corpus and enriched JSONL byte-stable through parse/serialize "
               "and save/load; malformed lines reported as line 3 and line 1";
  return c.outcome();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: regcov_acceptance <criterion 1..9>\n";
    return 2;
  }
  int n = std::atoi(argv[1]);
  Outcome outcome;
  switch (n) {
    case 1: outcome = criterion_1(); break;
    case 2: outcome = criterion_2(); break;
    case 3: outcome = criterion_3(); break;
    case 4: outcome = criterion_4(); break;
    case 5: outcome = criterion_5(); break;
    case 6: outcome = criterion_6(); break;
    case 7: outcome = criterion_7(); break;
    case 8: outcome = criterion_8(); break;
    case 9: outcome = criterion_9(); break;
    default:
      std::cerr << "usage: regcov_acceptance <criterion 1..9>\n";
      return 2;
  }
  std::cout << "criterion " << n << ": " << (outcome.pass ? "PASS" : "FAIL")
            << " - " << outcome.detail << "\n";
  return outcome.pass ? 0 : 1;
}
