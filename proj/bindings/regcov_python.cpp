// Python bindings for the main pipeline operations. The heavy lifting stays
// in C++; results cross the boundary as plain dicts, lists, and JSON strings
// so callers can feed them straight into pandas or json.loads.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "regcov/analysis.hpp"
#include "regcov/cli.hpp"
#include "regcov/corpus.hpp"
#include "regcov/judge.hpp"
#include "regcov/sampler.hpp"
#include "regcov/taxonomy.hpp"
#include "regcov/validation.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace regcov;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> code_texts(const CodeSet& codes) {
  std::vector<std::string> out;
  for (const auto& code : codes) out.push_back(code.text());
  return out;
}

py::list categories() {
  py::list out;
  for (const auto& def : all_categories()) {
    out.append(py::make_tuple(def.code.text(), def.name));
  }
  return out;
}

py::dict risk_component_map() {
  py::dict out;
  RiskMapping mapping = default_risk_mapping();
  for (SystemicRisk risk : kAllRisks) {
    out[py::str(std::string(risk_name(risk)))] = code_texts(mapping.at(risk));
  }
  return out;
}

std::size_t ingest_to_corpus(const std::string& benchmark, const std::string& adapter,
                             const fs::path& source, const fs::path& corpus_out,
                             const std::string& descriptor_json) {
  corpus::AdapterDescriptor descriptor;
  if (!descriptor_json.empty()) {
    descriptor = corpus::parse_descriptor(descriptor_json);
  }
  auto records = corpus::ingest_file(benchmark, adapter, source, descriptor);
  corpus::save_corpus(records, corpus_out);
  return records.size();
}

std::map<std::string, std::size_t> corpus_counts(const fs::path& corpus_path) {
  return corpus::corpus_stats(corpus::load_corpus(corpus_path)).counts;
}

std::map<std::string, std::size_t> allocate(
    const std::map<std::string, std::size_t>& sizes, std::size_t budget,
    std::size_t min_per_stratum) {
  return sampler::allocate(sizes, budget, min_per_stratum).targets;
}

std::map<std::string, std::size_t> sample_corpus(const fs::path& corpus_path,
                                                 const fs::path& sample_out,
                                                 std::size_t budget,
                                                 std::size_t min_per_stratum,
                                                 std::uint64_t seed) {
  auto records = corpus::load_corpus(corpus_path);
  auto allocation = sampler::allocate(corpus::corpus_stats(records).counts, budget,
                                      min_per_stratum);
  auto sample = sampler::draw(records, allocation, seed);
  corpus::save_corpus(sample.records, sample_out);
  return allocation.targets;
}

std::string build_prompt(const std::string& question, const std::string& answer,
                         const std::vector<std::string>& choices,
                         const std::string& context, const std::string& category) {
  QuestionRecord record;
  record.id = "adhoc_0";
  record.benchmark = "adhoc";
  record.question = question;
  record.answer = answer;
  record.choices = choices;
  record.context = context;
  record.category = category;
  return judge::build_prompt(record);
}

py::tuple parse_response(const std::string& text) {
  auto [caps, props] = judge::parse_response(text);
  return py::make_tuple(code_texts(caps), code_texts(props));
}

// cache_dir is optional rather than a defaulted fs::path: pathlib turns the
// empty path into "." on the round trip, which would silently enable a cache
// in the working directory.
py::dict classify_with_mock(const fs::path& corpus_path, const fs::path& out_path,
                            const std::map<std::string, std::string>& rules,
                            const std::string& model,
                            const std::optional<fs::path>& cache_dir) {
  auto records = corpus::load_corpus(corpus_path);
  judge::MockBackend backend(rules);
  judge::JudgeConfig config;
  config.model_id = model;
  if (cache_dir) config.cache_dir = *cache_dir;
  config.backoff_base_seconds = 0;
  judge::BatchResult result;
  {
    py::gil_scoped_release release;
    result = judge::classify_batch(records, backend, config);
  }
  judge::save_enriched(result.classifications, out_path);
  py::dict out;
  out["classified"] = result.classifications.size();
  out["errors"] = result.errors.size();
  return out;
}

std::string evaluate_files(const fs::path& classifications_path,
                           const fs::path& gold_path) {
  auto classifications = judge::load_enriched(classifications_path);
  auto gold = validation::load_gold(gold_path);
  return validation::metrics_to_json(validation::evaluate(classifications, gold));
}

std::string analyze_fixture(const fs::path& fixture_path) {
  auto fixture = analysis::load_fixture(fixture_path);
  auto report = analysis::build_report(fixture, default_risk_mapping(),
                                       analysis::DenominatorMode::AllQuestions);
  return analysis::report_to_json(report);
}

std::string analyze_classifications(const fs::path& classifications_path,
                                    const fs::path& corpus_path,
                                    const std::string& denominator) {
  auto classifications = judge::load_enriched(classifications_path);
  auto corpus_sizes =
      corpus::corpus_stats(corpus::load_corpus(corpus_path)).counts;
  auto report = analysis::build_report(
      analysis::aggregate(classifications, corpus_sizes), default_risk_mapping(),
      analysis::parse_denominator(denominator));
  return analysis::report_to_json(report);
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(regcov, m) {
  m.doc() = "Benchmark coverage toolkit: corpus normalization, stratified "
            "sampling, LLM-as-judge classification, and coverage analysis";

  m.def("categories", &categories,
        "All taxonomy categories as (code, display name) tuples, index order");
  m.def("risk_components", &risk_component_map,
        "Systemic risk names mapped to their component category codes");
  m.def("ingest_to_corpus", &ingest_to_corpus, py::arg("benchmark"),
        py::arg("adapter"), py::arg("source"), py::arg("corpus_out"),
        py::arg("descriptor_json") = "",
        "Normalize one benchmark source into corpus JSONL; returns the record "
        "count");
  m.def("corpus_counts", &corpus_counts, py::arg("corpus_path"),
        "Per-benchmark question counts of a normalized corpus");
  m.def("allocate", &allocate, py::arg("sizes"), py::arg("budget"),
        py::arg("min_per_stratum"),
        "Stratified sample targets per benchmark (largest-remainder, floored)");
  m.def("sample_corpus", &sample_corpus, py::arg("corpus_path"),
        py::arg("sample_out"), py::arg("budget"), py::arg("min_per_stratum"),
        py::arg("seed"), "Draw a seeded stratified sample; returns the targets");
  m.def("build_prompt", &build_prompt, py::arg("question"), py::arg("answer") = "",
        py::arg("choices") = std::vector<std::string>{}, py::arg("context") = "",
        py::arg("category") = "", "Render the judge prompt for one question");
  m.def("parse_response", &parse_response, py::arg("text"),
        "Parse a judge reply into (capability codes, propensity codes)");
  m.def("classify_with_mock", &classify_with_mock, py::arg("corpus_path"),
        py::arg("out_path"), py::arg("rules"), py::arg("model") = "mock-judge",
        py::arg("cache_dir") = py::none(),
        "Classify a corpus with the deterministic keyword mock judge");
  m.def("evaluate_files", &evaluate_files, py::arg("classifications_path"),
        py::arg("gold_path"),
        "Score judge output against gold labels; returns the metrics JSON");
  m.def("analyze_fixture", &analyze_fixture, py::arg("fixture_path"),
        "Coverage report JSON for a bundled reference fixture");
  m.def("analyze_classifications", &analyze_classifications,
        py::arg("classifications_path"), py::arg("corpus_path"),
        py::arg("denominator") = "all",
        "Coverage report JSON aggregated from judge classifications");
  m.def("run_cli", &run_cli, py::arg("args"),
        "Run a CLI subcommand in process; returns (exit_code, stdout, stderr)");
}
