#include "regcov/cli.hpp"

#include "regcov/sampler.hpp"
#include "regcov/validation.hpp"
#include "util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <string>

namespace regcov::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

fs::path resolve(const fs::path& base, const fs::path& path) {
  if (path.empty() || path.is_absolute()) return path;
  return base.empty() ? path : base / path;
}

void check_keys(const json& obj, const std::string& what,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* name) {
          return key == name;
        }) == allowed.end()) {
      throw Error(what + " has unknown key \"" + key + "\"");
    }
  }
}

std::string require_string(const json& obj, const char* key, const std::string& what) {
  if (!obj.contains(key) || !obj[key].is_string() ||
      obj[key].get<std::string>().empty()) {
    throw Error(what + " needs a non-empty string \"" + key + "\"");
  }
  return obj[key].get<std::string>();
}

ordered_json build_effective(const PipelineConfig& config) {
  ordered_json out;
  ordered_json benchmarks = ordered_json::array();
  for (const auto& source : config.sources) {
    ordered_json entry;
    entry["name"] = source.name;
    entry["path"] = source.path.generic_string();
    entry["adapter"] = source.adapter;
    benchmarks.push_back(std::move(entry));
  }
  out["benchmarks"] = benchmarks;
  ordered_json judge_cfg;
  judge_cfg["model"] = config.judge_config.model_id;
  judge_cfg["endpoint"] = config.judge_config.endpoint;
  judge_cfg["max_retries"] = config.judge_config.max_retries;
  judge_cfg["request_timeout_ms"] = config.judge_config.request_timeout_ms;
  judge_cfg["max_concurrency"] = config.judge_config.max_concurrency;
  judge_cfg["rate_limit_per_sec"] = config.judge_config.rate_limit_per_sec;
  judge_cfg["cache_dir"] = config.judge_config.cache_dir.generic_string();
  judge_cfg["backoff_base_seconds"] = config.judge_config.backoff_base_seconds;
  if (!config.mock_rules.empty()) {
    ordered_json rules = ordered_json::object();
    for (const auto& [keyword, code] : config.mock_rules) rules[keyword] = code;
    judge_cfg["mock_rules"] = rules;
  }
  out["judge"] = judge_cfg;
  ordered_json sampling;
  sampling["budget"] = config.budget;
  sampling["min_per_stratum"] = config.min_per_stratum;
  sampling["seed"] = config.seed;
  out["sampling"] = sampling;
  ordered_json analysis_cfg;
  analysis_cfg["denominator"] =
      std::string(analysis::denominator_name(config.denominator));
  analysis_cfg["risk_mapping"] = config.risk_mapping_path.generic_string();
  out["analysis"] = analysis_cfg;
  out["output_dir"] = config.output_dir.generic_string();
  return out;
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text,
                            const std::filesystem::path& base_dir) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error("config is not a JSON object");
  }
  check_keys(doc, "config",
             {"benchmarks", "judge", "sampling", "analysis", "output_dir"});
  PipelineConfig config;

  if (doc.contains("benchmarks")) {
    if (!doc["benchmarks"].is_array()) {
      throw Error("config benchmarks must be an array");
    }
    std::set<std::string> names;
    for (const auto& entry : doc["benchmarks"]) {
      if (!entry.is_object()) {
        throw Error("config benchmarks entries must be objects");
      }
      check_keys(entry, "benchmark entry",
                 {"name", "path", "adapter", "descriptor", "descriptor_path"});
      BenchmarkSource source;
      source.name = require_string(entry, "name", "benchmark entry");
      source.path = resolve(base_dir, require_string(entry, "path", "benchmark entry"));
      source.adapter = require_string(entry, "adapter", "benchmark entry");
      if (entry.contains("descriptor") && entry.contains("descriptor_path")) {
        throw Error("benchmark entry \"" + source.name +
                    "\" has both descriptor and descriptor_path");
      }
      if (entry.contains("descriptor")) {
        source.descriptor = corpus::parse_descriptor(entry["descriptor"].dump());
      } else if (entry.contains("descriptor_path")) {
        source.descriptor = corpus::load_descriptor(resolve(
            base_dir, require_string(entry, "descriptor_path", "benchmark entry")));
      }
      if (!names.insert(source.name).second) {
        throw Error("config lists benchmark \"" + source.name + "\" twice");
      }
      config.sources.push_back(std::move(source));
    }
  }

  if (doc.contains("judge")) {
    const json& judge_cfg = doc["judge"];
    if (!judge_cfg.is_object()) throw Error("config judge must be an object");
    check_keys(judge_cfg, "judge config",
               {"model", "endpoint", "max_retries", "request_timeout_ms",
                "max_concurrency", "rate_limit_per_sec", "cache_dir",
                "backoff_base_seconds", "extra_params", "mock_rules"});
    if (judge_cfg.contains("model")) {
      config.judge_config.model_id = judge_cfg["model"].get<std::string>();
    }
    if (judge_cfg.contains("endpoint")) {
      config.judge_config.endpoint = judge_cfg["endpoint"].get<std::string>();
    }
    if (judge_cfg.contains("max_retries")) {
      config.judge_config.max_retries = judge_cfg["max_retries"].get<int>();
    }
    if (judge_cfg.contains("request_timeout_ms")) {
      config.judge_config.request_timeout_ms =
          judge_cfg["request_timeout_ms"].get<int>();
    }
    if (judge_cfg.contains("max_concurrency")) {
      config.judge_config.max_concurrency = judge_cfg["max_concurrency"].get<int>();
    }
    if (judge_cfg.contains("rate_limit_per_sec")) {
      config.judge_config.rate_limit_per_sec =
          judge_cfg["rate_limit_per_sec"].get<double>();
    }
    if (judge_cfg.contains("cache_dir")) {
      config.judge_config.cache_dir =
          resolve(base_dir, judge_cfg["cache_dir"].get<std::string>());
    }
    if (judge_cfg.contains("backoff_base_seconds")) {
      config.judge_config.backoff_base_seconds =
          judge_cfg["backoff_base_seconds"].get<double>();
    }
    if (judge_cfg.contains("extra_params")) {
      config.judge_config.extra_params = judge_cfg["extra_params"];
    }
    if (judge_cfg.contains("mock_rules")) {
      if (!judge_cfg["mock_rules"].is_object()) {
        throw Error("judge mock_rules must be an object of keyword -> code");
      }
      for (const auto& [keyword, code] : judge_cfg["mock_rules"].items()) {
        if (!code.is_string()) {
          throw Error("mock rule \"" + keyword + "\" must map to a code string");
        }
        config.mock_rules[keyword] = code.get<std::string>();
      }
    }
  }

  if (doc.contains("sampling")) {
    const json& sampling = doc["sampling"];
    if (!sampling.is_object()) throw Error("config sampling must be an object");
    check_keys(sampling, "sampling config", {"budget", "min_per_stratum", "seed"});
    if (sampling.contains("budget")) {
      config.budget = sampling["budget"].get<std::size_t>();
    }
    if (sampling.contains("min_per_stratum")) {
      config.min_per_stratum = sampling["min_per_stratum"].get<std::size_t>();
    }
    if (sampling.contains("seed")) {
      config.seed = sampling["seed"].get<std::uint64_t>();
    }
  }

  if (doc.contains("analysis")) {
    const json& analysis_cfg = doc["analysis"];
    if (!analysis_cfg.is_object()) throw Error("config analysis must be an object");
    check_keys(analysis_cfg, "analysis config", {"denominator", "risk_mapping"});
    if (analysis_cfg.contains("denominator")) {
      config.denominator =
          analysis::parse_denominator(analysis_cfg["denominator"].get<std::string>());
    }
    if (analysis_cfg.contains("risk_mapping")) {
      config.risk_mapping_path =
          resolve(base_dir, analysis_cfg["risk_mapping"].get<std::string>());
    }
  }

  if (doc.contains("output_dir")) {
    config.output_dir = resolve(base_dir, doc["output_dir"].get<std::string>());
  }
  config.effective = build_effective(config);
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(util::read_file(path), path.parent_path());
  } catch (const Error& err) {
    throw Error(path.string() + ": " + err.what());
  }
}

PipelineConfig default_config() {
  PipelineConfig config;
  config.effective = build_effective(config);
  return config;
}

namespace {

int cmd_ingest(const PipelineConfig& config, std::ostream& out, std::ostream& err) {
  if (config.sources.empty()) {
    err << "error: config lists no benchmark sources to ingest\n";
    return kExitError;
  }
  std::vector<QuestionRecord> records;
  std::set<std::string> seen_ids;
  for (const auto& source : config.sources) {
    std::vector<QuestionRecord> batch;
    try {
      batch = corpus::ingest_file(source.name, source.adapter, source.path,
                                  source.descriptor);
    } catch (const Error& error) {
      err << "error: " << source.path.string() << ": " << error.what() << "\n";
      return kExitError;
    }
    for (auto& rec : batch) {
      if (!seen_ids.insert(rec.id).second) {
        err << "error: " << source.path.string() << ": duplicate question id "
            << rec.id << " across sources\n";
        return kExitError;
      }
      records.push_back(std::move(rec));
    }
  }
  fs::path corpus_path = config.output_dir / "corpus.jsonl";
  corpus::save_corpus(records, corpus_path);
  corpus::CorpusStats stats = corpus::corpus_stats(records);
  out << "ingested " << stats.total << " questions from " << config.sources.size()
      << " benchmarks into " << corpus_path.string() << "\n";
  for (const auto& [benchmark, count] : stats.counts) {
    out << "  " << benchmark << ": " << count << " ("
        << util::fixed(stats.fractions.at(benchmark) * 100.0, 2) << "%)\n";
  }
  return kExitOk;
}

int cmd_sample(const PipelineConfig& config, const fs::path& corpus_path,
               std::ostream& out, std::ostream& err) {
  std::vector<QuestionRecord> records = corpus::load_corpus(corpus_path);
  corpus::CorpusStats stats = corpus::corpus_stats(records);
  sampler::Allocation allocation =
      sampler::allocate(stats.counts, config.budget, config.min_per_stratum);
  sampler::Sample sample = sampler::draw(records, allocation, config.seed);
  fs::path sample_path = config.output_dir / "sample.jsonl";
  fs::path allocation_path = config.output_dir / "allocation.json";
  corpus::save_corpus(sample.records, sample_path);
  util::write_file(allocation_path, sampler::allocation_to_json(allocation));
  std::size_t total = 0;
  for (const auto& [benchmark, target] : allocation.targets) total += target;
  out << "sampled " << total << " of " << stats.total << " questions (budget "
      << config.budget << ", min " << config.min_per_stratum << ", seed "
      << config.seed << ") into " << sample_path.string() << "\n";
  for (const auto& [benchmark, target] : allocation.targets) {
    out << "  " << benchmark << ": " << target << "\n";
  }
  (void)err;
  return kExitOk;
}

int cmd_judge(PipelineConfig config, const fs::path& corpus_path, bool mock,
              bool resume, std::ostream& out, std::ostream& err) {
  std::vector<QuestionRecord> records = corpus::load_corpus(corpus_path);
  fs::path classifications_path = config.output_dir / "classifications.jsonl";
  fs::path errors_path = config.output_dir / "judge_errors.jsonl";
  if (fs::exists(classifications_path) && !resume) {
    err << "error: " << classifications_path.string()
        << " already exists; pass --resume to redo the run from cache\n";
    return kExitError;
  }
  if (config.judge_config.cache_dir.empty()) {
    config.judge_config.cache_dir = config.output_dir / "judge_cache";
  }
  std::unique_ptr<judge::Backend> backend;
  if (mock) {
    if (config.judge_config.model_id.empty()) {
      config.judge_config.model_id = "mock-judge";
    }
    backend = std::make_unique<judge::MockBackend>(config.mock_rules);
  } else {
    backend = judge::make_http_backend(config.judge_config);
  }
  config.effective = build_effective(config);

  std::size_t step = std::max<std::size_t>(1, records.size() / 10);
  judge::ProgressFn progress = [&](const judge::BatchProgress& p) {
    if (p.completed % step == 0 || p.completed == p.total) {
      err << "judged " << p.completed << "/" << p.total << "\n";
    }
  };
  judge::BatchResult result =
      judge::classify_batch(records, *backend, config.judge_config, progress);
  judge::save_enriched(result.classifications, classifications_path);
  util::write_file(errors_path, judge::errors_to_jsonl(result.errors));
  out << "classified " << result.classifications.size() << " of " << records.size()
      << " questions (" << result.errors.size() << " errors) into "
      << classifications_path.string() << "\n";
  return result.errors.empty() ? kExitOk : kExitPartial;
}

int cmd_validate(const PipelineConfig& config, const fs::path& classifications_path,
                 const fs::path& gold_path, std::ostream& out, std::ostream& err) {
  std::vector<judge::Classification> classifications =
      judge::load_enriched(classifications_path);
  std::vector<validation::GoldAnnotation> gold = validation::load_gold(gold_path);
  validation::MetricsReport report = validation::evaluate(classifications, gold);
  fs::path json_path = config.output_dir / "metrics.json";
  fs::path md_path = config.output_dir / "metrics.md";
  util::write_file(json_path, validation::metrics_to_json(report));
  util::write_file(md_path, validation::metrics_to_markdown(report));
  out << "validated " << report.models.size() << " model(s) against "
      << gold.size() << " gold annotations; wrote " << json_path.string() << "\n";
  for (const auto& metrics : report.models) {
    out << "  " << metrics.model << ": capabilities kappa "
        << util::fixed(metrics.capabilities.kappa, 3) << " ("
        << metrics.capabilities.kappa_band << "), propensities kappa "
        << util::fixed(metrics.propensities.kappa, 3) << " ("
        << metrics.propensities.kappa_band << ")\n";
  }
  (void)err;
  return kExitOk;
}

struct AnalysisInputs {
  fs::path classifications;
  fs::path fixture;
  fs::path corpus;
  std::string model;
};

analysis::AnalysisReport make_analysis_report(const PipelineConfig& config,
                                              const AnalysisInputs& inputs) {
  RiskMapping mapping = config.risk_mapping_path.empty()
                            ? default_risk_mapping()
                            : load_risk_mapping_file(config.risk_mapping_path);
  if (!inputs.fixture.empty()) {
    if (config.denominator == analysis::DenominatorMode::LabeledQuestions) {
      throw Error(
          "the reference fixture has no labeled-question denominators; use "
          "--denominator all");
    }
    analysis::CoverageFixture fixture = analysis::load_fixture(inputs.fixture);
    return analysis::build_report(fixture, mapping, config.denominator);
  }

  std::vector<judge::Classification> classifications =
      judge::load_enriched(inputs.classifications);
  if (!inputs.model.empty()) {
    std::vector<judge::Classification> filtered;
    for (const auto& item : classifications) {
      if (item.model_id == inputs.model) filtered.push_back(item);
    }
    if (filtered.empty()) {
      throw Error("no classifications by model \"" + inputs.model + "\" in " +
                  inputs.classifications.string());
    }
    classifications = std::move(filtered);
  } else {
    std::set<std::string> models;
    for (const auto& item : classifications) models.insert(item.model_id);
    if (models.size() > 1) {
      std::string list;
      for (const auto& model : models) {
        if (!list.empty()) list += ", ";
        list += model;
      }
      throw Error("classifications mix several models (" + list +
                  "); pick one with --model");
    }
  }

  std::map<std::string, std::size_t> corpus_sizes;
  if (!inputs.corpus.empty()) {
    corpus_sizes = corpus::corpus_stats(corpus::load_corpus(inputs.corpus)).counts;
  } else {
    for (const auto& item : classifications) ++corpus_sizes[item.benchmark];
  }
  return analysis::build_report(analysis::aggregate(classifications, corpus_sizes),
                                mapping, config.denominator);
}

int cmd_analyze(const PipelineConfig& config, const AnalysisInputs& inputs,
                std::ostream& out, std::ostream& err) {
  analysis::AnalysisReport report = make_analysis_report(config, inputs);
  fs::path json_path = config.output_dir / "analysis.json";
  util::write_file(json_path,
                   analysis::report_to_json(report, config.effective.dump()));
  util::write_file(config.output_dir / "capability_matrix.csv",
                   analysis::matrix_to_csv(report.matrix, CategoryKind::Capability));
  util::write_file(config.output_dir / "propensity_matrix.csv",
                   analysis::matrix_to_csv(report.matrix, CategoryKind::Propensity));
  util::write_file(config.output_dir / "heatmap.json",
                   analysis::heatmap_json(report.matrix, report.mode));
  out << "analyzed " << util::with_thousands(report.corpus_size)
      << " questions; wrote " << json_path.string() << "\n";
  out << "grand totals: capabilities "
      << util::with_thousands(report.capability_grand_total) << ", propensities "
      << util::with_thousands(report.propensity_grand_total) << "\n";
  for (const auto& row : report.risks) {
    out << "  " << risk_name(row.risk) << ": "
        << util::with_thousands(row.question_sum) << " questions ("
        << util::fixed(row.coverage_pct * 100.0, 1) << "%)\n";
  }
  (void)err;
  return kExitOk;
}

int cmd_report(const PipelineConfig& config, const AnalysisInputs& inputs,
               const fs::path& gold_path, std::ostream& out, std::ostream& err) {
  if (!gold_path.empty() && !inputs.fixture.empty()) {
    err << "error: --gold needs judge classifications, not the fixture\n";
    return kExitError;
  }
  analysis::AnalysisReport report = make_analysis_report(config, inputs);
  std::string markdown = analysis::report_to_markdown(report);
  if (!gold_path.empty()) {
    std::vector<judge::Classification> classifications =
        judge::load_enriched(inputs.classifications);
    std::vector<validation::GoldAnnotation> gold = validation::load_gold(gold_path);
    markdown += "\n" + validation::metrics_to_markdown(
                           validation::evaluate(classifications, gold));
  }
  fs::path md_path = config.output_dir / "report.md";
  util::write_file(md_path, markdown);
  out << "wrote " << md_path.string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Benchmark coverage toolkit: normalize corpora, sample, classify "
               "with an LLM judge, validate against gold labels, and analyze "
               "regulatory coverage"};
  app.name("regcov");
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string corpus_path;
  std::string classifications_path;
  std::string fixture_path;
  std::string gold_path;
  std::string model;
  std::string denominator;
  std::uint64_t seed = 0;
  std::uint64_t budget = 0;
  std::uint64_t min_per_stratum = 0;
  bool mock = false;
  bool live = false;
  bool resume = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "pipeline config JSON");
    sub->add_option("--out", out_dir, "output directory (overrides config)");
  };

  CLI::App* ingest = app.add_subcommand("ingest", "normalize benchmark sources");
  add_common(ingest);

  CLI::App* sample = app.add_subcommand("sample", "draw a stratified sample");
  add_common(sample);
  sample->add_option("--corpus", corpus_path, "normalized corpus JSONL");
  CLI::Option* seed_opt = sample->add_option("--seed", seed, "sampling seed");
  CLI::Option* budget_opt = sample->add_option("--budget", budget, "sample budget");
  CLI::Option* min_opt =
      sample->add_option("--min-per-stratum", min_per_stratum, "per-stratum floor");

  CLI::App* judge_cmd = app.add_subcommand("judge", "classify questions");
  add_common(judge_cmd);
  judge_cmd->add_option("--corpus", corpus_path, "normalized corpus JSONL");
  judge_cmd->add_option("--model", model, "judge model id (overrides config)");
  judge_cmd->add_flag("--mock", mock, "use the deterministic mock backend");
  judge_cmd->add_flag("--live", live, "use the HTTP backend (needs REGCOV_API_KEY)");
  judge_cmd->add_flag("--resume", resume, "redo the run, replaying cached results");

  CLI::App* validate = app.add_subcommand("validate", "score against gold labels");
  add_common(validate);
  validate->add_option("--classifications", classifications_path, "judge output JSONL")
      ->required();
  validate->add_option("--gold", gold_path, "gold annotation JSONL")->required();

  auto add_analysis_inputs = [&](CLI::App* sub) {
    sub->add_option("--classifications", classifications_path, "judge output JSONL");
    sub->add_option("--fixture", fixture_path, "reference coverage fixture JSON");
    sub->add_option("--corpus", corpus_path, "corpus JSONL for per-benchmark sizes");
    sub->add_option("--model", model, "pick one model from the classifications");
    sub->add_option("--denominator", denominator,
                    "normalization denominator: labeled or all");
  };
  CLI::App* analyze = app.add_subcommand("analyze", "coverage and risk analysis");
  add_common(analyze);
  add_analysis_inputs(analyze);

  CLI::App* report = app.add_subcommand("report", "human-readable summary");
  add_common(report);
  add_analysis_inputs(report);
  report->add_option("--gold", gold_path, "gold annotations for a metrics section");

  std::vector<const char*> argv;
  argv.push_back("regcov");
  for (const auto& arg : args) argv.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& parse_error) {
    int code = app.exit(parse_error, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    PipelineConfig config =
        config_path.empty() ? default_config() : load_config(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (*seed_opt) config.seed = seed;
    if (*budget_opt) config.budget = budget;
    if (*min_opt) config.min_per_stratum = min_per_stratum;
    if (!denominator.empty()) {
      config.denominator = analysis::parse_denominator(denominator);
    }
    config.effective = build_effective(config);

    if (app.got_subcommand(ingest)) {
      return cmd_ingest(config, out, err);
    }
    if (app.got_subcommand(sample)) {
      fs::path corpus = corpus_path.empty()
                            ? config.output_dir / "corpus.jsonl"
                            : fs::path(corpus_path);
      return cmd_sample(config, corpus, out, err);
    }
    if (app.got_subcommand(judge_cmd)) {
      if (mock == live) {
        err << "error: pass exactly one of --mock or --live\n";
        return kExitError;
      }
      if (!model.empty()) config.judge_config.model_id = model;
      fs::path corpus = corpus_path.empty()
                            ? config.output_dir / "corpus.jsonl"
                            : fs::path(corpus_path);
      return cmd_judge(config, corpus, mock, resume, out, err);
    }
    if (app.got_subcommand(validate)) {
      return cmd_validate(config, classifications_path, gold_path, out, err);
    }
    if (app.got_subcommand(analyze) || app.got_subcommand(report)) {
      AnalysisInputs inputs;
      inputs.classifications = classifications_path;
      inputs.fixture = fixture_path;
      inputs.corpus = corpus_path;
      inputs.model = model;
      if (inputs.classifications.empty() == inputs.fixture.empty()) {
        err << "error: pass exactly one of --classifications or --fixture\n";
        return kExitError;
      }
      if (app.got_subcommand(analyze)) {
        return cmd_analyze(config, inputs, out, err);
      }
      return cmd_report(config, inputs, gold_path, out, err);
    }
    err << "error: no subcommand\n";
    return kExitError;
  } catch (const Error& error) {
    err << "error: " << error.what() << "\n";
    return kExitError;
  } catch (const std::exception& error) {
    err << "error: " << error.what() << "\n";
    return kExitError;
  }
}

}  // namespace regcov::cli
