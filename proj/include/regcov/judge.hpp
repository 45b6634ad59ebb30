#pragma once
// LLM-as-judge classification: builds the evaluation prompt for a question,
// dispatches it to a backend (HTTP chat-completion endpoint or deterministic
// mock), parses the {"capab": [...], "prop": [...]} response into validated
// code sets, and enriches results into the final record shape.

#include "regcov/corpus.hpp"
#include "regcov/error.hpp"
#include "regcov/taxonomy.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace regcov::judge {

struct Classification {
  std::string question_id;
  std::string benchmark;
  std::string model_id;
  CodeSet capabilities;
  CodeSet propensities;

  bool operator==(const Classification&) const = default;
};

enum class JudgeErrorKind {
  Transport,
  RateLimited,
  MalformedResponse,
  UnknownCode,
  Timeout,
};

std::string_view judge_error_kind_name(JudgeErrorKind kind);
JudgeErrorKind parse_judge_error_kind(std::string_view name);

// A per-record failure. Judge errors are data, not exceptions: a batch never
// aborts because one record failed.
struct JudgeError {
  std::string question_id;
  JudgeErrorKind kind = JudgeErrorKind::Transport;
  std::string detail;
  int attempts = 0;  // total backend attempts; at most max_retries + 1

  bool operator==(const JudgeError&) const = default;
};

struct JudgeConfig {
  std::string model_id;
  std::string endpoint;            // full URL, e.g. "http://host:8080/v1/chat/completions"
  int max_retries = 3;             // re-attempts after the first try
  int request_timeout_ms = 30000;
  int max_concurrency = 8;
  double rate_limit_per_sec = 1000.0;  // dispatch rate cap; must be > 0
  std::filesystem::path cache_dir;     // empty disables the cache
  double backoff_base_seconds = 1.0;   // doubled per retry, jittered
  // Optional decoding parameters merged into the HTTP request body. When set
  // they also become part of the cache key.
  nlohmann::json extra_params;
};

// Raised by backends; classify() converts it into a JudgeError value.
class BackendError : public Error {
 public:
  BackendError(JudgeErrorKind kind, const std::string& message)
      : Error(message), kind_(kind) {}

  JudgeErrorKind kind() const noexcept { return kind_; }

 private:
  JudgeErrorKind kind_;
};

class MalformedResponseError : public Error {
 public:
  using Error::Error;
};

// A judge backend: takes a rendered prompt, returns raw model text. Must be
// safely callable from multiple threads.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

// The classification prompt with {question}, {context}, {answer}, {choices},
// and {category} placeholders.
const std::string& prompt_template();

// Single-pass substitution of the placeholders; choices render as a JSON
// array literal ("[]" when empty), other empty fields as empty strings.
// Substituted values are never re-scanned for placeholders.
std::string build_prompt(const QuestionRecord& record);

// Extracts the first balanced JSON object from the text (tolerating prose and
// Markdown code fences around it), requires "capab" and "prop" arrays of
// strings, trims whitespace inside each string, validates every code, and
// deduplicates. A known code of the wrong kind (a "P..." inside "capab") is
// MalformedResponse; an unparseable code is UnknownCode.
std::pair<CodeSet, CodeSet> parse_response(const std::string& text);

// File-backed result cache, one file per key. Writes go through a temp file
// and rename, so concurrent readers never see partial content; unreadable or
// corrupt entries count as misses.
class ResultCache {
 public:
  explicit ResultCache(std::filesystem::path dir);

  static std::string key_for(const std::string& model_id, const std::string& prompt,
                             const nlohmann::json& extra_params);

  std::optional<std::pair<CodeSet, CodeSet>> get(const std::string& key) const;
  void put(const std::string& key, const std::string& model_id,
           const CodeSet& capabilities, const CodeSet& propensities) const;

 private:
  std::filesystem::path dir_;
};

// One classification attempt cycle: build prompt, call the backend, parse.
// Transient failures (transport, rate-limit, timeout) retry up to max_retries
// with exponential backoff; a malformed or unknown-code response retries once
// before surfacing. With cache_dir set, a cached result is returned without
// touching the backend.
std::variant<Classification, JudgeError> classify(const QuestionRecord& record,
                                                  Backend& backend,
                                                  const JudgeConfig& config);

struct BatchProgress {
  std::size_t completed = 0;
  std::size_t total = 0;
  std::string question_id;
  bool ok = true;
};
using ProgressFn = std::function<void(const BatchProgress&)>;

struct BatchResult {
  std::vector<Classification> classifications;  // successes, input order
  std::vector<JudgeError> errors;               // failures, input order
};

// Classifies every record with at most max_concurrency requests in flight and
// dispatches paced to rate_limit_per_sec. Successful results are written to
// the cache as they arrive, so an interrupted run resumes from cache without
// re-issuing completed calls.
BatchResult classify_batch(const std::vector<QuestionRecord>& records, Backend& backend,
                           const JudgeConfig& config, const ProgressFn& progress = {});

// The final record shape:
//   {"model": ..., "id": ..., "benchmark": ...,
//    "evaluation": {"capabilities": {<display name>: 1, ...},
//                   "propensities": {...}}}
// Names come from the taxonomy verbatim, ordered by code index.
nlohmann::ordered_json enrich(const Classification& classification);

std::string to_enriched_jsonl(const std::vector<Classification>& classifications);
std::vector<Classification> parse_enriched_jsonl(const std::string& text);
void save_enriched(const std::vector<Classification>& classifications,
                   const std::filesystem::path& path);
std::vector<Classification> load_enriched(const std::filesystem::path& path);

std::string errors_to_jsonl(const std::vector<JudgeError>& errors);
std::vector<JudgeError> parse_errors_jsonl(const std::string& text);

// Deterministic offline backend: scans the question text inside the prompt
// for the rule table's keywords (case-sensitive substring match) and answers
// with the mapped codes as a well-formed JSON response.
class MockBackend : public Backend {
 public:
  explicit MockBackend(const std::map<std::string, std::string>& rules);

  std::string complete(const std::string& prompt) override;

 private:
  std::map<std::string, CategoryCode> rules_;
};

// Chat-completion HTTP backend. POSTs {model, messages:[{role:"user",
// content:<prompt>}]} with a bearer token and returns the first choice's
// message content.
class HttpBackend : public Backend {
 public:
  HttpBackend(const std::string& endpoint, const std::string& model_id,
              const std::string& api_key, int timeout_ms);

  std::string complete(const std::string& prompt) override;

 private:
  std::string base_;   // scheme://host[:port]
  std::string path_;
  std::string model_id_;
  std::string api_key_;
  int timeout_ms_;
  nlohmann::json extra_params_;

 public:
  // Decoding parameters merged into every request body.
  void set_extra_params(nlohmann::json params) { extra_params_ = std::move(params); }
};

// Builds an HttpBackend from the config, reading the bearer token from the
// REGCOV_API_KEY environment variable.
std::unique_ptr<Backend> make_http_backend(const JudgeConfig& config);

}  // namespace regcov::judge
