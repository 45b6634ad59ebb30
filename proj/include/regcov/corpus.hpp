#pragma once
// Corpus normalization: per-format adapters turn raw benchmark files into one
// QuestionRecord shape, persisted as newline-delimited UTF-8 JSON with a fixed
// field order so a written corpus is byte-stable across runs.

#include "regcov/error.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace regcov {

struct QuestionRecord {
  std::string id;          // unique within a corpus, "<benchmark>_<native id or ordinal>"
  std::string benchmark;   // source benchmark tag, e.g. "hle"
  std::string question;
  std::string answer;      // may be empty if the source lacks one
  std::vector<std::string> choices;  // source order preserved; empty if open-ended
  std::string context;     // empty when absent
  std::string category;    // source-native topic label, empty when absent
  std::map<std::string, std::string> metadata;  // source-specific extras

  bool operator==(const QuestionRecord&) const = default;
};

namespace corpus {

class MalformedSourceError : public Error {
 public:
  MalformedSourceError(const std::string& message, std::size_t record_index)
      : Error("record " + std::to_string(record_index) + ": " + message),
        record_index_(record_index) {}

  std::size_t record_index() const noexcept { return record_index_; }

 private:
  std::size_t record_index_;
};

class MissingFieldError : public Error {
 public:
  MissingFieldError(const std::string& field, std::size_t record_index)
      : Error("record " + std::to_string(record_index) + ": missing required field \"" +
              field + "\""),
        field_(field),
        record_index_(record_index) {}

  const std::string& field() const noexcept { return field_; }
  std::size_t record_index() const noexcept { return record_index_; }

 private:
  std::string field_;
  std::size_t record_index_;
};

class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(const std::string& id)
      : Error("duplicate record id: \"" + id + "\""), id_(id) {}

  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class EmptyCorpusError : public Error {
 public:
  EmptyCorpusError() : Error("corpus is empty") {}
};

class UnknownAdapterError : public Error {
 public:
  using Error::Error;
};

// Maps QuestionRecord fields onto source fields or CSV columns. Keys are the
// record field names (id, question, answer, choices, context, category); a
// missing entry means the source has no such field. answer_is_letter_key
// defaults per adapter: true for "mc_json", false otherwise.
struct AdapterDescriptor {
  std::map<std::string, std::string> fields;
  std::optional<bool> answer_is_letter_key;
};

AdapterDescriptor parse_descriptor(const std::string& json_text);
AdapterDescriptor load_descriptor(const std::filesystem::path& path);

// Registered adapters:
//   "jsonl"       one JSON object per line
//   "csv"         header row + one record per row (RFC 4180 quoting)
//   "mc_json"     a JSON array of multiple-choice records; answers default to
//                 letter keys ("B") resolved against the choice list
//   "passthrough" JSONL already in the normalized record shape
// Records are emitted in source order. Ids become "<benchmark>_<native id>",
// or "<benchmark>_<0-based index>" when the source has none; letter-keyed
// answers are resolved to the choice text with the original letter kept in
// metadata under "answer_key".
std::vector<QuestionRecord> ingest(const std::string& benchmark,
                                   const std::string& adapter_id,
                                   const std::string& raw,
                                   const AdapterDescriptor& descriptor = {});
std::vector<QuestionRecord> ingest_file(const std::string& benchmark,
                                        const std::string& adapter_id,
                                        const std::filesystem::path& path,
                                        const AdapterDescriptor& descriptor = {});

// JSONL persistence. Field order is fixed (id, benchmark, question, answer,
// choices, context, category, metadata) and all fields are always present, so
// save-load-save is byte-identical. Loads report 1-based line numbers.
std::string to_jsonl(const std::vector<QuestionRecord>& records);
std::vector<QuestionRecord> parse_jsonl(const std::string& text);
void save_corpus(const std::vector<QuestionRecord>& records,
                 const std::filesystem::path& path);
std::vector<QuestionRecord> load_corpus(const std::filesystem::path& path);

struct CorpusStats {
  std::map<std::string, std::size_t> counts;  // per-benchmark question counts
  std::map<std::string, double> fractions;    // count / total
  std::size_t total = 0;
};

CorpusStats corpus_stats(const std::vector<QuestionRecord>& records);
CorpusStats stats_from_counts(const std::map<std::string, std::size_t>& counts);

}  // namespace corpus
}  // namespace regcov
