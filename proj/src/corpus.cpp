#include "regcov/corpus.hpp"

#include "util.hpp"

#include <json.hpp>

#include <cctype>
#include <set>

namespace regcov::corpus {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Scalars are coerced to their textual form; containers are rejected.
std::string scalar_to_string(const json& value, const std::string& field,
                             std::size_t index) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_null()) return "";
  if (value.is_number() || value.is_boolean()) return value.dump();
  throw MalformedSourceError("field \"" + field + "\" must be a scalar", index);
}

std::vector<std::string> choices_from_json(const json& value, std::size_t index) {
  if (value.is_null()) return {};
  if (!value.is_array())
    throw MalformedSourceError("field \"choices\" must be an array", index);
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto& item : value) out.push_back(scalar_to_string(item, "choices", index));
  return out;
}

std::string source_field(const AdapterDescriptor& d, const std::string& field) {
  auto it = d.fields.find(field);
  return it == d.fields.end() ? std::string() : it->second;
}

std::string make_id(const std::string& benchmark, const std::string& native,
                    std::size_t index) {
  if (native.empty()) return benchmark + "_" + std::to_string(index);
  if (native.rfind(benchmark + "_", 0) == 0) return native;  // already prefixed
  return benchmark + "_" + native;
}

void resolve_letter_key(QuestionRecord& rec, std::size_t index) {
  if (rec.answer.empty()) return;
  std::string key(util::trim(rec.answer));
  if (key.size() != 1 || !std::isalpha(static_cast<unsigned char>(key[0])))
    throw MalformedSourceError(
        "letter-keyed answer must be a single letter, got \"" + rec.answer + "\"", index);
  char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(key[0])));
  std::size_t choice = static_cast<std::size_t>(letter - 'A');
  if (choice >= rec.choices.size())
    throw MalformedSourceError("answer key \"" + key + "\" has no matching choice (" +
                                   std::to_string(rec.choices.size()) + " choices)",
                               index);
  rec.metadata["answer_key"] = std::string(1, letter);
  rec.answer = rec.choices[choice];
}

QuestionRecord record_from_object(const json& obj, const std::string& benchmark,
                                  const AdapterDescriptor& d, bool letter_key,
                                  std::size_t index) {
  if (!obj.is_object())
    throw MalformedSourceError("expected a JSON object", index);
  QuestionRecord rec;
  rec.benchmark = benchmark;

  auto fetch = [&](const std::string& field) -> const json* {
    std::string src = source_field(d, field);
    if (src.empty()) return nullptr;
    auto it = obj.find(src);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
  };

  if (const json* v = fetch("question")) rec.question = scalar_to_string(*v, "question", index);
  if (const json* v = fetch("answer")) rec.answer = scalar_to_string(*v, "answer", index);
  if (const json* v = fetch("context")) rec.context = scalar_to_string(*v, "context", index);
  if (const json* v = fetch("category")) rec.category = scalar_to_string(*v, "category", index);
  if (const json* v = fetch("choices")) rec.choices = choices_from_json(*v, index);

  std::string native;
  if (const json* v = fetch("id")) native = scalar_to_string(*v, "id", index);
  rec.id = make_id(benchmark, native, index);

  if (letter_key) resolve_letter_key(rec, index);
  return rec;
}

// Lines are yielded without their terminator; the empty tail after a final
// newline is dropped.
std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<QuestionRecord> ingest_jsonl(const std::string& benchmark,
                                         const std::string& raw,
                                         const AdapterDescriptor& d, bool letter_key) {
  std::vector<QuestionRecord> out;
  auto lines = split_lines(raw);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json obj;
    try {
      obj = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw MalformedSourceError(std::string("invalid JSON: ") + e.what(), i);
    }
    out.push_back(record_from_object(obj, benchmark, d, letter_key, i));
  }
  return out;
}

std::vector<QuestionRecord> ingest_json_array(const std::string& benchmark,
                                              const std::string& raw,
                                              const AdapterDescriptor& d,
                                              bool letter_key) {
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw MalformedSourceError(std::string("invalid JSON: ") + e.what(), 0);
  }
  if (!doc.is_array())
    throw MalformedSourceError("expected a top-level JSON array of records", 0);
  std::vector<QuestionRecord> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i)
    out.push_back(record_from_object(doc[i], benchmark, d, letter_key, i));
  return out;
}

// RFC 4180 flavored: quoted cells may contain commas, newlines, and doubled
// quotes. Returns rows of cells; the caller interprets the header.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool cell_started = false;

  auto end_cell = [&] {
    row.push_back(std::move(cell));
    cell.clear();
    cell_started = false;
  };
  auto end_row = [&] {
    end_cell();
    if (row.size() > 1 || !row[0].empty()) rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"' && !cell_started) {
      quoted = true;
      cell_started = true;
    } else if (c == ',') {
      end_cell();
    } else if (c == '\n') {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      end_row();
    } else {
      cell.push_back(c);
      cell_started = true;
    }
  }
  if (quoted) throw MalformedSourceError("unterminated quoted CSV cell", rows.size());
  if (!cell.empty() || !row.empty()) end_row();
  return rows;
}

std::vector<std::string> csv_choices(const std::string& cell, std::size_t index) {
  std::string trimmed(util::trim(cell));
  if (trimmed.empty()) return {};
  if (trimmed.front() == '[') {
    json arr;
    try {
      arr = json::parse(trimmed);
    } catch (const json::parse_error& e) {
      throw MalformedSourceError(std::string("choices cell is not a JSON array: ") + e.what(),
                                 index);
    }
    return choices_from_json(arr, index);
  }
  // Fallback: pipe-separated list.
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t bar = cell.find('|', start);
    std::string item = cell.substr(start, bar == std::string::npos ? bar : bar - start);
    out.emplace_back(util::trim(item));
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  return out;
}

std::vector<QuestionRecord> ingest_csv(const std::string& benchmark,
                                       const std::string& raw,
                                       const AdapterDescriptor& d, bool letter_key) {
  auto rows = parse_csv(raw);
  if (rows.empty()) return {};
  const auto& header = rows[0];

  auto column_of = [&](const std::string& field) -> std::optional<std::size_t> {
    std::string src = source_field(d, field);
    if (src.empty()) return std::nullopt;
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == src) return i;
    throw MalformedSourceError("CSV header has no column \"" + src + "\"", 0);
  };

  auto id_col = column_of("id");
  auto question_col = column_of("question");
  auto answer_col = column_of("answer");
  auto choices_col = column_of("choices");
  auto context_col = column_of("context");
  auto category_col = column_of("category");

  std::vector<QuestionRecord> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::size_t index = r - 1;
    const auto& cells = rows[r];
    if (cells.size() != header.size())
      throw MalformedSourceError("row has " + std::to_string(cells.size()) +
                                     " cells, header has " + std::to_string(header.size()),
                                 index);
    auto cell = [&](std::optional<std::size_t> col) {
      return col ? cells[*col] : std::string();
    };
    QuestionRecord rec;
    rec.benchmark = benchmark;
    rec.question = cell(question_col);
    rec.answer = cell(answer_col);
    rec.context = cell(context_col);
    rec.category = cell(category_col);
    if (choices_col) rec.choices = csv_choices(cells[*choices_col], index);
    rec.id = make_id(benchmark, cell(id_col), index);
    if (letter_key) resolve_letter_key(rec, index);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<QuestionRecord> ingest_passthrough(const std::string& benchmark,
                                               const std::string& raw) {
  std::vector<QuestionRecord> out;
  auto lines = split_lines(raw);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json obj;
    try {
      obj = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw MalformedSourceError(std::string("invalid JSON: ") + e.what(), i);
    }
    if (!obj.is_object()) throw MalformedSourceError("expected a JSON object", i);

    QuestionRecord rec;
    auto get = [&](const char* field) -> std::string {
      auto it = obj.find(field);
      if (it == obj.end() || it->is_null()) return "";
      return scalar_to_string(*it, field, i);
    };
    rec.benchmark = get("benchmark");
    if (rec.benchmark.empty()) rec.benchmark = benchmark;
    rec.question = get("question");
    rec.answer = get("answer");
    rec.context = get("context");
    rec.category = get("category");
    if (auto it = obj.find("choices"); it != obj.end())
      rec.choices = choices_from_json(*it, i);
    if (auto it = obj.find("metadata"); it != obj.end() && !it->is_null()) {
      if (!it->is_object())
        throw MalformedSourceError("field \"metadata\" must be an object", i);
      for (const auto& [k, v] : it->items())
        rec.metadata[k] = scalar_to_string(v, "metadata." + k, i);
    }
    std::string native = get("id");
    rec.id = native.empty() ? make_id(rec.benchmark, native, i) : native;
    out.push_back(std::move(rec));
  }
  return out;
}

void validate_records(std::vector<QuestionRecord>& records) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].question.empty()) throw MissingFieldError("question", i);
    if (!seen.insert(records[i].id).second) throw DuplicateIdError(records[i].id);
  }
}

ordered_json record_to_json(const QuestionRecord& rec) {
  ordered_json j;
  j["id"] = rec.id;
  j["benchmark"] = rec.benchmark;
  j["question"] = rec.question;
  j["answer"] = rec.answer;
  j["choices"] = rec.choices;
  j["context"] = rec.context;
  j["category"] = rec.category;
  j["metadata"] = rec.metadata;
  return j;
}

std::string require_string(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end())
    throw ParseError(std::string("missing field \"") + field + "\"", line);
  if (!it->is_string())
    throw ParseError(std::string("field \"") + field + "\" must be a string", line);
  return it->get<std::string>();
}

}  // namespace

AdapterDescriptor parse_descriptor(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("adapter descriptor is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error("adapter descriptor must be a JSON object");

  AdapterDescriptor d;
  static const char* known[] = {"id", "question", "answer", "choices", "context", "category"};
  for (const auto& [key, value] : doc.items()) {
    if (key == "answer_is_letter_key") {
      if (!value.is_boolean()) throw Error("answer_is_letter_key must be a boolean");
      d.answer_is_letter_key = value.get<bool>();
      continue;
    }
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw Error("adapter descriptor has unknown key \"" + key + "\"");
    if (!value.is_string())
      throw Error("adapter descriptor entry \"" + key + "\" must be a string");
    d.fields[key] = value.get<std::string>();
  }
  return d;
}

AdapterDescriptor load_descriptor(const std::filesystem::path& path) {
  return parse_descriptor(util::read_file(path));
}

std::vector<QuestionRecord> ingest(const std::string& benchmark,
                                   const std::string& adapter_id, const std::string& raw,
                                   const AdapterDescriptor& descriptor) {
  if (benchmark.empty()) throw Error("benchmark name must be non-empty");

  bool letter_key = descriptor.answer_is_letter_key.value_or(adapter_id == "mc_json");
  std::vector<QuestionRecord> records;
  if (adapter_id == "jsonl") {
    records = ingest_jsonl(benchmark, raw, descriptor, letter_key);
  } else if (adapter_id == "csv") {
    records = ingest_csv(benchmark, raw, descriptor, letter_key);
  } else if (adapter_id == "mc_json") {
    records = ingest_json_array(benchmark, raw, descriptor, letter_key);
  } else if (adapter_id == "passthrough") {
    records = ingest_passthrough(benchmark, raw);
  } else {
    throw UnknownAdapterError("unknown adapter: \"" + adapter_id + "\"");
  }
  validate_records(records);
  return records;
}

std::vector<QuestionRecord> ingest_file(const std::string& benchmark,
                                        const std::string& adapter_id,
                                        const std::filesystem::path& path,
                                        const AdapterDescriptor& descriptor) {
  return ingest(benchmark, adapter_id, util::read_file(path), descriptor);
}

std::string to_jsonl(const std::vector<QuestionRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    out += record_to_json(rec).dump();
    out += '\n';
  }
  return out;
}

std::vector<QuestionRecord> parse_jsonl(const std::string& text) {
  std::vector<QuestionRecord> records;
  std::set<std::string> seen;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::size_t line_no = i + 1;
    json obj;
    try {
      obj = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!obj.is_object()) throw ParseError("expected a JSON object", line_no);

    QuestionRecord rec;
    rec.id = require_string(obj, "id", line_no);
    rec.benchmark = require_string(obj, "benchmark", line_no);
    rec.question = require_string(obj, "question", line_no);
    rec.answer = require_string(obj, "answer", line_no);
    rec.context = require_string(obj, "context", line_no);
    rec.category = require_string(obj, "category", line_no);

    auto choices = obj.find("choices");
    if (choices == obj.end() || !choices->is_array())
      throw ParseError("field \"choices\" must be an array", line_no);
    for (const auto& item : *choices) {
      if (!item.is_string())
        throw ParseError("field \"choices\" must contain strings", line_no);
      rec.choices.push_back(item.get<std::string>());
    }

    auto metadata = obj.find("metadata");
    if (metadata == obj.end() || !metadata->is_object())
      throw ParseError("field \"metadata\" must be an object", line_no);
    for (const auto& [k, v] : metadata->items()) {
      if (!v.is_string())
        throw ParseError("field \"metadata\" must map strings to strings", line_no);
      rec.metadata[k] = v.get<std::string>();
    }

    if (rec.id.empty()) throw ParseError("field \"id\" must be non-empty", line_no);
    if (rec.benchmark.empty())
      throw ParseError("field \"benchmark\" must be non-empty", line_no);
    if (rec.question.empty())
      throw ParseError("field \"question\" must be non-empty", line_no);
    if (!seen.insert(rec.id).second) throw DuplicateIdError(rec.id);
    records.push_back(std::move(rec));
  }
  return records;
}

void save_corpus(const std::vector<QuestionRecord>& records,
                 const std::filesystem::path& path) {
  util::write_file(path, to_jsonl(records));
}

std::vector<QuestionRecord> load_corpus(const std::filesystem::path& path) {
  return parse_jsonl(util::read_file(path));
}

CorpusStats corpus_stats(const std::vector<QuestionRecord>& records) {
  if (records.empty()) throw EmptyCorpusError();
  std::map<std::string, std::size_t> counts;
  for (const auto& rec : records) counts[rec.benchmark] += 1;
  return stats_from_counts(counts);
}

CorpusStats stats_from_counts(const std::map<std::string, std::size_t>& counts) {
  CorpusStats stats;
  stats.counts = counts;
  for (const auto& [name, n] : counts) stats.total += n;
  if (stats.total == 0) throw EmptyCorpusError();
  for (const auto& [name, n] : counts)
    stats.fractions[name] = static_cast<double>(n) / static_cast<double>(stats.total);
  return stats;
}

}  // namespace regcov::corpus
