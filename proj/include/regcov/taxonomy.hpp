#pragma once
// Category taxonomy from the EU AI Act Code of Practice: thirteen model
// capabilities (C1-C13), nine model propensities (P1-P9), and the mapping
// from the four systemic-risk areas to the codes contributing to each.
// Every other module resolves codes and display names through this one.

#include "regcov/error.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace regcov {

enum class CategoryKind : std::uint8_t { Capability, Propensity };

std::string_view kind_name(CategoryKind kind);  // "capability" / "propensity"

class UnknownCodeError : public Error {
 public:
  using Error::Error;
};

class UnknownRiskError : public Error {
 public:
  using Error::Error;
};

// A validated taxonomy code such as C6 or P3. Capabilities order before
// propensities; within a kind, codes order by index.
class CategoryCode {
 public:
  static CategoryCode capability(int index);  // 1..13
  static CategoryCode propensity(int index);  // 1..9

  CategoryKind kind() const noexcept { return kind_; }
  int index() const noexcept { return index_; }
  std::string text() const;  // canonical spelling, e.g. "C6"

  auto operator<=>(const CategoryCode&) const = default;

 private:
  CategoryCode(CategoryKind kind, int index) : kind_(kind), index_(index) {}
  CategoryKind kind_;
  int index_;
};

using CodeSet = std::set<CategoryCode>;

struct CategoryDef {
  CategoryCode code;
  std::string name;         // display name, used verbatim in enriched records
  std::string description;
};

// Strict: accepts exactly "C1".."C13" and "P1".."P9", case-sensitive, no
// padding or surrounding whitespace. Anything else is UnknownCodeError.
CategoryCode parse_code(std::string_view text);
std::optional<CategoryCode> try_parse_code(std::string_view text) noexcept;

// All 22 definitions, C1..C13 first, then P1..P9, in index order.
const std::vector<CategoryDef>& all_categories();
const CategoryDef& category(CategoryCode code);
// Reverse lookup by display name; throws UnknownCodeError for unknown names.
const CategoryDef& category_by_name(std::string_view name);
std::size_t category_count(CategoryKind kind);  // 13 or 9
std::vector<CategoryCode> all_codes(CategoryKind kind);  // index order

enum class SystemicRisk : std::uint8_t {
  HarmfulManipulation,
  CyberOffence,
  CbrnRisks,
  LossOfControl,
};

inline constexpr std::array<SystemicRisk, 4> kAllRisks = {
    SystemicRisk::HarmfulManipulation,
    SystemicRisk::CyberOffence,
    SystemicRisk::CbrnRisks,
    SystemicRisk::LossOfControl,
};

std::string_view risk_name(SystemicRisk risk);  // e.g. "Harmful Manipulation"
SystemicRisk parse_risk(std::string_view name);  // throws UnknownRiskError

using RiskMapping = std::map<SystemicRisk, CodeSet>;

// Built-in expert mapping. A code may contribute to several risks.
RiskMapping default_risk_mapping();
CodeSet risk_components(SystemicRisk risk);

// Override table: a JSON object {"<risk display name>": ["C1", ...], ...}.
// Risks named in the object replace their default component set; risks
// absent keep the default. Unknown risk names or codes fail the load.
RiskMapping load_risk_mapping(const std::string& json_text);
RiskMapping load_risk_mapping_file(const std::filesystem::path& path);

}  // namespace regcov
