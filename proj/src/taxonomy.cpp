#include "regcov/taxonomy.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace regcov {

namespace {

std::vector<CategoryDef> make_categories() {
  std::vector<CategoryDef> defs;
  defs.reserve(22);
  auto cap = [&](int i, const char* name, const char* desc) {
    defs.push_back({CategoryCode::capability(i), name, desc});
  };
  auto prop = [&](int i, const char* name, const char* desc) {
    defs.push_back({CategoryCode::propensity(i), name, desc});
  };

  cap(1, "Offensive cyber capabilities",
      "The ability to identify vulnerabilities, generate exploits, or assist in cyberattacks");
  cap(2, "CBRN capabilities",
      "Knowledge and reasoning about chemical, biological, radiological, or nuclear threats");
  cap(3, "Manipulate, persuade, or deceive",
      "Capacity to influence human beliefs or behaviors through sophisticated argumentation or deception");
  cap(4, "Autonomy",
      "Ability to operate independently, make decisions, or pursue goals without human oversight");
  cap(5, "Adaptively learn new tasks",
      "Capability to acquire new skills or knowledge through interaction or experience");
  cap(6, "Long-horizon planning, forecasting, or strategising",
      "Capacity for complex multi-step reasoning and strategic thinking");
  cap(7, "Self-reasoning",
      "Ability to reflect on and reason about its own processes, knowledge, or limitations");
  cap(8, "Evade human oversight",
      "Potential to obscure its operations or mislead human monitors");
  cap(9, "Self-replicate, self-improve, or modify own implementation",
      "Capability to alter its own code or create copies");
  cap(10, "Automated AI research and development",
      "Ability to contribute to AI advancement autonomously");
  cap(11, "Process multiple modalities",
      "Integration of text, image, audio, or other data types");
  cap(12, "Use tools, including computer use",
      "Capability to interact with external systems or APIs");
  cap(13, "Control physical systems",
      "Ability to operate robots, vehicles, or other physical devices");

  prop(1, "Misalignment with human intent or values",
       "Tendency to interpret or pursue goals in ways conflicting with human intentions");
  prop(2, "Tendency to deploy capabilities in harmful ways",
       "Propensity to apply capabilities toward harmful outcomes");
  prop(3, "Tendency to hallucinate",
       "Generation of false or unsupported information presented as fact");
  prop(4, "Discriminatory bias",
       "Systematic unfair treatment of individuals or groups");
  prop(5, "Lack of performance reliability",
       "Inconsistent or unpredictable behavior across similar inputs");
  prop(6, "Lawlessness",
       "Tendency to suggest or facilitate illegal activities");
  prop(7, "Goal-pursuing, harmful resistance, or power-seeking",
       "Problematic agency behaviors including resistance to goal modification");
  prop(8, "Colluding with other AI models/systems",
       "Coordination with other systems against human interests");
  prop(9, "Mis-coordination or conflict with other AI models",
       "Harmful interactions between systems");

  return defs;
}

CodeSet codes(std::initializer_list<const char*> texts) {
  CodeSet set;
  for (const char* t : texts) set.insert(parse_code(t));
  return set;
}

}  // namespace

std::string_view kind_name(CategoryKind kind) {
  return kind == CategoryKind::Capability ? "capability" : "propensity";
}

CategoryCode CategoryCode::capability(int index) {
  if (index < 1 || index > 13)
    throw UnknownCodeError("capability index out of range: " + std::to_string(index));
  return CategoryCode(CategoryKind::Capability, index);
}

CategoryCode CategoryCode::propensity(int index) {
  if (index < 1 || index > 9)
    throw UnknownCodeError("propensity index out of range: " + std::to_string(index));
  return CategoryCode(CategoryKind::Propensity, index);
}

std::string CategoryCode::text() const {
  return (kind_ == CategoryKind::Capability ? "C" : "P") + std::to_string(index_);
}

std::optional<CategoryCode> try_parse_code(std::string_view text) noexcept {
  if (text.size() < 2 || text.size() > 3) return std::nullopt;
  if (text[0] != 'C' && text[0] != 'P') return std::nullopt;
  if (text[1] == '0') return std::nullopt;  // no padding: "C06" is invalid
  int index = 0;
  for (std::size_t i = 1; i < text.size(); ++i) {
    if (text[i] < '0' || text[i] > '9') return std::nullopt;
    index = index * 10 + (text[i] - '0');
  }
  int limit = text[0] == 'C' ? 13 : 9;
  if (index < 1 || index > limit) return std::nullopt;
  return text[0] == 'C' ? CategoryCode::capability(index)
                        : CategoryCode::propensity(index);
}

CategoryCode parse_code(std::string_view text) {
  if (auto code = try_parse_code(text)) return *code;
  throw UnknownCodeError("unknown category code: \"" + std::string(text) + "\"");
}

const std::vector<CategoryDef>& all_categories() {
  static const std::vector<CategoryDef> defs = make_categories();
  return defs;
}

const CategoryDef& category(CategoryCode code) {
  const auto& defs = all_categories();
  std::size_t offset = code.kind() == CategoryKind::Capability
                           ? static_cast<std::size_t>(code.index() - 1)
                           : 13 + static_cast<std::size_t>(code.index() - 1);
  return defs[offset];
}

const CategoryDef& category_by_name(std::string_view name) {
  for (const auto& def : all_categories()) {
    if (def.name == name) return def;
  }
  throw UnknownCodeError("unknown category name: \"" + std::string(name) + "\"");
}

std::size_t category_count(CategoryKind kind) {
  return kind == CategoryKind::Capability ? 13 : 9;
}

std::vector<CategoryCode> all_codes(CategoryKind kind) {
  std::vector<CategoryCode> out;
  out.reserve(category_count(kind));
  for (const auto& def : all_categories()) {
    if (def.code.kind() == kind) out.push_back(def.code);
  }
  return out;
}

std::string_view risk_name(SystemicRisk risk) {
  switch (risk) {
    case SystemicRisk::HarmfulManipulation: return "Harmful Manipulation";
    case SystemicRisk::CyberOffence: return "Cyber Offence";
    case SystemicRisk::CbrnRisks: return "CBRN Risks";
    case SystemicRisk::LossOfControl: return "Loss of Control";
  }
  throw UnknownRiskError("invalid risk value");
}

SystemicRisk parse_risk(std::string_view name) {
  for (SystemicRisk risk : kAllRisks) {
    if (risk_name(risk) == name) return risk;
  }
  throw UnknownRiskError("unknown systemic risk: \"" + std::string(name) + "\"");
}

RiskMapping default_risk_mapping() {
  RiskMapping mapping;
  mapping[SystemicRisk::HarmfulManipulation] = codes({"P3", "P4", "C3", "C11", "P1"});
  mapping[SystemicRisk::CyberOffence] = codes({"C1", "C12", "P6", "P7", "C4"});
  mapping[SystemicRisk::CbrnRisks] = codes({"C2", "P2", "P6", "C5"});
  mapping[SystemicRisk::LossOfControl] =
      codes({"C4", "C7", "C8", "C9", "C10", "P1", "P7"});
  return mapping;
}

CodeSet risk_components(SystemicRisk risk) {
  return default_risk_mapping().at(risk);
}

RiskMapping load_risk_mapping(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("risk mapping is not valid JSON: ") + e.what());
  }
  if (!doc.is_object())
    throw Error("risk mapping must be a JSON object of {risk name: [codes]}");

  RiskMapping mapping = default_risk_mapping();
  for (const auto& [key, value] : doc.items()) {
    SystemicRisk risk = parse_risk(key);
    if (!value.is_array())
      throw Error("risk mapping entry for \"" + key + "\" must be an array of codes");
    CodeSet components;
    for (const auto& item : value) {
      if (!item.is_string())
        throw Error("risk mapping entry for \"" + key + "\" contains a non-string code");
      components.insert(parse_code(item.get<std::string>()));
    }
    mapping[risk] = std::move(components);
  }
  return mapping;
}

RiskMapping load_risk_mapping_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open risk mapping file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_risk_mapping(buf.str());
}

}  // namespace regcov
