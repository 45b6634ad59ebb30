#include "regcov/sampler.hpp"

#include "util.hpp"

#include <json.hpp>

#include <algorithm>
#include <random>

namespace regcov::sampler {

namespace {

using u128 = unsigned __int128;

// Largest-remainder apportionment of `amount` proportional to entry sizes.
// Remainders are compared exactly in integer arithmetic; ties break by name
// ascending. The sum of the result equals `amount` exactly.
std::map<std::string, std::size_t> apportion(
    const std::vector<std::pair<std::string, std::size_t>>& entries,
    std::size_t amount) {
  std::map<std::string, std::size_t> out;
  if (entries.empty()) return out;

  u128 total = 0;
  for (const auto& [name, size] : entries) total += size;

  struct Leftover {
    u128 remainder;
    const std::string* name;
  };
  std::vector<Leftover> leftovers;
  leftovers.reserve(entries.size());
  std::size_t assigned = 0;
  for (const auto& [name, size] : entries) {
    u128 numerator = static_cast<u128>(amount) * size;
    auto quotient = static_cast<std::size_t>(numerator / total);
    out[name] = quotient;
    assigned += quotient;
    leftovers.push_back({numerator % total, &name});
  }

  std::sort(leftovers.begin(), leftovers.end(), [](const Leftover& a, const Leftover& b) {
    if (a.remainder != b.remainder) return a.remainder > b.remainder;
    return *a.name < *b.name;
  });
  for (std::size_t i = 0; i < amount - assigned; ++i) out[*leftovers[i].name] += 1;
  return out;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n, rejection bound
  while (true) {
    std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

}  // namespace

Allocation allocate(const std::map<std::string, std::size_t>& strata_sizes,
                    std::size_t budget, std::size_t min_per_stratum) {
  if (budget < 1) throw InfeasibleBudgetError("budget must be at least 1");
  for (const auto& [name, size] : strata_sizes) {
    if (size == 0)
      throw InfeasibleBudgetError("stratum \"" + name + "\" has size 0");
  }
  if (strata_sizes.size() * min_per_stratum > budget)
    throw InfeasibleBudgetError(
        std::to_string(strata_sizes.size()) + " strata x minimum " +
        std::to_string(min_per_stratum) + " exceeds budget " + std::to_string(budget));

  std::map<std::string, std::size_t> floors, caps;
  for (const auto& [name, size] : strata_sizes) {
    floors[name] = std::min(min_per_stratum, size);
    caps[name] = size;
  }

  std::map<std::string, std::size_t> fixed;
  std::vector<std::pair<std::string, std::size_t>> active(strata_sizes.begin(),
                                                          strata_sizes.end());
  std::size_t fixed_sum = 0;
  std::map<std::string, std::size_t> targets;

  // Raise floor violations first (shrinking what the rest shares), then cap
  // at stratum size (growing what the rest shares); each phase re-apportions
  // until stable. Floors cannot re-break during capping because shares only
  // grow there.
  for (bool capping : {false, true}) {
    while (true) {
      targets = apportion(active, budget - fixed_sum);
      std::vector<std::pair<std::string, std::size_t>> keep;
      bool violated = false;
      for (const auto& entry : active) {
        const std::string& name = entry.first;
        std::size_t t = targets[name];
        if (!capping && t < floors[name]) {
          fixed[name] = floors[name];
          fixed_sum += floors[name];
          violated = true;
        } else if (capping && t > caps[name]) {
          fixed[name] = caps[name];
          fixed_sum += caps[name];
          violated = true;
        } else {
          keep.push_back(entry);
        }
      }
      active = std::move(keep);
      if (!violated || active.empty()) break;
    }
  }

  Allocation result;
  result.budget = budget;
  result.min_per_stratum = min_per_stratum;
  for (const auto& [name, t] : targets) result.targets[name] = t;
  for (const auto& [name, t] : fixed) result.targets[name] = t;
  return result;
}

Sample draw(const std::vector<QuestionRecord>& corpus, const Allocation& allocation,
            std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    strata[corpus[i].benchmark].push_back(i);

  for (const auto& [name, target] : allocation.targets) {
    auto it = strata.find(name);
    std::size_t size = it == strata.end() ? 0 : it->second.size();
    if (target > size)
      throw AllocationExceedsStratumError("stratum \"" + name + "\" has " +
                                          std::to_string(size) + " records, target is " +
                                          std::to_string(target));
  }

  Sample sample;
  sample.seed = seed;
  sample.allocation = allocation;
  for (const auto& [name, target] : allocation.targets) {
    if (target == 0) continue;
    std::vector<std::size_t> pool = strata[name];
    std::mt19937_64 rng(util::splitmix64(seed ^ util::fnv1a64(name)));
    for (std::size_t k = 0; k < target; ++k) {
      std::size_t j = k + uniform_below(rng, pool.size() - k);
      std::swap(pool[k], pool[j]);
    }
    pool.resize(target);
    std::sort(pool.begin(), pool.end());  // corpus order within the stratum
    for (std::size_t idx : pool) sample.records.push_back(corpus[idx]);
  }
  return sample;
}

std::string allocation_to_json(const Allocation& allocation) {
  nlohmann::ordered_json j;
  j["budget"] = allocation.budget;
  j["min_per_stratum"] = allocation.min_per_stratum;
  j["targets"] = allocation.targets;
  return j.dump(2) + "\n";
}

Allocation allocation_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("allocation is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("targets") || !doc["targets"].is_object())
    throw Error("allocation JSON must be an object with a \"targets\" object");
  Allocation a;
  a.budget = doc.value("budget", 0u);
  a.min_per_stratum = doc.value("min_per_stratum", 0u);
  for (const auto& [name, value] : doc["targets"].items()) {
    if (!value.is_number_unsigned())
      throw Error("allocation target for \"" + name + "\" must be a nonnegative integer");
    a.targets[name] = value.get<std::size_t>();
  }
  return a;
}

}  // namespace regcov::sampler
