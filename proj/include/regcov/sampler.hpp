#pragma once
// Stratified gold-sample planning: largest-remainder apportionment with a
// per-stratum floor, then a seeded uniform draw within each stratum.

#include "regcov/corpus.hpp"
#include "regcov/error.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace regcov::sampler {

class InfeasibleBudgetError : public Error {
 public:
  using Error::Error;
};

class AllocationExceedsStratumError : public Error {
 public:
  using Error::Error;
};

struct Allocation {
  std::map<std::string, std::size_t> targets;  // benchmark -> sample count
  std::size_t budget = 0;
  std::size_t min_per_stratum = 0;

  bool operator==(const Allocation&) const = default;
};

struct Sample {
  std::vector<QuestionRecord> records;
  std::uint64_t seed = 0;
  Allocation allocation;
};

// Proportional allocation of `budget` across strata:
//   1. provisional targets by largest-remainder apportionment of the budget,
//   2. strata below min_per_stratum raised to min(min_per_stratum, size),
//   3. the remaining budget re-apportioned among the un-raised strata,
//   4. targets capped at stratum size.
// Remainder ties break by benchmark name ascending, so the result does not
// depend on insertion order. Throws InfeasibleBudget when budget < 1, any
// size is zero, or (number of strata) x min_per_stratum exceeds the budget.
Allocation allocate(const std::map<std::string, std::size_t>& strata_sizes,
                    std::size_t budget, std::size_t min_per_stratum);

// Selects allocation.targets[b] records per benchmark uniformly without
// replacement, using a generator seeded by (seed, benchmark name); identical
// inputs give identical samples. Within a stratum the selected records keep
// their corpus order; strata are emitted in benchmark-name order.
Sample draw(const std::vector<QuestionRecord>& corpus, const Allocation& allocation,
            std::uint64_t seed);

// Sidecar serialization of an allocation (targets plus parameters).
std::string allocation_to_json(const Allocation& allocation);
Allocation allocation_from_json(const std::string& json_text);

}  // namespace regcov::sampler
