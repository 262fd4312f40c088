#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "ensel/catalog.hpp"
#include "ensel/correctness.hpp"
#include "ensel/selection.hpp"

namespace ensel {

inline constexpr std::size_t kBruteForceMaxModels = 12;

struct Optimum {
  ModelSet set;
  double pa = 0.0;
};

// Exhaustive search over all 2^L subsets with c(S) <= B. Ties (PA within
// 1e-12) prefer fewer models, then the lexicographically smallest index list.
// PA(empty) = 0.
[[nodiscard]] Optimum brute_force_optimum(const SelectionProblem& problem,
                                          std::uint64_t threshold = kDefaultExactThreshold);

struct GuaranteeReport {
  std::string instance_digest;
  ModelSet optimum_set;
  double optimum_pa = 0.0;
  double plan_pa = 0.0;
  double bound_value = 0.0;
  bool satisfied = false;
};

// Stable hex digest of a problem (K, budget and every model row).
[[nodiscard]] std::string instance_digest(const SelectionProblem& problem);

// Re-evaluates the plan's PA terms exactly and checks
// PA(plan) >= guarantee_ratio(diagnostics, eps) * PA(optimum) - 1e-9.
[[nodiscard]] GuaranteeReport audit_guarantee(const SelectionProblem& problem, const SelectionPlan& plan,
                                              double epsilon, std::uint64_t threshold = kDefaultExactThreshold);

struct SubmodularityWitness {
  ModelSet smaller;  // S1
  ModelSet larger;   // S2, a superset of S1
  ModelIndex added = 0;
  double gain_smaller = 0.0;
  double gain_larger = 0.0;
};

// Looks for S1 ⊆ S2, l ∉ S2 with f(S1 + l) - f(S1) < f(S2 + l) - f(S2) - 1e-12.
// Exhaustive mode scans every pair (S2 ascending by bitmask, S1 over its
// submasks ascending, then l); otherwise only pairs with |S2 \ S1| = 1, which
// is enough to decide whether a violation exists. L is capped at 12.
[[nodiscard]] std::optional<SubmodularityWitness> submodularity_probe(const ClassProfile& profile,
                                                                      const SetFunction& objective, bool exhaustive);

[[nodiscard]] std::optional<SubmodularityWitness> submodularity_probe(const ClassProfile& profile, bool exhaustive);

void write_report_header(std::ostream& out);
void write_report_row(std::ostream& out, const GuaranteeReport& report, std::string_view method);

}  // namespace ensel
