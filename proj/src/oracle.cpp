#include "ensel/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include <fmt/format.h>

#include "ensel/error.hpp"
#include "ensel/random.hpp"

namespace ensel {
namespace {

ModelSet from_mask(std::uint32_t mask) {
  ModelSet s;
  for (ModelIndex i = 0; mask; ++i, mask >>= 1)
    if (mask & 1u) s.push_back(i);
  return s;
}

void guard_size(const ClassProfile& profile) {
  if (profile.size() > kBruteForceMaxModels)
    throw Error(ErrorKind::size_guard, fmt::format("instance too large: L={} exceeds {} models for exhaustive search",
                                                   profile.size(), kBruteForceMaxModels));
}

}  // namespace

Optimum brute_force_optimum(const SelectionProblem& problem, std::uint64_t threshold) {
  const auto& profile = problem.profile;
  guard_size(profile);
  const auto l = static_cast<std::uint32_t>(profile.size());
  Optimum best;
  for (std::uint32_t mask = 1; mask < (1u << l); ++mask) {
    auto set = from_mask(mask);
    if (profile.total_cost(set) > problem.budget) continue;
    const double pa = exact_pa(profile, set, threshold).value;
    // PA values within 1e-12 count as equal so rounding cannot outvote the tie-break
    bool better = best.set.empty() || pa > best.pa + 1e-12;
    if (!better && std::abs(pa - best.pa) <= 1e-12)
      better = set.size() < best.set.size() || (set.size() == best.set.size() && set < best.set);
    if (better) best = {std::move(set), pa};
  }
  return best;
}

std::string instance_digest(const SelectionProblem& problem) {
  std::uint64_t h = hash_string(fmt::format("K={};B={}", problem.profile.class_count, problem.budget));
  for (const auto& m : problem.profile.models)
    h = mix64(h ^ hash_string(fmt::format("{},{},{}", m.model_id, m.success_prob, m.query_cost)));
  return fmt::format("{:016x}", h);
}

GuaranteeReport audit_guarantee(const SelectionProblem& problem, const SelectionPlan& plan, double epsilon,
                                std::uint64_t threshold) {
  const auto& profile = problem.profile;
  auto opt = brute_force_optimum(problem, threshold);
  SelectionDiagnostics exact = plan.diagnostics;
  exact.pa_s1 = exact_pa(profile, exact.s1, threshold).value;
  exact.pa_s2 = exact_pa(profile, exact.s2, threshold).value;
  exact.gamma_s2 = surrogate_gamma(profile, exact.s2);
  if (exact.best_single) exact.p_star = profile.prob(*exact.best_single);

  GuaranteeReport r;
  r.instance_digest = instance_digest(problem);
  r.optimum_set = opt.set;
  r.optimum_pa = opt.pa;
  r.plan_pa = exact_pa(profile, plan.chosen, threshold).value;
  r.bound_value = guarantee_ratio(exact, epsilon) * opt.pa;
  r.satisfied = r.plan_pa >= r.bound_value - 1e-9;
  return r;
}

std::optional<SubmodularityWitness> submodularity_probe(const ClassProfile& profile, const SetFunction& objective,
                                                        bool exhaustive) {
  guard_size(profile);
  const auto l = static_cast<std::uint32_t>(profile.size());
  const std::uint32_t full = 1u << l;
  std::vector<double> value(full);
  for (std::uint32_t m = 0; m < full; ++m) value[m] = objective(from_mask(m));

  auto check = [&](std::uint32_t small, std::uint32_t large, ModelIndex add) -> std::optional<SubmodularityWitness> {
    const std::uint32_t bit = 1u << add;
    const double g1 = value[small | bit] - value[small];
    const double g2 = value[large | bit] - value[large];
    if (g1 < g2 - 1e-12) return SubmodularityWitness{from_mask(small), from_mask(large), add, g1, g2};
    return std::nullopt;
  };

  for (std::uint32_t large = 0; large < full; ++large) {
    if (exhaustive) {
      // submasks of `large` in ascending order
      std::vector<std::uint32_t> subs;
      for (std::uint32_t s = large;; s = (s - 1) & large) {
        subs.push_back(s);
        if (s == 0) break;
      }
      std::sort(subs.begin(), subs.end());
      for (auto small : subs)
        for (ModelIndex add = 0; add < l; ++add)
          if (!(large & (1u << add)))
            if (auto w = check(small, large, add)) return w;
    } else {
      for (ModelIndex drop = 0; drop < l; ++drop) {
        if (!(large & (1u << drop))) continue;
        const std::uint32_t small = large & ~(1u << drop);
        for (ModelIndex add = 0; add < l; ++add)
          if (!(large & (1u << add)))
            if (auto w = check(small, large, add)) return w;
      }
    }
  }
  return std::nullopt;
}

std::optional<SubmodularityWitness> submodularity_probe(const ClassProfile& profile, bool exhaustive) {
  return submodularity_probe(
      profile, [&profile](std::span<const ModelIndex> s) { return exact_pa(profile, s).value; }, exhaustive);
}

void write_report_header(std::ostream& out) {
  out << "instance_digest,method,optimum_pa,plan_pa,bound_value,satisfied\n";
}

void write_report_row(std::ostream& out, const GuaranteeReport& r, std::string_view method) {
  out << fmt::format("{},{},{:.12f},{:.12f},{:.12f},{}\n", r.instance_digest, method, r.optimum_pa, r.plan_pa,
                     r.bound_value, r.satisfied ? "true" : "false");
}

}  // namespace ensel
