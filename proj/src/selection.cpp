#include "ensel/selection.hpp"

#include <algorithm>
#include <cmath>

#include "ensel/error.hpp"

namespace ensel {

ModelSet greedy(const SelectionProblem& problem, const SetFunction& objective) {
  const auto& profile = problem.profile;
  ModelSet chosen;
  std::vector<ModelIndex> pool(profile.size());
  for (ModelIndex i = 0; i < pool.size(); ++i) pool[i] = i;
  std::vector<double> costs(profile.size(), 0.0);
  double spent = 0.0;

  while (spent < problem.budget && !pool.empty()) {
    const double base = objective(chosen);
    ModelSet trial = chosen;
    trial.push_back(0);
    std::size_t best_pos = 0;
    double best_ratio = -INFINITY;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      const ModelIndex l = pool[j];
      trial.back() = l;
      const double ratio = (objective(trial) - base) / profile.cost(l);
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best_pos = j;
      } else if (ratio == best_ratio) {
        const ModelIndex cur = pool[best_pos];
        const double a = profile.prob(l) / profile.cost(l);
        const double b = profile.prob(cur) / profile.cost(cur);
        if (a > b || (a == b && l < cur)) best_pos = j;
      }
    }
    const ModelIndex pick = pool[best_pos];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best_pos));
    costs[pick] = profile.cost(pick);
    const double with_pick = canonical_cost(costs);
    if (with_pick > problem.budget) {
      costs[pick] = 0.0;
      continue;
    }
    chosen.push_back(pick);
    spent = with_pick;
  }
  return chosen;
}

std::optional<ModelIndex> best_single_model(const SelectionProblem& problem) {
  const auto& profile = problem.profile;
  std::optional<ModelIndex> best;
  for (ModelIndex i = 0; i < profile.size(); ++i) {
    if (profile.cost(i) > problem.budget) continue;
    if (!best || profile.prob(i) > profile.prob(*best) ||
        (profile.prob(i) == profile.prob(*best) && profile.cost(i) < profile.cost(*best)))
      best = i;
  }
  return best;
}

SelectionPlan surrogate_greedy(const SelectionProblem& problem, PaEvaluator& pa, const SetFunction& gamma) {
  const auto& profile = problem.profile;
  const auto single = best_single_model(problem);
  if (!single) throw Error(ErrorKind::infeasible, "no feasible model: every model costs more than the budget");

  SetFunction surrogate = gamma ? gamma : SetFunction([&profile](std::span<const ModelIndex> s) {
    return surrogate_gamma(profile, s);
  });

  SelectionDiagnostics diag;
  diag.best_single = single;
  diag.p_star = profile.prob(*single);
  diag.s1 = greedy(problem, pa.as_function());
  diag.s2 = greedy(problem, surrogate);
  diag.pa_s1 = diag.s1.empty() ? 0.0 : pa.evaluate(diag.s1).value;
  diag.pa_s2 = diag.s2.empty() ? 0.0 : pa.evaluate(diag.s2).value;
  diag.gamma_s2 = surrogate(diag.s2);
  diag.guarantee_ratio = guarantee_ratio(diag, 0.0);

  SelectionPlan plan;
  plan.budget = problem.budget;
  plan.chosen = {*single};
  double best = diag.p_star;
  if (diag.pa_s1 > best) {
    best = diag.pa_s1;
    plan.chosen = diag.s1;
  }
  if (diag.pa_s2 > best) {
    best = diag.pa_s2;
    plan.chosen = diag.s2;
  }
  plan.planned_cost = profile.total_cost(plan.chosen);
  plan.pa_estimate = pa.evaluate(plan.chosen);
  plan.diagnostics = std::move(diag);
  return plan;
}

double guarantee_ratio(const SelectionDiagnostics& d, double epsilon) {
  const double num = std::max({d.pa_s1, d.pa_s2, d.p_star});
  const double den = std::max(d.gamma_s2, d.p_star);
  if (!(den > 0.0)) return 0.0;
  return std::clamp((num / den - epsilon) * kKnapsackGreedyFactor, 0.0, 1.0);
}

SelectionPlan plan_thrift(const SelectionProblem& problem, double epsilon, double delta, std::uint64_t seed) {
  const auto single = best_single_model(problem);
  if (!single) throw Error(ErrorKind::infeasible, "no feasible model: every model costs more than the budget");
  const auto theta = required_samples(epsilon, delta, problem.profile.prob(*single), problem.profile.size());
  auto pa = PaEvaluator::monte_carlo(problem.profile, theta, seed);
  return surrogate_greedy(problem, pa);
}

SelectionPlan plan_exact(const SelectionProblem& problem, std::uint64_t threshold) {
  auto pa = PaEvaluator::exact(problem.profile, threshold);
  return surrogate_greedy(problem, pa);
}

}  // namespace ensel
