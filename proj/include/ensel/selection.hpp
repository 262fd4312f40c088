#pragma once

#include <cstdint>
#include <optional>

#include "ensel/catalog.hpp"
#include "ensel/correctness.hpp"

namespace ensel {

struct SelectionDiagnostics {
  ModelSet s1;  // greedy under PA
  ModelSet s2;  // greedy under the surrogate
  std::optional<ModelIndex> best_single;
  double p_star = 0.0;
  double pa_s1 = 0.0;
  double pa_s2 = 0.0;
  double gamma_s2 = 0.0;
  double guarantee_ratio = 0.0;  // epsilon = 0
};

struct SelectionPlan {
  ModelSet chosen;  // selection order
  double budget = 0.0;
  double planned_cost = 0.0;
  PaEstimate pa_estimate;
  SelectionDiagnostics diagnostics;
};

// Cost-ratio greedy. Each round takes the model maximizing
// (f(S + l) - f(S)) / b_l over the remaining pool, breaking exact ties by the
// largest p_l / b_l and then the lowest index. The pick leaves the pool
// whether or not it fits; it is added only if it fits the remaining budget.
[[nodiscard]] ModelSet greedy(const SelectionProblem& problem, const SetFunction& objective);

// Best affordable single model: highest p, then lowest cost, then lowest index.
[[nodiscard]] std::optional<ModelIndex> best_single_model(const SelectionProblem& problem);

// Best of {best single, greedy(PA), greedy(gamma)} by PA. `gamma` defaults to
// surrogate_gamma. Throws ErrorKind::infeasible when no model is affordable.
[[nodiscard]] SelectionPlan surrogate_greedy(const SelectionProblem& problem, PaEvaluator& pa,
                                             const SetFunction& gamma = {});

// (max{PA(S1), PA(S2), p*} / max{gamma(S2), p*} - epsilon) (1 - 1/sqrt(e)), clamped to [0, 1].
[[nodiscard]] double guarantee_ratio(const SelectionDiagnostics& diagnostics, double epsilon);

inline constexpr double kKnapsackGreedyFactor = 0.39346934028736658;  // 1 - e^{-1/2}

// Surrogate greedy with PA estimated from required_samples(eps, delta, p*, L)
// Monte Carlo simulations per evaluated subset.
[[nodiscard]] SelectionPlan plan_thrift(const SelectionProblem& problem, double epsilon, double delta,
                                        std::uint64_t seed);

[[nodiscard]] SelectionPlan plan_exact(const SelectionProblem& problem,
                                       std::uint64_t threshold = kDefaultExactThreshold);

}  // namespace ensel
