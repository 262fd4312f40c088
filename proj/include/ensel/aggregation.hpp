#pragma once

#include <span>
#include <vector>

#include "ensel/catalog.hpp"
#include "ensel/random.hpp"

namespace ensel {

// Two log-beliefs closer than this are a tie.
inline constexpr double kTieTolerance = 1e-12;

struct Response {
  ModelIndex model = 0;
  int predicted_class = 0;
};

// Responses gathered so far for one query, in invocation order.
using Observation = std::vector<Response>;

// Throws if a model repeats or a class is outside [0, K).
void check_observation(const ClassProfile& profile, const Observation& obs);

// Per-class beliefs in the natural-log domain.
struct BeliefTable {
  std::vector<double> log_belief;
  std::vector<bool> voted;  // class received at least one response

  [[nodiscard]] int class_count() const noexcept { return static_cast<int>(log_belief.size()); }
  [[nodiscard]] double top() const;
  [[nodiscard]] std::vector<int> tie_classes() const;
};

// ln(p (K-1) / (1-p)): the factor one vote for a class multiplies its belief by.
[[nodiscard]] double log_vote_weight(const ClassProfile& profile, ModelIndex model);

// ln(p_min / (2 (1 - p_min))), p_min over every model of the profile.
[[nodiscard]] double log_default_belief(const ClassProfile& profile);

// Probability of seeing `obs` from `subset` when `assumed_truth` is the true class.
[[nodiscard]] double observation_probability(const ClassProfile& profile, std::span<const ModelIndex> subset,
                                             int assumed_truth, const Observation& obs);

[[nodiscard]] BeliefTable belief_table(const ClassProfile& profile, const Observation& obs);

// Argmax of the belief table; ties resolved uniformly with `rng`, which is
// only advanced when the tie set has more than one class.
[[nodiscard]] int aggregate_prediction(const BeliefTable& table, Rng& rng);

// Likelihood of class k being the truth given the observation of `subset`.
[[nodiscard]] double likelihood(const ClassProfile& profile, std::span<const ModelIndex> subset, int k,
                                const Observation& obs);

// Sum of log vote weights over `models`; 0 for the empty set.
[[nodiscard]] double potential_belief(const ClassProfile& profile, std::span<const ModelIndex> models);

}  // namespace ensel
