#include "ensel/aggregation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ensel/error.hpp"

namespace ensel {
namespace {

void check_covers(std::span<const ModelIndex> subset, const Observation& obs) {
  bool ok = subset.size() == obs.size();
  for (std::size_t i = 0; ok && i < obs.size(); ++i)
    ok = std::find(subset.begin(), subset.end(), obs[i].model) != subset.end();
  if (!ok) throw Error(ErrorKind::validation, "observation does not cover exactly the given subset");
}

}  // namespace

void check_observation(const ClassProfile& profile, const Observation& obs) {
  std::vector<bool> seen(profile.size(), false);
  for (const auto& r : obs) {
    if (r.model >= profile.size())
      throw Error(ErrorKind::validation, fmt::format("observation: model index {} out of range", r.model));
    if (seen[r.model])
      throw Error(ErrorKind::validation, fmt::format("observation: model '{}' repeated", profile.id(r.model)));
    seen[r.model] = true;
    if (r.predicted_class < 0 || r.predicted_class >= profile.class_count)
      throw Error(ErrorKind::validation, fmt::format("observation: class {} outside [0, {})", r.predicted_class,
                                                     profile.class_count));
  }
}

double BeliefTable::top() const { return *std::max_element(log_belief.begin(), log_belief.end()); }

std::vector<int> BeliefTable::tie_classes() const {
  const double best = top();
  std::vector<int> ties;
  for (int k = 0; k < class_count(); ++k)
    if (log_belief[k] >= best - kTieTolerance) ties.push_back(k);
  return ties;
}

double log_vote_weight(const ClassProfile& profile, ModelIndex model) {
  const double p = profile.prob(model);
  return std::log(p * (profile.class_count - 1) / (1.0 - p));
}

double log_default_belief(const ClassProfile& profile) {
  const double p = profile.min_prob();
  return std::log(p / (2.0 * (1.0 - p)));
}

double observation_probability(const ClassProfile& profile, std::span<const ModelIndex> subset, int assumed_truth,
                               const Observation& obs) {
  check_observation(profile, obs);
  check_covers(subset, obs);
  double prob = 1.0;
  for (const auto& r : obs) {
    const double p = profile.prob(r.model);
    prob *= r.predicted_class == assumed_truth ? p : (1.0 - p) / (profile.class_count - 1);
  }
  return prob;
}

BeliefTable belief_table(const ClassProfile& profile, const Observation& obs) {
  check_observation(profile, obs);
  const auto k = static_cast<std::size_t>(profile.class_count);
  BeliefTable table{std::vector<double>(k, 0.0), std::vector<bool>(k, false)};
  for (const auto& r : obs) {
    table.log_belief[r.predicted_class] += log_vote_weight(profile, r.model);
    table.voted[r.predicted_class] = true;
  }
  const double fallback = log_default_belief(profile);
  for (std::size_t c = 0; c < k; ++c)
    if (!table.voted[c]) table.log_belief[c] = fallback;
  return table;
}

int aggregate_prediction(const BeliefTable& table, Rng& rng) {
  auto ties = table.tie_classes();
  if (ties.size() == 1) return ties.front();
  std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
  return ties[pick(rng)];
}

double likelihood(const ClassProfile& profile, std::span<const ModelIndex> subset, int k, const Observation& obs) {
  return observation_probability(profile, subset, k, obs);
}

double potential_belief(const ClassProfile& profile, std::span<const ModelIndex> models) {
  double sum = 0.0;
  for (auto m : models) sum += log_vote_weight(profile, m);
  return sum;
}

}  // namespace ensel
