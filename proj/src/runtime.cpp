#include "ensel/runtime.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ensel/csv.hpp"

namespace ensel {

Invocation simulated_invoke(const ClassProfile& profile, int truth, ModelIndex model, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Invocation out{truth, profile.cost(model)};
  if (unit(rng) >= profile.prob(model)) {
    std::uniform_int_distribution<int> wrong(0, profile.class_count - 2);
    int c = wrong(rng);
    out.predicted_class = c >= truth ? c + 1 : c;
  }
  return out;
}

SimulatedBackend::SimulatedBackend(ClassProfile profile, std::map<std::string, int, std::less<>> truths,
                                   std::uint64_t seed)
    : profile_(std::move(profile)), truths_(std::move(truths)), seed_(seed) {}

Invocation SimulatedBackend::invoke(std::string_view model_id, std::string_view query_id) {
  auto truth = truths_.find(query_id);
  if (truth == truths_.end())
    throw Error(ErrorKind::backend, fmt::format("simulated backend: no ground truth for query '{}'", query_id));
  auto model = profile_.index_of(model_id);
  if (!model) throw Error(ErrorKind::backend, fmt::format("simulated backend: unknown model '{}'", model_id));
  Rng rng(derive_seed(seed_, hash_string(query_id), hash_string(model_id)));
  return simulated_invoke(profile_, truth->second, *model, rng);
}

ReplayBackend::ReplayBackend(std::span<const ReplayEntry> entries) {
  for (const auto& e : entries) {
    auto [it, fresh] = table_.emplace(std::pair{e.query_id, e.model_id}, Invocation{e.predicted_class, e.actual_cost});
    if (!fresh)
      throw Error(ErrorKind::validation,
                  fmt::format("replay: duplicate row for query '{}', model '{}'", e.query_id, e.model_id));
  }
}

Invocation ReplayBackend::invoke(std::string_view model_id, std::string_view query_id) {
  auto it = table_.find(std::pair{std::string(query_id), std::string(model_id)});
  if (it == table_.end())
    throw Error(ErrorKind::backend,
                fmt::format("replay: no response for query '{}', model '{}'", query_id, model_id));
  return it->second;
}

std::vector<ReplayEntry> load_replay(const std::filesystem::path& path) {
  auto rows = csv::read_file(path);
  if (rows.empty() || rows[0].fields != std::vector<std::string>{"query_id", "model_id", "predicted_class", "actual_cost"})
    throw Error(ErrorKind::validation, "replay: expected header 'query_id,model_id,predicted_class,actual_cost'");
  std::vector<ReplayEntry> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.fields.size() != 4) throw Error(ErrorKind::validation, fmt::format("line {}: expected 4 fields", r.line));
    out.push_back({r.fields[0], r.fields[1], static_cast<int>(csv::parse_int(r.fields[2], r.line)),
                   csv::parse_double(r.fields[3], r.line)});
  }
  return out;
}

std::vector<TruthRow> load_truths(const std::filesystem::path& path) {
  auto rows = csv::read_file(path);
  if (rows.empty() || rows[0].fields != std::vector<std::string>{"query_id", "true_class"})
    throw Error(ErrorKind::validation, "truth table: expected header 'query_id,true_class'");
  std::vector<TruthRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.fields.size() != 2) throw Error(ErrorKind::validation, fmt::format("line {}: expected 2 fields", r.line));
    out.push_back({r.fields[0], static_cast<int>(csv::parse_int(r.fields[1], r.line))});
  }
  return out;
}

ModelSet invocation_order(const ClassProfile& profile, std::span<const ModelIndex> plan) {
  ModelSet order(plan.begin(), plan.end());
  std::sort(order.begin(), order.end(), [&](ModelIndex a, ModelIndex b) {
    if (profile.prob(a) != profile.prob(b)) return profile.prob(a) > profile.prob(b);
    if (profile.cost(a) != profile.cost(b)) return profile.cost(a) < profile.cost(b);
    return profile.id(a) < profile.id(b);
  });
  return order;
}

bool should_continue(const ClassProfile& profile, std::span<const ModelIndex> remaining, const BeliefTable& table) {
  if (remaining.empty()) return false;

  // Over nonempty subsets of the remaining models: the largest and smallest
  // total log weight one class could collect.
  double gain = 0.0, loss = 0.0;
  double max_single = -INFINITY, min_single = INFINITY;
  bool any_up = false, any_down = false;
  for (auto m : remaining) {
    const double w = log_vote_weight(profile, m);
    if (w > 0) {
      gain += w;
      any_up = true;
    } else if (w < 0) {
      loss += w;
      any_down = true;
    }
    max_single = std::max(max_single, w);
    min_single = std::min(min_single, w);
  }
  const double best_sum = any_up ? gain : max_single;
  const double worst_sum = any_down ? loss : min_single;
  const double fallback = log_default_belief(profile);

  const auto ties = table.tie_classes();
  const int leader = ties.front();
  const double floor = table.voted[leader] ? table.log_belief[leader] + loss : std::min(fallback, worst_sum);

  for (int c = 0; c < table.class_count(); ++c) {
    if (c == leader) continue;
    const double ceiling = table.voted[c] ? table.log_belief[c] + gain : std::max(fallback, best_sum);
    if (ceiling > floor - kTieTolerance) return true;
  }
  return false;
}

std::uint64_t prediction_seed(std::uint64_t seed, std::string_view query_id) noexcept {
  return derive_seed(seed, hash_string(query_id), 0x7072656469637421ULL);
}

namespace {

RunRecord execute(const SelectionPlan& plan, const ClassProfile& profile, ModelBackend& backend,
                  std::string_view query_id, std::uint64_t seed, bool adaptive) {
  if (plan.chosen.empty()) throw Error(ErrorKind::validation, "run: plan is empty");
  const auto order = invocation_order(profile, plan.chosen);
  RunRecord rec;
  rec.query_id = std::string(query_id);
  auto table = belief_table(profile, rec.observation);
  std::vector<double> paid(profile.size(), 0.0);
  auto spend_with = [&](ModelIndex m, double cost) {
    const double old = paid[m];
    paid[m] = cost;
    const double total = canonical_cost(paid);
    paid[m] = old;
    return total;
  };

  for (std::size_t next = 0; next < order.size(); ++next) {
    std::span<const ModelIndex> remaining(order.data() + next, order.size() - next);
    if (adaptive && !should_continue(profile, remaining, table)) break;
    const ModelIndex m = order[next];
    if (spend_with(m, profile.cost(m)) > plan.budget)
      throw RunError(ErrorKind::budget_exceeded,
                     fmt::format("query '{}': invoking '{}' would exceed budget {}", query_id, profile.id(m),
                                 plan.budget),
                     rec);
    Invocation got;
    try {
      got = backend.invoke(profile.id(m), query_id);
    } catch (const Error& e) {
      throw RunError(e.kind(), e.what(), rec);
    }
    if (got.predicted_class < 0 || got.predicted_class >= profile.class_count)
      throw RunError(ErrorKind::backend,
                     fmt::format("query '{}': model '{}' answered class {} outside [0, {})", query_id,
                                 profile.id(m), got.predicted_class, profile.class_count),
                     rec);
    if (spend_with(m, got.actual_cost) > plan.budget)
      throw RunError(ErrorKind::budget_exceeded,
                     fmt::format("query '{}': actual cost of '{}' exceeds budget {}", query_id, profile.id(m),
                                 plan.budget),
                     rec);
    paid[m] = got.actual_cost;
    rec.spent = canonical_cost(paid);
    rec.invoked.push_back(m);
    rec.observation.push_back({m, got.predicted_class});
    table = belief_table(profile, rec.observation);
  }
  Rng rng(prediction_seed(seed, query_id));
  rec.prediction = aggregate_prediction(table, rng);
  rec.saved = plan.planned_cost - rec.spent;
  return rec;
}

}  // namespace

RunRecord adaptive_run(const SelectionPlan& plan, const ClassProfile& profile, ModelBackend& backend,
                       std::string_view query_id, std::uint64_t seed) {
  return execute(plan, profile, backend, query_id, seed, true);
}

RunRecord full_run(const SelectionPlan& plan, const ClassProfile& profile, ModelBackend& backend,
                   std::string_view query_id, std::uint64_t seed) {
  return execute(plan, profile, backend, query_id, seed, false);
}

}  // namespace ensel
