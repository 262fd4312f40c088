#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ensel/aggregation.hpp"
#include "ensel/catalog.hpp"
#include "ensel/error.hpp"
#include "ensel/random.hpp"
#include "ensel/selection.hpp"

namespace ensel {

struct Invocation {
  int predicted_class = 0;
  double actual_cost = 0.0;
};

class ModelBackend {
public:
  virtual ~ModelBackend() = default;
  virtual Invocation invoke(std::string_view model_id, std::string_view query_id) = 0;
};

// Correct with probability p, otherwise uniform over the K-1 wrong classes; costs b.
[[nodiscard]] Invocation simulated_invoke(const ClassProfile& profile, int truth, ModelIndex model, Rng& rng);

// Answers from the profile's probabilities. The stream for a (query, model)
// pair is derived from (seed, query id, model id), so a response does not
// depend on which other models were asked first.
class SimulatedBackend final : public ModelBackend {
public:
  SimulatedBackend(ClassProfile profile, std::map<std::string, int, std::less<>> truths, std::uint64_t seed);
  Invocation invoke(std::string_view model_id, std::string_view query_id) override;

private:
  ClassProfile profile_;
  std::map<std::string, int, std::less<>> truths_;
  std::uint64_t seed_;
};

struct ReplayEntry {
  std::string query_id;
  std::string model_id;
  int predicted_class = 0;
  double actual_cost = 0.0;
};

// Recorded responses; a missing (query, model) pair is an error.
class ReplayBackend final : public ModelBackend {
public:
  explicit ReplayBackend(std::span<const ReplayEntry> entries);
  Invocation invoke(std::string_view model_id, std::string_view query_id) override;

private:
  std::map<std::pair<std::string, std::string>, Invocation, std::less<>> table_;
};

[[nodiscard]] std::vector<ReplayEntry> load_replay(const std::filesystem::path& path);

struct TruthRow {
  std::string query_id;
  int true_class = 0;
};

[[nodiscard]] std::vector<TruthRow> load_truths(const std::filesystem::path& path);

struct RunRecord {
  std::string query_id;
  ModelSet invoked;
  Observation observation;
  int prediction = 0;
  double spent = 0.0;
  double saved = 0.0;
};

// Raised when a run stops before completion; carries what was gathered.
class RunError : public Error {
public:
  RunError(ErrorKind kind, const std::string& what, RunRecord partial)
      : Error(kind, what), partial_(std::move(partial)) {}
  [[nodiscard]] const RunRecord& partial() const noexcept { return partial_; }

private:
  RunRecord partial_;
};

// Plan models by descending p, then ascending cost, then id.
[[nodiscard]] ModelSet invocation_order(const ClassProfile& profile, std::span<const ModelIndex> plan);

// True while the models in `remaining` could still change the leading class
// of `table`. The bound assumes the worst case for the leader: every
// remaining model with weight above 1 votes for one challenger and every
// model with weight below 1 votes for the leader. With all weights above 1
// and voted challengers this is F(T) H2 > H1.
[[nodiscard]] bool should_continue(const ClassProfile& profile, std::span<const ModelIndex> remaining,
                                   const BeliefTable& table);

// Invokes plan models in invocation order while should_continue holds.
[[nodiscard]] RunRecord adaptive_run(const SelectionPlan& plan, const ClassProfile& profile, ModelBackend& backend,
                                     std::string_view query_id, std::uint64_t seed);

// Invokes every plan model; the reference the adaptive run must agree with.
[[nodiscard]] RunRecord full_run(const SelectionPlan& plan, const ClassProfile& profile, ModelBackend& backend,
                                 std::string_view query_id, std::uint64_t seed);

// Seed of the tie-break stream used for a query's final prediction.
[[nodiscard]] std::uint64_t prediction_seed(std::uint64_t seed, std::string_view query_id) noexcept;

}  // namespace ensel
