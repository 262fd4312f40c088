#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "ensel/catalog.hpp"

namespace ensel {

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct CountRange {
  int lo = 0;
  int hi = 0;
};

struct InstanceSpec {
  std::uint64_t seed = 1;
  std::size_t instances = 20;
  std::size_t queries = 200;
  CountRange models{4, 8};
  CountRange classes{2, 4};
  RealRange prob{0.55, 0.95};
  RealRange cost{1e-6, 4e-5};
};

// Throws unless every range is nonempty and ordered and probabilities lie in (0, 1).
void check_instance_spec(const InstanceSpec& spec);

// JSON object; every key optional: seed, instances, queries, and two-element
// arrays models, classes, prob, cost.
[[nodiscard]] InstanceSpec load_instance_spec(const std::filesystem::path& path);

struct SyntheticInstance {
  ClassProfile profile;
  std::vector<int> truths;  // one per query, uniform over K
};

// Deterministic in spec.seed.
[[nodiscard]] SyntheticInstance gen_instance(const InstanceSpec& spec);

// spec.instances instances; instance i uses seed derive_seed(spec.seed, i).
[[nodiscard]] std::vector<SyntheticInstance> gen_instances(const InstanceSpec& spec);

enum class Method { thrift, surgreedy_full, greedy, best_single, random_feasible };

inline constexpr std::array<Method, 5> kAllMethods{Method::thrift, Method::surgreedy_full, Method::greedy,
                                                   Method::best_single, Method::random_feasible};

inline constexpr std::array<double, 5> kDefaultBudgets{1e-5, 5e-5, 10e-5, 50e-5, 100e-5};

[[nodiscard]] std::string_view to_string(Method method) noexcept;

struct SweepRow {
  double budget = 0.0;
  Method method = Method::thrift;
  double accuracy = 0.0;
  double mean_spent = 0.0;
  double mean_saved = 0.0;
  std::size_t instances = 0;
  std::size_t queries = 0;
};

struct SweepConfig {
  std::uint64_t seed = 1;
  double epsilon = 0.1;
  double delta = 0.01;
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
};

// Side measurements gathered while sweeping.
struct SweepStats {
  std::uint64_t queries_checked = 0;           // every simulated query, all methods
  double max_spend_ratio = 0.0;                // max over queries of spent / budget
  std::uint64_t thrift_prediction_mismatches = 0;  // thrift vs surgreedy_full on the same query
  std::vector<double> thrift_saving_fraction;  // per (instance, budget) with |plan| >= 2: saved / planned
};

// Plans every (instance, budget, method) cell and simulates the instance's
// queries through the runtime. Responses for a query depend only on
// (seed, instance, query), so methods and budgets see identical model answers.
// A method with no affordable model guesses uniformly. Rows are sorted by
// budget, then method order.
[[nodiscard]] std::vector<SweepRow> run_sweep(const std::vector<SyntheticInstance>& instances,
                                              std::span<const double> budgets, const SweepConfig& config,
                                              SweepStats* stats = nullptr);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace ensel
