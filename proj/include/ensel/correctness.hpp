#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>

#include "ensel/catalog.hpp"

namespace ensel {

inline constexpr std::uint64_t kDefaultExactThreshold = 2'000'000;

enum class PaMethod { exact, monte_carlo };

[[nodiscard]] const char* to_string(PaMethod method) noexcept;

// Correctness probability of a model set, with how it was obtained.
struct PaEstimate {
  double value = 0.0;
  PaMethod method = PaMethod::exact;
  std::uint64_t samples_used = 0;
  std::uint64_t seed = 0;
};

// Enumerates all K^|subset| observations. Tied observations contribute
// Pr[obs] / |tie set| when the truth is among the tied classes. The empty
// set scores 0. Throws ErrorKind::size_guard above `threshold` observations.
[[nodiscard]] PaEstimate exact_pa(const ClassProfile& profile, std::span<const ModelIndex> subset,
                                  std::uint64_t threshold = kDefaultExactThreshold, int assumed_truth = 0);

// Fraction of `samples` simulated queries (truth = class 0) that aggregate to
// the truth. Deterministic in `seed`; batches run on worker threads with
// per-batch seeds, so the result does not depend on scheduling.
[[nodiscard]] PaEstimate mc_pa(const ClassProfile& profile, std::span<const ModelIndex> subset,
                               std::uint64_t samples, std::uint64_t seed);

// ceil((8 + 2 eps) / (eps^2 p*) * ln(2 L^2 / delta))
[[nodiscard]] std::uint64_t required_samples(double epsilon, double delta, double p_star, std::size_t model_count);

// 1 - prod(1 - p) over the subset; 0 for the empty set.
[[nodiscard]] double surrogate_gamma(const ClassProfile& profile, std::span<const ModelIndex> subset);

using SetFunction = std::function<double(std::span<const ModelIndex>)>;

// Memoizing PA evaluator over one profile. The Monte Carlo variant seeds each
// subset from (master seed, subset digest), so repeated evaluations of the
// same set agree even without the cache.
class PaEvaluator {
public:
  static PaEvaluator exact(ClassProfile profile, std::uint64_t threshold = kDefaultExactThreshold);
  static PaEvaluator monte_carlo(ClassProfile profile, std::uint64_t samples, std::uint64_t master_seed);

  [[nodiscard]] PaEstimate evaluate(std::span<const ModelIndex> subset);
  [[nodiscard]] double operator()(std::span<const ModelIndex> subset) { return evaluate(subset).value; }

  [[nodiscard]] const ClassProfile& profile() const noexcept { return profile_; }
  [[nodiscard]] PaMethod method() const noexcept { return method_; }
  [[nodiscard]] std::uint64_t samples() const noexcept { return samples_; }
  [[nodiscard]] std::uint64_t master_seed() const noexcept { return seed_; }
  [[nodiscard]] std::size_t evaluations() const noexcept { return evaluations_; }

  [[nodiscard]] SetFunction as_function();

private:
  PaEvaluator(ClassProfile profile, PaMethod method, std::uint64_t threshold, std::uint64_t samples,
              std::uint64_t seed);

  ClassProfile profile_;
  PaMethod method_;
  std::uint64_t threshold_;
  std::uint64_t samples_;
  std::uint64_t seed_;
  std::size_t evaluations_ = 0;
  std::map<ModelSet, PaEstimate> cache_;
};

}  // namespace ensel
