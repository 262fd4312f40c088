#include "ensel/correctness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include <fmt/format.h>

#include "ensel/aggregation.hpp"
#include "ensel/error.hpp"
#include "ensel/random.hpp"

namespace ensel {
namespace {

constexpr std::uint64_t kBatchSize = 4096;

// Scratch state shared by the exact and sampled evaluators.
struct Tally {
  std::vector<double> sum;
  std::vector<int> votes;

  explicit Tally(int k) : sum(static_cast<std::size_t>(k), 0.0), votes(static_cast<std::size_t>(k), 0) {}
  void reset() {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(votes.begin(), votes.end(), 0);
  }
};

// Returns (truth is tied for the top, size of the tie set).
std::pair<bool, int> truth_standing(const Tally& t, double log_default, int truth) {
  const auto k = t.sum.size();
  double best = -INFINITY;
  for (std::size_t c = 0; c < k; ++c) best = std::max(best, t.votes[c] ? t.sum[c] : log_default);
  int ties = 0;
  bool truth_top = false;
  for (std::size_t c = 0; c < k; ++c) {
    double v = t.votes[c] ? t.sum[c] : log_default;
    if (v >= best - kTieTolerance) {
      ++ties;
      if (static_cast<int>(c) == truth) truth_top = true;
    }
  }
  return {truth_top, ties};
}

std::uint64_t observation_count(int k, std::size_t n, std::uint64_t cap) {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (total > cap / static_cast<std::uint64_t>(k)) return cap + 1;
    total *= static_cast<std::uint64_t>(k);
  }
  return total;
}

struct SubsetView {
  std::vector<double> p;
  std::vector<double> log_weight;
  double log_default = 0.0;
  int k = 2;
};

SubsetView view_of(const ClassProfile& profile, std::span<const ModelIndex> subset) {
  SubsetView v;
  v.k = profile.class_count;
  v.log_default = log_default_belief(profile);
  for (auto m : subset) {
    if (m >= profile.size()) throw Error(ErrorKind::validation, fmt::format("model index {} out of range", m));
    v.p.push_back(profile.prob(m));
    v.log_weight.push_back(log_vote_weight(profile, m));
  }
  return v;
}

std::uint64_t simulate_batch(const SubsetView& v, std::uint64_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> wrong(1, v.k - 1);
  Tally tally(v.k);
  std::uint64_t hits = 0;
  for (std::uint64_t s = 0; s < count; ++s) {
    tally.reset();
    for (std::size_t i = 0; i < v.p.size(); ++i) {
      int cls = unit(rng) < v.p[i] ? 0 : wrong(rng);
      tally.sum[cls] += v.log_weight[i];
      ++tally.votes[cls];
    }
    auto [top, ties] = truth_standing(tally, v.log_default, 0);
    if (!top) continue;
    if (ties == 1) {
      ++hits;
    } else {
      // the truth is one of `ties` equally likely picks
      std::uniform_int_distribution<int> pick(0, ties - 1);
      if (pick(rng) == 0) ++hits;
    }
  }
  return hits;
}

}  // namespace

const char* to_string(PaMethod method) noexcept {
  return method == PaMethod::exact ? "exact" : "monte_carlo";
}

PaEstimate exact_pa(const ClassProfile& profile, std::span<const ModelIndex> subset, std::uint64_t threshold,
                    int assumed_truth) {
  if (assumed_truth < 0 || assumed_truth >= profile.class_count)
    throw Error(ErrorKind::validation, "exact_pa: assumed truth outside [0, K)");
  if (subset.empty()) return {0.0, PaMethod::exact, 0, 0};
  const auto count = observation_count(profile.class_count, subset.size(), threshold);
  if (count > threshold)
    throw Error(ErrorKind::size_guard,
                fmt::format("exact_pa: {}^{} observations exceed threshold {}", profile.class_count, subset.size(),
                            threshold));
  const auto v = view_of(profile, subset);
  const double wrong_share = 1.0 / (v.k - 1);
  Tally tally(v.k);
  double total = 0.0;

  auto recurse = [&](auto&& self, std::size_t depth, double prob) -> void {
    if (depth == v.p.size()) {
      auto [top, ties] = truth_standing(tally, v.log_default, assumed_truth);
      if (top) total += prob / ties;
      return;
    }
    for (int c = 0; c < v.k; ++c) {
      double f = c == assumed_truth ? v.p[depth] : (1.0 - v.p[depth]) * wrong_share;
      const double saved = tally.sum[c];
      tally.sum[c] += v.log_weight[depth];
      ++tally.votes[c];
      self(self, depth + 1, prob * f);
      --tally.votes[c];
      tally.sum[c] = saved;
    }
  };
  recurse(recurse, 0, 1.0);
  return {std::clamp(total, 0.0, 1.0), PaMethod::exact, 0, 0};
}

PaEstimate mc_pa(const ClassProfile& profile, std::span<const ModelIndex> subset, std::uint64_t samples,
                 std::uint64_t seed) {
  if (samples == 0) throw Error(ErrorKind::validation, "mc_pa: need at least one sample");
  if (subset.empty()) return {0.0, PaMethod::monte_carlo, samples, seed};
  const auto v = view_of(profile, subset);
  const std::uint64_t batches = (samples + kBatchSize - 1) / kBatchSize;
  auto batch_len = [&](std::uint64_t b) { return std::min(kBatchSize, samples - b * kBatchSize); };

  std::uint64_t hits = 0;
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers == 1 || batches == 1) {
    for (std::uint64_t b = 0; b < batches; ++b) hits += simulate_batch(v, batch_len(b), derive_seed(seed, b));
  } else {
    std::vector<std::future<std::uint64_t>> parts;
    const std::uint64_t stride = workers;
    for (unsigned w = 0; w < workers; ++w) {
      parts.push_back(std::async(std::launch::async, [&, w] {
        std::uint64_t h = 0;
        for (std::uint64_t b = w; b < batches; b += stride) h += simulate_batch(v, batch_len(b), derive_seed(seed, b));
        return h;
      }));
    }
    for (auto& f : parts) hits += f.get();
  }
  return {static_cast<double>(hits) / static_cast<double>(samples), PaMethod::monte_carlo, samples, seed};
}

std::uint64_t required_samples(double epsilon, double delta, double p_star, std::size_t model_count) {
  if (!(epsilon > 0 && epsilon <= 1) || !(delta > 0 && delta < 1) || !(p_star > 0 && p_star < 1) ||
      model_count == 0)
    throw Error(ErrorKind::validation, "required_samples: arguments out of range");
  const double l = static_cast<double>(model_count);
  const double theta = (8.0 + 2.0 * epsilon) / (epsilon * epsilon * p_star) * std::log(2.0 * l * l / delta);
  return static_cast<std::uint64_t>(std::ceil(theta));
}

double surrogate_gamma(const ClassProfile& profile, std::span<const ModelIndex> subset) {
  double miss = 1.0;
  for (auto m : subset) miss *= 1.0 - profile.prob(m);
  return 1.0 - miss;
}

PaEvaluator::PaEvaluator(ClassProfile profile, PaMethod method, std::uint64_t threshold, std::uint64_t samples,
                         std::uint64_t seed)
    : profile_(std::move(profile)), method_(method), threshold_(threshold), samples_(samples), seed_(seed) {}

PaEvaluator PaEvaluator::exact(ClassProfile profile, std::uint64_t threshold) {
  return PaEvaluator(std::move(profile), PaMethod::exact, threshold, 0, 0);
}

PaEvaluator PaEvaluator::monte_carlo(ClassProfile profile, std::uint64_t samples, std::uint64_t master_seed) {
  if (samples == 0) throw Error(ErrorKind::validation, "monte carlo evaluator needs samples > 0");
  return PaEvaluator(std::move(profile), PaMethod::monte_carlo, 0, samples, master_seed);
}

PaEstimate PaEvaluator::evaluate(std::span<const ModelIndex> subset) {
  ModelSet key(subset.begin(), subset.end());
  std::sort(key.begin(), key.end());
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  ++evaluations_;
  PaEstimate est = method_ == PaMethod::exact
                       ? exact_pa(profile_, key, threshold_)
                       : mc_pa(profile_, key, samples_, derive_seed(seed_, hash_indices(key)));
  cache_.emplace(std::move(key), est);
  return est;
}

SetFunction PaEvaluator::as_function() {
  return [this](std::span<const ModelIndex> s) { return evaluate(s).value; };
}

}  // namespace ensel
