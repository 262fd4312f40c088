#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ensel/catalog.hpp"
#include "ensel/random.hpp"

namespace ensel::test {

inline ClassProfile make_profile(int k, std::vector<double> probs, std::vector<double> costs = {}) {
  ClassProfile p;
  p.class_count = k;
  for (std::size_t i = 0; i < probs.size(); ++i)
    p.models.push_back({fmt::format("l{}", i + 1), probs[i], costs.empty() ? 1.0 : costs[i]});
  return validate_profile(std::move(p));
}

// p drawn from (p_lo, p_hi); K in [k_lo, k_hi]; costs in [1, 10].
inline ClassProfile random_profile(Rng& rng, int l, int k_lo, int k_hi, double p_lo = -1, double p_hi = 0.99) {
  const int k = std::uniform_int_distribution<int>(k_lo, k_hi)(rng);
  const double lo = p_lo < 0 ? 1.0 / k + 0.01 : p_lo;
  std::uniform_real_distribution<double> prob(lo, p_hi), cost(1.0, 10.0);
  std::vector<double> ps, bs;
  for (int i = 0; i < l; ++i) {
    ps.push_back(prob(rng));
    bs.push_back(cost(rng));
  }
  return make_profile(k, ps, bs);
}

inline std::vector<ModelIndex> all_models(const ClassProfile& p) {
  std::vector<ModelIndex> out(p.size());
  for (ModelIndex i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

inline std::vector<ModelIndex> from_mask(unsigned mask) {
  std::vector<ModelIndex> out;
  for (ModelIndex i = 0; mask >> i; ++i)
    if (mask >> i & 1u) out.push_back(i);
  return out;
}

// Writes `content` to a fresh file under the temp directory.
inline std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  auto dir = std::filesystem::temp_directory_path() / "ensel_tests";
  std::filesystem::create_directories(dir);
  auto path = dir / name;
  std::ofstream(path) << content;
  return path;
}

}  // namespace ensel::test
