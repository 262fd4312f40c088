#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ensel {

// Position of a model within its ClassProfile; row order of the profile file.
using ModelIndex = std::size_t;
using ModelSet = std::vector<ModelIndex>;

inline constexpr double kProbFloor = 1e-3;
inline constexpr double kProbCap = 1.0 - 1e-3;

// Token pricing for one model, USD per 1,000,000 tokens.
struct ModelSpec {
  std::string id;
  double price_in = 0.0;
  double price_out = 0.0;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

[[nodiscard]] std::vector<ModelSpec> parse_catalog(std::istream& in);
[[nodiscard]] std::vector<ModelSpec> load_catalog(const std::filesystem::path& path);
void write_catalog(std::ostream& out, std::span<const ModelSpec> specs);
void save_catalog(const std::filesystem::path& path, std::span<const ModelSpec> specs);

[[nodiscard]] double query_cost_from_tokens(const ModelSpec& spec, std::uint64_t in_tokens,
                                            std::uint64_t out_tokens) noexcept;

struct ModelEntry {
  std::string model_id;
  double success_prob = 0.0;
  double query_cost = 0.0;

  friend bool operator==(const ModelEntry&, const ModelEntry&) = default;
};

// Per-query-class view of the model pool.
struct ClassProfile {
  int class_count = 2;
  std::vector<ModelEntry> models;

  [[nodiscard]] std::size_t size() const noexcept { return models.size(); }
  [[nodiscard]] double prob(ModelIndex i) const { return models[i].success_prob; }
  [[nodiscard]] double cost(ModelIndex i) const { return models[i].query_cost; }
  [[nodiscard]] const std::string& id(ModelIndex i) const { return models[i].model_id; }
  [[nodiscard]] double min_prob() const;
  // Sum in ascending model index, whatever the order of `subset`.
  [[nodiscard]] double total_cost(std::span<const ModelIndex> subset) const;
  [[nodiscard]] std::optional<ModelIndex> index_of(std::string_view model_id) const;

  friend bool operator==(const ClassProfile&, const ClassProfile&) = default;
};

// Sums per-model costs (zero for absent models) in index order. Every cost
// total uses this order; rounding is monotone, so a subset never sums above
// its superset and a plan that fits B keeps fitting however it is executed.
[[nodiscard]] double canonical_cost(std::span<const double> costs_by_model);

struct SelectionProblem {
  ClassProfile profile;
  double budget = 0.0;
};

[[nodiscard]] double clamp_probability(double p) noexcept;

// Clamps probabilities into [kProbFloor, kProbCap] and checks K >= 2, L >= 1,
// positive costs and unique ids. Idempotent.
[[nodiscard]] ClassProfile validate_profile(ClassProfile profile);

// Profile file: "K=<int>" line, optional "B=<budget>" line, then the header
// "model_id,success_prob,query_cost" and one row per model.
[[nodiscard]] ClassProfile parse_profile(std::istream& in);
[[nodiscard]] ClassProfile load_profile(const std::filesystem::path& path);
void write_profile(std::ostream& out, const ClassProfile& profile, std::optional<double> budget = {});
void save_profile(const std::filesystem::path& path, const ClassProfile& profile);

// Profile file carrying a "B=" line.
[[nodiscard]] SelectionProblem parse_problem(std::istream& in);
[[nodiscard]] SelectionProblem load_problem(const std::filesystem::path& path);

[[nodiscard]] std::string format_ids(const ClassProfile& profile, std::span<const ModelIndex> subset,
                                     char sep = ';');

}  // namespace ensel
