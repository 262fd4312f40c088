#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ensel/catalog.hpp"

namespace ensel {

// N x L record of past per-model correctness (rows = queries).
struct HistoricalMatrix {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> values;
  std::vector<std::string> model_ids;
  std::vector<std::string> query_ids;
};

// Header "query_id,<model ids...>", cells 0/1.
[[nodiscard]] HistoricalMatrix load_historical_matrix(const std::filesystem::path& path);

struct Embeddings {
  std::vector<std::string> query_ids;
  Eigen::MatrixXd rows;  // N x D
};

// First column query_id, remaining columns real components.
[[nodiscard]] Embeddings load_embeddings(const std::filesystem::path& path);

// Reorders embedding rows to the matrix's query order; throws naming the first
// query id present in one file but not the other.
[[nodiscard]] Eigen::MatrixXd align_embeddings(const Embeddings& embeddings, std::span<const std::string> query_ids);

[[nodiscard]] double cosine_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                                     const Eigen::Ref<const Eigen::VectorXd>& b);

struct Clustering {
  std::vector<std::size_t> cluster_of;  // per row
  std::vector<bool> noise;              // row was density noise and got its own cluster
  std::size_t cluster_count = 0;

  [[nodiscard]] std::vector<std::size_t> members(std::size_t cluster) const;
};

// DBSCAN under cosine distance (neighbors at distance <= eps, self included;
// core points have >= min_pts neighbors). Noise rows become singleton clusters.
// Cluster ids follow the first row that opens them.
[[nodiscard]] Clustering cluster_queries(const Eigen::Ref<const Eigen::MatrixXd>& embeddings, double eps,
                                         std::size_t min_pts);

// Mean embedding per cluster (K_c x D).
[[nodiscard]] Eigen::MatrixXd cluster_centroids(const Eigen::Ref<const Eigen::MatrixXd>& embeddings,
                                                const Clustering& clustering);

// Index of the centroid with the highest cosine similarity to `query`.
[[nodiscard]] std::size_t nearest_cluster(const Eigen::Ref<const Eigen::MatrixXd>& centroids,
                                          const Eigen::Ref<const Eigen::VectorXd>& query);

// Column means over `rows`, clamped; costs aligned with matrix.model_ids.
[[nodiscard]] ClassProfile estimate_profile(const HistoricalMatrix& matrix, std::span<const std::size_t> rows,
                                            int class_count, std::span<const double> costs);

struct IntervalEstimate {
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double confidence = 0.0;
  std::uint64_t n = 0;
};

// Two-sided Hoeffding: half-width sqrt(ln(2/delta_l) / (2n)), clipped to [0, 1].
[[nodiscard]] IntervalEstimate hoeffding_interval(double point, std::uint64_t n, double delta_l);

using IntervalSampler = std::function<IntervalEstimate()>;

// Runs `sampler` Λ times (Λ rounded up to odd) and returns, verbatim, the
// interval whose point estimate is the median.
[[nodiscard]] IntervalEstimate median_boost(const IntervalSampler& sampler, std::uint64_t repetitions);

enum class LogBase { natural, two, ten };

// ceil(6 log(L / delta) / (1 - 2 delta_l)^2), rounded up to odd.
[[nodiscard]] std::uint64_t required_repetitions(std::size_t model_count, double delta, double delta_l,
                                                 LogBase base = LogBase::natural);

// exp(-Λ (1 - 2 delta_l)^2 / 2)
[[nodiscard]] double boosted_failure_bound(std::uint64_t repetitions, double delta_l);

struct ProfileBounds {
  ClassProfile low;
  ClassProfile hat;
  ClassProfile up;
  std::vector<IntervalEstimate> intervals;
};

[[nodiscard]] ProfileBounds profile_bounds(const HistoricalMatrix& matrix, std::span<const std::size_t> rows,
                                           int class_count, std::span<const double> costs, double delta_l);

}  // namespace ensel
