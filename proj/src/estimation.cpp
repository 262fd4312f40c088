#include "ensel/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include <fmt/format.h>

#include "ensel/csv.hpp"
#include "ensel/error.hpp"

namespace ensel {

HistoricalMatrix load_historical_matrix(const std::filesystem::path& path) {
  auto rows = csv::read_file(path);
  if (rows.empty() || rows[0].fields.size() < 2 || rows[0].fields[0] != "query_id")
    throw Error(ErrorKind::validation, "historical matrix: expected header 'query_id,<model ids...>'");
  HistoricalMatrix m;
  m.model_ids.assign(rows[0].fields.begin() + 1, rows[0].fields.end());
  const auto l = m.model_ids.size();
  const auto n = rows.size() - 1;
  if (n == 0) throw Error(ErrorKind::validation, "historical matrix: no query rows");
  m.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(l));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[i + 1];
    if (r.fields.size() != l + 1)
      throw Error(ErrorKind::validation, fmt::format("line {}: expected {} fields", r.line, l + 1));
    m.query_ids.push_back(r.fields[0]);
    for (std::size_t j = 0; j < l; ++j) {
      auto v = csv::parse_int(r.fields[j + 1], r.line);
      if (v != 0 && v != 1) throw Error(ErrorKind::validation, fmt::format("line {}: cells must be 0 or 1", r.line));
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<std::uint8_t>(v);
    }
  }
  return m;
}

Embeddings load_embeddings(const std::filesystem::path& path) {
  auto rows = csv::read_file(path);
  Embeddings e;
  if (rows.empty()) return e;
  // header row optional: detected by a non-numeric second field
  std::size_t first = 0;
  if (rows[0].fields.size() >= 2) {
    try {
      (void)csv::parse_double(rows[0].fields[1], rows[0].line);
    } catch (const Error&) {
      first = 1;
    }
  }
  if (first >= rows.size()) return e;
  const auto d = rows[first].fields.size() - 1;
  if (d == 0) throw Error(ErrorKind::validation, "embeddings: need at least one component");
  e.rows.resize(static_cast<Eigen::Index>(rows.size() - first), static_cast<Eigen::Index>(d));
  for (std::size_t i = first; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.fields.size() != d + 1)
      throw Error(ErrorKind::validation, fmt::format("line {}: dimension mismatch, expected {}", r.line, d));
    e.query_ids.push_back(r.fields[0]);
    for (std::size_t j = 0; j < d; ++j)
      e.rows(static_cast<Eigen::Index>(i - first), static_cast<Eigen::Index>(j)) =
          csv::parse_double(r.fields[j + 1], r.line);
  }
  return e;
}

Eigen::MatrixXd align_embeddings(const Embeddings& embeddings, std::span<const std::string> query_ids) {
  std::map<std::string, Eigen::Index, std::less<>> index;
  for (std::size_t i = 0; i < embeddings.query_ids.size(); ++i)
    if (!index.emplace(embeddings.query_ids[i], static_cast<Eigen::Index>(i)).second)
      throw Error(ErrorKind::validation, fmt::format("embeddings: duplicate query_id '{}'", embeddings.query_ids[i]));
  Eigen::MatrixXd out(static_cast<Eigen::Index>(query_ids.size()), embeddings.rows.cols());
  for (std::size_t i = 0; i < query_ids.size(); ++i) {
    auto it = index.find(query_ids[i]);
    if (it == index.end())
      throw Error(ErrorKind::validation, fmt::format("embeddings: missing row for query_id '{}'", query_ids[i]));
    out.row(static_cast<Eigen::Index>(i)) = embeddings.rows.row(it->second);
  }
  if (index.size() != query_ids.size()) {
    std::map<std::string_view, bool> wanted;
    for (const auto& q : query_ids) wanted[q] = true;
    for (const auto& q : embeddings.query_ids)
      if (!wanted.count(q))
        throw Error(ErrorKind::validation, fmt::format("embeddings: query_id '{}' not in historical matrix", q));
  }
  return out;
}

double cosine_distance(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

std::vector<std::size_t> Clustering::members(std::size_t cluster) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cluster_of.size(); ++i)
    if (cluster_of[i] == cluster) out.push_back(i);
  return out;
}

Clustering cluster_queries(const Eigen::Ref<const Eigen::MatrixXd>& embeddings, double eps, std::size_t min_pts) {
  if (!(eps > 0)) throw Error(ErrorKind::validation, "cluster_queries: eps must be positive");
  if (min_pts == 0) throw Error(ErrorKind::validation, "cluster_queries: min_pts must be positive");
  if (embeddings.cols() < 1) throw Error(ErrorKind::validation, "cluster_queries: dimension must be >= 1");
  const auto n = static_cast<std::size_t>(embeddings.rows());

  // Normalized rows turn cosine distance into 1 - dot product.
  Eigen::MatrixXd unit = embeddings;
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    const double norm = unit.row(i).norm();
    if (norm > 0) unit.row(i) /= norm;
  }
  const Eigen::MatrixXd dist = (Eigen::MatrixXd::Ones(unit.rows(), unit.rows()) - unit * unit.transpose());

  auto neighbors = [&](std::size_t i) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j) {
      const bool zero = unit.row(static_cast<Eigen::Index>(i)).squaredNorm() == 0.0 ||
                        unit.row(static_cast<Eigen::Index>(j)).squaredNorm() == 0.0;
      const double d = i == j ? 0.0 : (zero ? 1.0 : dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      if (d <= eps) out.push_back(j);
    }
    return out;
  };

  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  Clustering c;
  c.cluster_of.assign(n, kUnset);
  c.noise.assign(n, false);
  std::vector<bool> visited(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (visited[i]) continue;
    visited[i] = true;
    auto seeds = neighbors(i);
    if (seeds.size() < min_pts) continue;  // provisional noise
    const std::size_t id = c.cluster_count++;
    c.cluster_of[i] = id;
    std::deque<std::size_t> queue(seeds.begin(), seeds.end());
    while (!queue.empty()) {
      const auto j = queue.front();
      queue.pop_front();
      if (c.cluster_of[j] == kUnset) c.cluster_of[j] = id;
      if (visited[j]) continue;
      visited[j] = true;
      auto more = neighbors(j);
      if (more.size() >= min_pts) queue.insert(queue.end(), more.begin(), more.end());
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (c.cluster_of[i] != kUnset) continue;
    c.cluster_of[i] = c.cluster_count++;
    c.noise[i] = true;
  }
  return c;
}

Eigen::MatrixXd cluster_centroids(const Eigen::Ref<const Eigen::MatrixXd>& embeddings, const Clustering& clustering) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(clustering.cluster_count), embeddings.cols());
  Eigen::VectorXd count = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(clustering.cluster_count));
  for (std::size_t i = 0; i < clustering.cluster_of.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(clustering.cluster_of[i]);
    sum.row(c) += embeddings.row(static_cast<Eigen::Index>(i));
    count(c) += 1.0;
  }
  for (Eigen::Index c = 0; c < sum.rows(); ++c)
    if (count(c) > 0) sum.row(c) /= count(c);
  return sum;
}

std::size_t nearest_cluster(const Eigen::Ref<const Eigen::MatrixXd>& centroids,
                            const Eigen::Ref<const Eigen::VectorXd>& query) {
  if (centroids.rows() == 0) throw Error(ErrorKind::validation, "nearest_cluster: no centroids");
  if (centroids.cols() != query.size()) throw Error(ErrorKind::validation, "nearest_cluster: dimension mismatch");
  std::size_t best = 0;
  double best_d = INFINITY;
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = cosine_distance(centroids.row(c).transpose(), query);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(c);
    }
  }
  return best;
}

namespace {

Eigen::VectorXd column_means(const HistoricalMatrix& matrix, std::span<const std::size_t> rows) {
  if (rows.empty()) throw Error(ErrorKind::validation, "estimate_profile: empty cluster");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(matrix.values.cols());
  for (auto r : rows) {
    if (r >= static_cast<std::size_t>(matrix.values.rows()))
      throw Error(ErrorKind::validation, fmt::format("estimate_profile: row {} out of range", r));
    sum += matrix.values.row(static_cast<Eigen::Index>(r)).cast<double>().transpose();
  }
  return sum / static_cast<double>(rows.size());
}

ClassProfile with_probs(const HistoricalMatrix& matrix, int class_count, std::span<const double> costs,
                        const Eigen::Ref<const Eigen::VectorXd>& probs) {
  if (costs.size() != matrix.model_ids.size())
    throw Error(ErrorKind::validation, "estimate_profile: one cost per model required");
  ClassProfile p;
  p.class_count = class_count;
  for (std::size_t j = 0; j < costs.size(); ++j)
    p.models.push_back({matrix.model_ids[j], probs(static_cast<Eigen::Index>(j)), costs[j]});
  return validate_profile(std::move(p));
}

}  // namespace

ClassProfile estimate_profile(const HistoricalMatrix& matrix, std::span<const std::size_t> rows, int class_count,
                              std::span<const double> costs) {
  return with_probs(matrix, class_count, costs, column_means(matrix, rows));
}

IntervalEstimate hoeffding_interval(double point, std::uint64_t n, double delta_l) {
  if (n == 0) throw Error(ErrorKind::validation, "hoeffding_interval: n must be positive");
  if (!(delta_l > 0 && delta_l < 1)) throw Error(ErrorKind::validation, "hoeffding_interval: delta_l outside (0,1)");
  const double w = std::sqrt(std::log(2.0 / delta_l) / (2.0 * static_cast<double>(n)));
  return {point, std::max(0.0, point - w), std::min(1.0, point + w), 1.0 - delta_l, n};
}

IntervalEstimate median_boost(const IntervalSampler& sampler, std::uint64_t repetitions) {
  if (repetitions == 0) throw Error(ErrorKind::validation, "median_boost: need at least one repetition");
  if (repetitions % 2 == 0) ++repetitions;
  std::vector<IntervalEstimate> runs;
  runs.reserve(repetitions);
  for (std::uint64_t i = 0; i < repetitions; ++i) runs.push_back(sampler());
  auto mid = runs.begin() + static_cast<std::ptrdiff_t>(repetitions / 2);
  std::nth_element(runs.begin(), mid, runs.end(),
                   [](const IntervalEstimate& a, const IntervalEstimate& b) { return a.point < b.point; });
  return *mid;
}

std::uint64_t required_repetitions(std::size_t model_count, double delta, double delta_l, LogBase base) {
  if (!(delta_l > 0 && delta_l < 0.5))
    throw Error(ErrorKind::validation, "required_repetitions: delta_l must lie in (0, 0.5)");
  if (!(delta > 0 && delta < 1) || model_count == 0)
    throw Error(ErrorKind::validation, "required_repetitions: arguments out of range");
  double lg = std::log(static_cast<double>(model_count) / delta);
  if (base == LogBase::two) lg /= std::log(2.0);
  if (base == LogBase::ten) lg /= std::log(10.0);
  const double gap = 1.0 - 2.0 * delta_l;
  auto r = static_cast<std::uint64_t>(std::ceil(6.0 * lg / (gap * gap)));
  r = std::max<std::uint64_t>(r, 1);
  return r % 2 == 0 ? r + 1 : r;
}

double boosted_failure_bound(std::uint64_t repetitions, double delta_l) {
  const double gap = 1.0 - 2.0 * delta_l;
  return std::exp(-static_cast<double>(repetitions) * gap * gap / 2.0);
}

ProfileBounds profile_bounds(const HistoricalMatrix& matrix, std::span<const std::size_t> rows, int class_count,
                             std::span<const double> costs, double delta_l) {
  const Eigen::VectorXd hat = column_means(matrix, rows);
  Eigen::VectorXd lo(hat.size()), hi(hat.size());
  ProfileBounds out;
  for (Eigen::Index j = 0; j < hat.size(); ++j) {
    auto iv = hoeffding_interval(hat(j), rows.size(), delta_l);
    lo(j) = iv.lo;
    hi(j) = iv.hi;
    out.intervals.push_back(iv);
  }
  out.low = with_probs(matrix, class_count, costs, lo);
  out.hat = with_probs(matrix, class_count, costs, hat);
  out.up = with_probs(matrix, class_count, costs, hi);
  return out;
}

}  // namespace ensel
