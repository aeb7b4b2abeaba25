#include "pmcoa/cluster/kmeans.hpp"

#include <limits>
#include <nlohmann/json.hpp>

#include "pmcoa/util/rng.hpp"

namespace pmcoa::cluster {
namespace {

using Index = Eigen::Index;

// Nearest centroid per row and total squared distance.
double assign(const Eigen::MatrixXd& X, const Eigen::MatrixXd& C, std::vector<int>& labels,
              std::vector<double>& dist2) {
  double total = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < C.rows(); ++c) {
      const double d = (X.row(i) - C.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    dist2[static_cast<std::size_t>(i)] = best_d;
    total += best_d;
  }
  return total;
}

Eigen::MatrixXd plus_plus_init(const Eigen::MatrixXd& X, int K, util::SplitMix64& rng) {
  const Index n = X.rows();
  Eigen::MatrixXd C(K, X.cols());
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  Index pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
  for (int c = 0; c < K; ++c) {
    if (c > 0) {
      double sum = 0.0;
      for (double v : d2) sum += v;
      if (sum > 0.0) {
        const double r = rng.uniform() * sum;
        double acc = 0.0;
        pick = n - 1;
        for (Index i = 0; i < n; ++i) {
          acc += d2[static_cast<std::size_t>(i)];
          if (acc > r && d2[static_cast<std::size_t>(i)] > 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
      }
    }
    C.row(c) = X.row(pick);
    for (Index i = 0; i < n; ++i) {
      auto& d = d2[static_cast<std::size_t>(i)];
      d = std::min(d, (X.row(i) - C.row(c)).squaredNorm());
    }
  }
  return C;
}

}  // namespace

std::map<std::string, int> ClusterModel::assignments() const {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < row_keys.size(); ++i) out.emplace(row_keys[i], labels[i]);
  return out;
}

std::vector<std::string> ClusterModel::members(int cluster_id) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == cluster_id) out.push_back(row_keys[i]);
  }
  return out;
}

ClusterModel kmeans(const EmbeddingMatrix& X, int K, std::uint64_t seed, int max_iters, double tol) {
  if (K < 1) throw ValidationError("kmeans: K must be >= 1");
  if (X.n() < static_cast<std::size_t>(K)) {
    throw ValidationError("kmeans: " + std::to_string(X.n()) + " rows is fewer than K=" + std::to_string(K));
  }
  if (max_iters < 1) throw ValidationError("kmeans: max_iters must be >= 1");
  X.validate();

  ClusterModel m;
  m.K = K;
  m.seed = seed;
  m.row_keys = X.row_keys;
  util::SplitMix64 rng(seed);
  Eigen::MatrixXd C = plus_plus_init(X.values, K, rng);
  const Index n = X.values.rows();
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<double> dist2(static_cast<std::size_t>(n));

  for (int it = 0; it < max_iters; ++it) {
    m.inertia_history.push_back(assign(X.values, C, labels, dist2));
    m.iterations = it + 1;

    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(K, X.values.cols());
    std::vector<Index> counts(static_cast<std::size_t>(K), 0);
    for (Index i = 0; i < n; ++i) {
      const int c = labels[static_cast<std::size_t>(i)];
      next.row(c) += X.values.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (int c = 0; c < K; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
        continue;
      }
      // Empty: move to the worst-served point not already used this round.
      Index far = -1;
      for (Index i = 0; i < n; ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        if (far < 0 || dist2[static_cast<std::size_t>(i)] > dist2[static_cast<std::size_t>(far)]) far = i;
      }
      taken[static_cast<std::size_t>(far)] = true;
      next.row(c) = X.values.row(far);
    }
    const double shift = (next - C).rowwise().norm().maxCoeff();
    C = std::move(next);
    if (shift < tol) {
      m.converged = true;
      break;
    }
  }
  m.inertia_history.push_back(assign(X.values, C, labels, dist2));
  m.centroids = std::move(C);
  m.labels = std::move(labels);
  return m;
}

std::vector<std::string> sample_members(std::vector<std::string> pool, std::int64_t cluster_id, std::size_t n,
                                        std::uint64_t seed) {
  const std::size_t take = std::min(n, pool.size());
  util::SplitMix64 rng(util::mix_seed(seed, static_cast<std::uint64_t>(cluster_id)));
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

std::vector<std::string> sample_cluster(const ClusterModel& model, int cluster_id, std::size_t n,
                                        std::uint64_t seed) {
  if (cluster_id < 0 || cluster_id >= model.K) {
    throw NotFoundError("unknown cluster id " + std::to_string(cluster_id));
  }
  std::vector<std::string> pool = model.members(cluster_id);
  if (pool.empty()) throw NotFoundError("cluster " + std::to_string(cluster_id) + " has no members");
  return sample_members(std::move(pool), cluster_id, n, seed);
}

int nearest_centroid(const ClusterModel& model, const Eigen::RowVectorXd& point) {
  if (point.size() != model.centroids.cols()) throw ValidationError("nearest_centroid: dimension mismatch");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < model.centroids.rows(); ++c) {
    const double d = (model.centroids.row(c) - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

// Labels live in the assignment CSV; the model file holds centroids and run facts.
void to_json(nlohmann::json& j, const ClusterModel& m) {
  nlohmann::json centroids = nlohmann::json::array();
  for (Index r = 0; r < m.centroids.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.centroids.cols()));
    for (Index c = 0; c < m.centroids.cols(); ++c) row[static_cast<std::size_t>(c)] = m.centroids(r, c);
    centroids.push_back(std::move(row));
  }
  j = {{"K", m.K},
       {"seed", m.seed},
       {"centroids", std::move(centroids)},
       {"inertia_history", m.inertia_history},
       {"iterations", m.iterations},
       {"converged", m.converged}};
}

void from_json(const nlohmann::json& j, ClusterModel& m) {
  m.K = j.at("K").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  const auto rows = j.at("centroids").get<std::vector<std::vector<double>>>();
  if (rows.size() != static_cast<std::size_t>(m.K)) throw SchemaError("cluster model: centroid count != K");
  const std::size_t k = rows.empty() ? 0 : rows[0].size();
  m.centroids.resize(m.K, static_cast<Index>(k));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != k) throw SchemaError("cluster model: ragged centroids");
    for (std::size_t c = 0; c < k; ++c) m.centroids(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  }
  m.inertia_history = j.at("inertia_history").get<std::vector<double>>();
  m.iterations = j.at("iterations").get<int>();
  m.converged = j.at("converged").get<bool>();
}

}  // namespace pmcoa::cluster
