#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "pmcoa/cluster/embedding.hpp"

namespace pmcoa::cluster {

struct ClusterModel {
  int K = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd centroids;            // K x k
  std::vector<std::string> row_keys;    // input rows
  std::vector<int> labels;              // cluster id per row
  std::vector<double> inertia_history;  // objective after each assignment step
  int iterations = 0;
  bool converged = false;

  double inertia() const { return inertia_history.empty() ? 0.0 : inertia_history.back(); }
  std::map<std::string, int> assignments() const;
  std::vector<std::string> members(int cluster_id) const;  // row order
};

// k-means++ seeding from `seed`, then Lloyd iterations until the largest
// centroid move is below `tol` or `max_iters` is reached. Distance ties go to
// the lower cluster id. A cluster left empty is re-seeded at the point
// farthest from its current centroid. Deterministic for (X, K, seed).
// Throws ValidationError when K < 1 or n < K.
ClusterModel kmeans(const EmbeddingMatrix& X, int K, std::uint64_t seed, int max_iters = 300, double tol = 1e-6);

// Uniform sample without replacement of up to n member keys. Throws
// NotFoundError when cluster_id is out of range or the cluster is empty.
std::vector<std::string> sample_cluster(const ClusterModel& model, int cluster_id, std::size_t n = 30,
                                        std::uint64_t seed = 0);

// The draw behind sample_cluster, for callers that hold only a member list.
std::vector<std::string> sample_members(std::vector<std::string> members, std::int64_t cluster_id, std::size_t n,
                                        std::uint64_t seed);

// Cluster whose centroid is closest to `point` (ties to the lower id); used to
// label images added after clustering.
int nearest_centroid(const ClusterModel& model, const Eigen::RowVectorXd& point);

void to_json(nlohmann::json& j, const ClusterModel& m);
void from_json(const nlohmann::json& j, ClusterModel& m);

}  // namespace pmcoa::cluster
