#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "pmcoa/cluster/embedding.hpp"

namespace pmcoa::cluster {

struct PcaModel {
  Eigen::VectorXd mean;                      // d
  Eigen::MatrixXd components;                // k x d, orthonormal rows
  Eigen::VectorXd explained_variance;        // k, sample variance along each component
  Eigen::VectorXd explained_variance_ratio;  // k, non-increasing
  double cumulative_ratio = 0.0;             // sum of explained_variance_ratio
  bool reached_target = false;

  std::size_t k() const { return static_cast<std::size_t>(components.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(components.cols()); }
};

// Eigendecomposition of the sample covariance. Keeps the smallest k whose
// cumulative explained variance reaches `variance_target`, capped at
// `max_components`; reached_target is false when the cap cuts it short.
// Each component is signed so its largest-magnitude coordinate is positive.
// Throws ValidationError for n < 2, a target outside (0, 1], or data with
// zero total variance.
PcaModel fit_pca(const EmbeddingMatrix& X, double variance_target = 0.99,
                 std::optional<std::size_t> max_components = std::nullopt);

// Rows (x - mean) * components^T; keys carried over. Throws ValidationError
// on a dimension mismatch.
EmbeddingMatrix project(const PcaModel& model, const EmbeddingMatrix& X);

// Inverse map back to the original space: Y * components + mean.
Eigen::MatrixXd reconstruct(const PcaModel& model, const Eigen::MatrixXd& Y);

void to_json(nlohmann::json& j, const PcaModel& m);
void from_json(const nlohmann::json& j, PcaModel& m);

}  // namespace pmcoa::cluster
