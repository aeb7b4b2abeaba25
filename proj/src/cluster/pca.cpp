#include "pmcoa/cluster/pca.hpp"

#include <nlohmann/json.hpp>

namespace pmcoa::cluster {

PcaModel fit_pca(const EmbeddingMatrix& X, double variance_target, std::optional<std::size_t> max_components) {
  if (X.n() < 2) throw ValidationError("fit_pca needs at least 2 rows");
  if (!(variance_target > 0.0 && variance_target <= 1.0)) {
    throw ValidationError("fit_pca: variance_target must be in (0, 1]");
  }
  if (max_components && *max_components == 0) throw ValidationError("fit_pca: max_components must be >= 1");
  X.validate();

  PcaModel m;
  m.mean = X.values.colwise().mean().transpose();
  const Eigen::MatrixXd centered = X.values.rowwise() - m.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(X.n() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw ValidationError("fit_pca: eigendecomposition failed");

  // Eigen returns ascending eigenvalues; walk them in descending order.
  const Eigen::Index d = cov.rows();
  Eigen::VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
  const double total = values.sum();
  if (!(total > 0.0)) throw ValidationError("fit_pca: data has zero variance");

  const std::size_t cap = max_components ? std::min<std::size_t>(*max_components, static_cast<std::size_t>(d))
                                         : static_cast<std::size_t>(d);
  std::size_t k = 0;
  double cumulative = 0.0;
  bool reached = false;
  while (k < cap) {
    cumulative += values(static_cast<Eigen::Index>(k)) / total;
    ++k;
    // Rounding in the running sum must not hide an exact-rank hit.
    if (cumulative >= variance_target - 1e-12) {
      reached = true;
      break;
    }
  }

  m.components.resize(static_cast<Eigen::Index>(k), d);
  m.explained_variance.resize(static_cast<Eigen::Index>(k));
  m.explained_variance_ratio.resize(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - r);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    m.components.row(r) = v.transpose();
    m.explained_variance(r) = values(r);
    m.explained_variance_ratio(r) = values(r) / total;
  }
  m.cumulative_ratio = m.explained_variance_ratio.sum();
  m.reached_target = reached;
  return m;
}

EmbeddingMatrix project(const PcaModel& model, const EmbeddingMatrix& X) {
  if (X.d() != model.d()) {
    throw ValidationError("project: input has dimension " + std::to_string(X.d()) + ", model expects " +
                          std::to_string(model.d()));
  }
  EmbeddingMatrix out;
  out.values = (X.values.rowwise() - model.mean.transpose()) * model.components.transpose();
  out.row_keys = X.row_keys;
  return out;
}

Eigen::MatrixXd reconstruct(const PcaModel& model, const Eigen::MatrixXd& Y) {
  if (static_cast<std::size_t>(Y.cols()) != model.k()) throw ValidationError("reconstruct: dimension mismatch");
  return (Y * model.components).rowwise() + model.mean.transpose();
}

namespace {

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd unvec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void to_json(nlohmann::json& j, const PcaModel& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.components.rows(); ++r) rows.push_back(vec(m.components.row(r).transpose()));
  j = {{"mean", vec(m.mean)},
       {"components", rows},
       {"explained_variance", vec(m.explained_variance)},
       {"explained_variance_ratio", vec(m.explained_variance_ratio)},
       {"cumulative_ratio", m.cumulative_ratio},
       {"reached_target", m.reached_target}};
}

void from_json(const nlohmann::json& j, PcaModel& m) {
  m.mean = unvec(j.at("mean").get<std::vector<double>>());
  const auto rows = j.at("components").get<std::vector<std::vector<double>>>();
  m.components.resize(static_cast<Eigen::Index>(rows.size()), m.mean.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(m.mean.size())) throw SchemaError("pca: ragged components");
    m.components.row(static_cast<Eigen::Index>(r)) = unvec(rows[r]).transpose();
  }
  m.explained_variance = unvec(j.at("explained_variance").get<std::vector<double>>());
  m.explained_variance_ratio = unvec(j.at("explained_variance_ratio").get<std::vector<double>>());
  m.cumulative_ratio = j.at("cumulative_ratio").get<double>();
  m.reached_target = j.at("reached_target").get<bool>();
}

}  // namespace pmcoa::cluster
