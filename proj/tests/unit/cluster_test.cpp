#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "pmcoa/cluster/embedding.hpp"
#include "pmcoa/cluster/io.hpp"
#include "pmcoa/cluster/kmeans.hpp"
#include "pmcoa/cluster/pca.hpp"
#include "pmcoa/error.hpp"
#include "pmcoa/util/rng.hpp"

namespace pmcoa::cluster {
namespace {

EmbeddingMatrix make_matrix(const Eigen::MatrixXd& v) {
  EmbeddingMatrix m;
  m.values = v;
  for (Eigen::Index i = 0; i < v.rows(); ++i) m.row_keys.push_back("k" + std::to_string(i));
  return m;
}

TEST(HashBackend, DeterministicUnitVectors) {
  HashBackend b(64);
  std::vector<ImageItem> items{{"a", "one"}, {"b", "two"}, {"c", "one"}};
  const auto r1 = embed_images(items, b);
  const auto r2 = embed_images(items, b, 3);
  ASSERT_EQ(r1.matrix.n(), 3u);
  EXPECT_EQ(r1.matrix.d(), 64u);
  EXPECT_TRUE(r1.matrix.values == r2.matrix.values);
  EXPECT_TRUE(r1.matrix.values.row(0) == r1.matrix.values.row(2));
  EXPECT_NEAR(r1.matrix.values.row(1).norm(), 1.0, 1e-6);
}

class FailingBackend : public EmbeddingBackend {
 public:
  std::vector<float> embed(std::string_view bytes) override {
    if (bytes == "bad") throw BackendError("cannot decode");
    return inner_.embed(bytes);
  }

 private:
  HashBackend inner_{16};
};

TEST(EmbedImages, FailuresGoToSkipList) {
  FailingBackend b;
  std::vector<ImageItem> items{{"a", "1"}, {"b", "2"}, {"c", "bad"}, {"d", "4"}, {"e", "5"}};
  const auto r = embed_images(items, b, 2);
  EXPECT_EQ(r.matrix.n(), 4u);
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0].key, "c");
  EXPECT_EQ(r.matrix.row_keys, (std::vector<std::string>{"a", "b", "d", "e"}));
}

TEST(EmbedImages, DuplicateKeysRejected) {
  HashBackend b(4);
  EXPECT_THROW(embed_images({{"a", "1"}, {"a", "2"}}, b), ValidationError);
}

TEST(ExternalProcessBackend, SpeaksBinaryProtocol) {
  ExternalProcessBackend b({PMCOA_FAKE_EMBEDDER});
  const auto v = b.embed("abc");
  ASSERT_EQ(v.size(), 8u);
  EXPECT_FLOAT_EQ(v[1], 3.0f + 0.5f + (97 + 98 + 99) * 0.001f);
  EXPECT_THROW(b.embed("FAIL me"), BackendError);
  EXPECT_EQ(b.embed("abc"), v);  // still usable after a rejection
  const auto r = embed_images({{"x", "abc"}, {"y", "FAIL"}, {"z", "zz"}}, b, 2);
  EXPECT_EQ(r.matrix.n(), 2u);
  EXPECT_EQ(r.skipped.size(), 1u);
}

TEST(ExternalProcessBackend, ChildExitIsBackendError) {
  ExternalProcessBackend b({PMCOA_FAKE_EMBEDDER});
  EXPECT_THROW(b.embed("EXIT"), BackendError);
  EXPECT_EQ(b.embed("ok").size(), 8u);  // restarted
}

TEST(Pca, PlanarDataNeedsTwoComponents) {
  util::SplitMix64 rng(3);
  Eigen::MatrixXd v(50, 6);
  Eigen::VectorXd a(6), b(6);
  a << 1, 2, 0, -1, 0, 3;
  b << 0, 1, 1, 1, -2, 0;
  for (int i = 0; i < 50; ++i) v.row(i) = (rng.normal() * a + rng.normal() * b).transpose();
  const auto m = fit_pca(make_matrix(v), 0.99);
  EXPECT_EQ(m.k(), 2u);
  EXPECT_NEAR(m.cumulative_ratio, 1.0, 1e-12);
  EXPECT_TRUE(m.reached_target);
  const auto full = fit_pca(make_matrix(v), 1.0);
  EXPECT_EQ(full.k(), 2u);
}

TEST(Pca, IsotropicGaussianMissesTargetUnderCap) {
  util::SplitMix64 rng(4);
  Eigen::MatrixXd v(400, 64);
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = rng.normal();
  const auto m = fit_pca(make_matrix(v), 0.99, 25);
  EXPECT_FALSE(m.reached_target);
  EXPECT_EQ(m.k(), 25u);
  // Oracle: full decomposition of the sample covariance.
  const Eigen::MatrixXd c = v.rowwise() - v.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.transpose() * c / 399.0);
  const Eigen::VectorXd ev = eig.eigenvalues().reverse();
  EXPECT_NEAR(m.cumulative_ratio, ev.head(25).sum() / ev.sum(), 1e-10);
  EXPECT_LT(m.cumulative_ratio, 0.99);
}

TEST(Pca, OrthonormalSignedAndMonotone) {
  util::SplitMix64 rng(5);
  Eigen::MatrixXd v(80, 10);
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = rng.normal() * (j + 1);
  const auto m = fit_pca(make_matrix(v), 1.0);
  const Eigen::MatrixXd gram = m.components * m.components.transpose();
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(m.k(), m.k())).cwiseAbs().maxCoeff(), 1e-6);
  for (Eigen::Index r = 0; r < m.components.rows(); ++r) {
    Eigen::Index arg;
    m.components.row(r).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(m.components(r, arg), 0.0);
  }
  for (Eigen::Index r = 1; r < m.explained_variance_ratio.size(); ++r) {
    EXPECT_LE(m.explained_variance_ratio(r), m.explained_variance_ratio(r - 1));
  }
  EXPECT_LE(m.explained_variance_ratio.sum(), 1.0 + 1e-9);
  // Reconstruction error never grows with k.
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= 10; ++k) {
    const auto mk = fit_pca(make_matrix(v), 1.0, k);
    const auto y = project(mk, make_matrix(v));
    const double err = (reconstruct(mk, y.values) - v).squaredNorm();
    EXPECT_LE(err, prev + 1e-9);
    prev = err;
  }
  EXPECT_LT(prev, 1e-12 * v.squaredNorm());
}

TEST(Pca, ProjectMatchesBruteForce) {
  util::SplitMix64 rng(6);
  Eigen::MatrixXd v(5, 8);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 8; ++j) v(i, j) = rng.normal();
  const auto X = make_matrix(v);
  const auto m = fit_pca(X, 1.0);
  const auto y = project(m, X);
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(m.k()); ++c) {
      double s = 0;
      for (Eigen::Index j = 0; j < 8; ++j) s += (v(i, j) - m.mean(j)) * m.components(c, j);
      EXPECT_NEAR(y.values(i, c), s, 1e-12);
    }
  }
  EmbeddingMatrix mean_row = make_matrix(m.mean.transpose());
  EXPECT_LT(project(m, mean_row).values.norm(), 1e-12);
  EXPECT_LT((reconstruct(m, y.values) - v).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_THROW(project(m, make_matrix(Eigen::MatrixXd::Zero(2, 3))), ValidationError);
}

TEST(Pca, DegenerateInputs) {
  EXPECT_THROW(fit_pca(make_matrix(Eigen::MatrixXd::Ones(1, 3))), ValidationError);
  EXPECT_THROW(fit_pca(make_matrix(Eigen::MatrixXd::Ones(4, 3))), ValidationError);
}

TEST(KMeans, ThreeSeparatedPoints) {
  Eigen::MatrixXd v(3, 2);
  v << 0, 0, 100, 0, 0, 100;
  const auto m = kmeans(make_matrix(v), 3, 1);
  std::set<int> ids(m.labels.begin(), m.labels.end());
  EXPECT_EQ(ids.size(), 3u);
  EXPECT_DOUBLE_EQ(m.inertia(), 0.0);
}

TEST(KMeans, TwoTightBlobsMatchDistanceOracle) {
  util::SplitMix64 rng(9);
  Eigen::MatrixXd v(20, 3);
  for (int i = 0; i < 20; ++i) {
    const double off = i < 10 ? -5.0 : 5.0;
    for (int j = 0; j < 3; ++j) v(i, j) = off + 0.1 * rng.normal();
  }
  const auto m = kmeans(make_matrix(v), 2, 77);
  // Oracle: assign each point to the nearer blob mean.
  const Eigen::RowVectorXd mu0 = v.topRows(10).colwise().mean();
  const Eigen::RowVectorXd mu1 = v.bottomRows(10).colwise().mean();
  for (int i = 0; i < 20; ++i) {
    const int oracle = (v.row(i) - mu0).squaredNorm() <= (v.row(i) - mu1).squaredNorm() ? 0 : 1;
    EXPECT_EQ(m.labels[static_cast<std::size_t>(i)] == m.labels[0], oracle == 0);
  }
}

TEST(KMeans, DeterministicAndMonotone) {
  util::SplitMix64 rng(10);
  Eigen::MatrixXd v(300, 4);
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = rng.normal() + (i % 5) * 2.0;
  const auto a = kmeans(make_matrix(v), 7, 123);
  const auto b = kmeans(make_matrix(v), 7, 123);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_TRUE(a.centroids == b.centroids);
  for (std::size_t i = 1; i < a.inertia_history.size(); ++i) {
    EXPECT_LE(a.inertia_history[i], a.inertia_history[i - 1] + 1e-9);
  }
  for (int l : a.labels) {
    EXPECT_GE(l, 0);
    EXPECT_LT(l, 7);
  }
}

TEST(KMeans, DuplicatePointsReseedEmptyClusters) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(6, 2);
  v(5, 0) = 1.0;
  const auto m = kmeans(make_matrix(v), 3, 5);
  EXPECT_EQ(m.labels.size(), 6u);
  EXPECT_THROW(kmeans(make_matrix(v), 7, 5), ValidationError);
}

TEST(SampleCluster, SmallLargeAndMembership) {
  Eigen::MatrixXd v(105, 1);
  for (int i = 0; i < 105; ++i) v(i, 0) = i < 100 ? 0.0 + i * 1e-3 : 1000.0 + i;
  const auto m = kmeans(make_matrix(v), 2, 1);
  const int big = m.labels[0];
  const int small = 1 - big;
  EXPECT_EQ(sample_cluster(m, small, 30, 1).size(), 5u);
  const auto s1 = sample_cluster(m, big, 30, 42);
  const auto s2 = sample_cluster(m, big, 30, 42);
  EXPECT_EQ(s1, s2);
  EXPECT_EQ(s1.size(), 30u);
  const auto assign = m.assignments();
  for (const auto& k : s1) EXPECT_EQ(assign.at(k), big);
  EXPECT_EQ(std::set<std::string>(s1.begin(), s1.end()).size(), 30u);
  EXPECT_THROW(sample_cluster(m, 2, 30, 1), NotFoundError);
}

TEST(ClusterIo, AssignmentsAndEmbeddingsRoundTrip) {
  testing::TempDir dir;
  HashBackend b(12);
  const auto r = embed_images({{"a,1", "x"}, {"b", "y"}, {"c", "z"}, {"d", "w"}}, b);
  save_embeddings(dir / "emb", r.matrix);
  const auto back = load_embeddings(dir / "emb.json");
  EXPECT_EQ(back.row_keys, r.matrix.row_keys);
  EXPECT_TRUE(back.values == r.matrix.values);

  const auto m = kmeans(r.matrix, 2, 3);
  save_assignments(dir / "assign.csv", m);
  EXPECT_EQ(load_assignment_map(dir / "assign.csv"), m.assignments());
}

}  // namespace
}  // namespace pmcoa::cluster
