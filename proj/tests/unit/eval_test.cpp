#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>

#include "pmcoa/util/fs.hpp"

#include "fixtures.hpp"
#include "pmcoa/error.hpp"
#include "pmcoa/eval/bootstrap.hpp"
#include "pmcoa/eval/merge.hpp"
#include "pmcoa/eval/retrieval.hpp"
#include "pmcoa/eval/task.hpp"
#include "pmcoa/eval/vqa.hpp"
#include "pmcoa/util/rng.hpp"

namespace pmcoa::eval {
namespace {

Eigen::MatrixXd random_unit_rows(Eigen::Index n, Eigen::Index d, util::SplitMix64& rng) {
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.normal();
    m.row(i).normalize();
  }
  return m;
}

ClosedVqaItem random_item(int M, int d, util::SplitMix64& rng, std::string id = "x") {
  ClosedVqaItem it;
  it.id = std::move(id);
  it.image = random_unit_rows(1, d, rng).row(0).transpose();
  it.answers = random_unit_rows(M, d, rng);
  it.correct_index = static_cast<int>(rng.below(M));
  return it;
}

// Brute force: explicit cosine loop, first maximum kept.
int oracle_predict(const ClosedVqaItem& it) {
  int best = 0;
  double best_sim = -2;
  for (Eigen::Index j = 0; j < it.answers.rows(); ++j) {
    double dot = 0, na = 0, ni = 0;
    for (Eigen::Index c = 0; c < it.image.size(); ++c) {
      dot += it.answers(j, c) * it.image(c);
      na += it.answers(j, c) * it.answers(j, c);
      ni += it.image(c) * it.image(c);
    }
    const double s = dot / (std::sqrt(na) * std::sqrt(ni));
    if (s > best_sim) {
      best_sim = s;
      best = static_cast<int>(j);
    }
  }
  return best;
}

TEST(ClosedVqa, PerfectMatchAndTieRule) {
  ClosedVqaItem it;
  it.id = "a";
  it.image = Eigen::Vector3d(0, 1, 0);
  it.answers = Eigen::Matrix3d::Identity();
  it.correct_index = 1;
  EXPECT_EQ(predict(it), 1);
  EXPECT_EQ(closed_vqa_accuracy({it}).accuracy, 1.0);
  it.answers.setOnes();
  EXPECT_EQ(predict(it), 0);
}

TEST(ClosedVqa, ScaleInvariance) {
  util::SplitMix64 rng(5);
  for (int t = 0; t < 200; ++t) {
    auto it = random_item(5, 8, rng);
    const int p = predict(it);
    it.image *= 3.7;
    it.answers.row(2) *= 0.01;
    it.answers.row(4) *= 250.0;
    EXPECT_EQ(predict(it), p);
  }
}

TEST(ClosedVqa, ZeroNormNamesItem) {
  ClosedVqaItem it;
  it.id = "item-42";
  it.image = Eigen::Vector2d(0, 0);
  it.answers = Eigen::Matrix2d::Identity();
  try {
    predict(it);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("item-42"), std::string::npos);
  }
  it.image = Eigen::Vector2d(1, 0);
  it.answers.resize(1, 2);
  EXPECT_THROW(predict(it), ValidationError);
}

TEST(ClosedVqa, MatchesBruteForceAndWorkerCount) {
  util::SplitMix64 rng(11);
  std::vector<ClosedVqaItem> items;
  for (int i = 0; i < 100; ++i) items.push_back(random_item(2 + i % 5, 6, rng, std::to_string(i)));
  const auto r1 = closed_vqa_accuracy(items, 1);
  const auto r4 = closed_vqa_accuracy(items, 4);
  EXPECT_EQ(r1.predictions, r4.predictions);
  EXPECT_EQ(r1.accuracy, r4.accuracy);
  int correct = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    EXPECT_EQ(r1.predictions[i], oracle_predict(items[i]));
    correct += oracle_predict(items[i]) == items[i].correct_index;
  }
  EXPECT_EQ(r1.accuracy, correct / 100.0);
}

TEST(ClosedVqa, RandomEmbeddingsGiveChanceAccuracy) {
  util::SplitMix64 rng(3);
  std::vector<ClosedVqaItem> items;
  for (int i = 0; i < 1000; ++i) items.push_back(random_item(4, 16, rng));
  const double acc = closed_vqa_accuracy(items).accuracy;
  const double se = std::sqrt(0.25 * 0.75 / 1000);
  EXPECT_NEAR(acc, 0.25, 3 * se);
}

TEST(ShuffleAnswers, DeterministicAndTracksCorrectAnswer) {
  util::SplitMix64 rng(8);
  std::vector<ClosedVqaItem> items;
  for (int i = 0; i < 50; ++i) {
    auto it = random_item(4, 4, rng, std::to_string(i));
    it.answer_texts = {"a", "b", "c", "d"};
    it.answers.row(it.correct_index) = it.image.transpose();  // perfect scorer
    items.push_back(it);
  }
  const auto s1 = shuffle_answers(items, 99);
  const auto s2 = shuffle_answers(items, 99);
  for (std::size_t i = 0; i < items.size(); ++i) {
    EXPECT_EQ(s1[i].answers, s2[i].answers);
    EXPECT_EQ(s1[i].answer_texts[s1[i].correct_index], items[i].answer_texts[items[i].correct_index]);
  }
  EXPECT_EQ(closed_vqa_accuracy(s1).accuracy, 1.0);
}

TEST(ShuffleAnswers, IndexZeroScorerIsAtChance) {
  // Identical candidates make predict() return 0 every time.
  std::vector<ClosedVqaItem> items(4000);
  for (std::size_t i = 0; i < items.size(); ++i) {
    items[i].id = std::to_string(i);
    items[i].image = Eigen::Vector2d(1, 0);
    items[i].answers = Eigen::MatrixXd::Ones(4, 2);
    items[i].correct_index = 0;
  }
  const double acc = closed_vqa_accuracy(shuffle_answers(items, 1)).accuracy;
  EXPECT_NEAR(acc, 0.25, 3 * std::sqrt(0.25 * 0.75 / 4000));
}

std::vector<std::size_t> oracle_ranks(const RetrievalSet& s, Direction dir) {
  const auto& Q = dir == Direction::ImageToText ? s.images : s.captions;
  const auto& C = dir == Direction::ImageToText ? s.captions : s.images;
  std::vector<std::size_t> out;
  for (Eigen::Index q = 0; q < Q.rows(); ++q) {
    std::vector<std::pair<double, Eigen::Index>> sims;
    for (Eigen::Index j = 0; j < C.rows(); ++j) {
      sims.emplace_back(C.row(j).dot(Q.row(q)) / (C.row(j).norm() * Q.row(q).norm()), j);
    }
    std::stable_sort(sims.begin(), sims.end(), [](auto& a, auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; r < sims.size(); ++r) {
      if (sims[r].second == q) out.push_back(r + 1);
    }
  }
  return out;
}

TEST(Recall, IdenticalSetsAndSingleton) {
  util::SplitMix64 rng(2);
  RetrievalSet s{random_unit_rows(20, 8, rng), {}};
  s.captions = s.images;
  EXPECT_EQ(recall_at_k(s, Direction::ImageToText, 1).recall, 1.0);
  EXPECT_EQ(recall_at_k(s, Direction::TextToImage, 1).recall, 1.0);
  RetrievalSet one{Eigen::MatrixXd::Ones(1, 3), Eigen::MatrixXd::Ones(1, 3) * -1};
  EXPECT_EQ(recall_at_k(one, Direction::ImageToText, 1).recall, 1.0);
  EXPECT_THROW(recall_at_k(one, Direction::ImageToText, 0), ValidationError);
}

TEST(Recall, MateAlwaysSecond) {
  // Image i sits between caption i and caption (i+1) mod n, closer to the latter.
  const int n = 12;
  RetrievalSet s{Eigen::MatrixXd(n, 2), Eigen::MatrixXd(n, 2)};
  const double step = 2 * std::numbers::pi / n;
  for (int i = 0; i < n; ++i) {
    s.captions.row(i) << std::cos(i * step), std::sin(i * step);
    const double a = i * step + 0.7 * step;
    s.images.row(i) << std::cos(a), std::sin(a);
  }
  EXPECT_EQ(recall_at_k(s, Direction::ImageToText, 1).recall, 0.0);
  EXPECT_EQ(recall_at_k(s, Direction::ImageToText, 2).recall, 1.0);
  EXPECT_EQ(recall_at_k(s, Direction::ImageToText, 10).recall, 1.0);
  EXPECT_EQ(mate_ranks(s, Direction::ImageToText), oracle_ranks(s, Direction::ImageToText));
}

TEST(Recall, MatchesFullSortOracleAndIsMonotone) {
  util::SplitMix64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    RetrievalSet s{random_unit_rows(100, 6, rng), random_unit_rows(100, 6, rng)};
    s.captions.topRows(30) = s.images.topRows(30) + 0.3 * random_unit_rows(30, 6, rng);
    for (auto dir : {Direction::ImageToText, Direction::TextToImage}) {
      const auto oracle = oracle_ranks(s, dir);
      EXPECT_EQ(mate_ranks(s, dir), oracle);
      double prev = 0;
      for (std::size_t k : {1u, 5u, 10u, 50u, 100u}) {
        const double r = recall_at_k(s, dir, k).recall;
        const auto hits = std::count_if(oracle.begin(), oracle.end(), [&](std::size_t x) { return x <= k; });
        EXPECT_EQ(r, hits / 100.0);
        EXPECT_GE(r, prev);
        prev = r;
      }
      EXPECT_EQ(prev, 1.0);
    }
  }
}

TEST(Recall, KBeyondNWarns) {
  util::SplitMix64 rng(1);
  RetrievalSet s{random_unit_rows(5, 3, rng), random_unit_rows(5, 3, rng)};
  std::vector<std::string> warnings;
  const auto r = recall_at_k(s, Direction::ImageToText, 100, [&](const std::string& w) { warnings.push_back(w); });
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Bootstrap, ConstantInputHasZeroWidth) {
  for (double c : {0.0, 1.0, 0.1, 0.7}) {
    const std::vector<double> v(37, c);
    for (auto m : {CiMethod::Percentile, CiMethod::BCa}) {
      const auto ci = bootstrap_ci(v, {.method = m});
      EXPECT_EQ(ci.low, ci.high);
      EXPECT_EQ(ci.low, ci.estimate);
    }
  }
}

TEST(Bootstrap, ContainsEstimateAndIsDeterministic) {
  util::SplitMix64 rng(4);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(5 + t * 7);
    for (auto& x : v) x = rng.uniform() < 0.3 ? 1.0 : 0.0;
    v[0] = 1.0;
    v[1] = 0.0;
    const auto ci = bootstrap_ci(v, {.seed = static_cast<std::uint64_t>(t)});
    EXPECT_LE(ci.low, ci.estimate);
    EXPECT_GE(ci.high, ci.estimate);
    const auto again = bootstrap_ci(v, {.seed = static_cast<std::uint64_t>(t)});
    EXPECT_EQ(ci.low, again.low);
    EXPECT_EQ(ci.high, again.high);
  }
}

TEST(Bootstrap, BernoulliWidthMatchesNormalApproximation) {
  util::SplitMix64 rng(21);
  std::vector<double> v(1000);
  for (auto& x : v) x = rng.uniform() < 0.5 ? 1.0 : 0.0;
  const double expected = 2 * 1.96 * 0.0158;
  for (auto m : {CiMethod::Percentile, CiMethod::BCa}) {
    const auto ci = bootstrap_ci(v, {.seed = 9, .method = m});
    EXPECT_NEAR(ci.high - ci.low, expected, 0.3 * expected);
  }
  EXPECT_THROW(bootstrap_ci(std::vector<double>{}), ValidationError);
}

TEST(Bootstrap, NormalQuantile) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
  EXPECT_NEAR(normal_quantile(0.001), -3.090232306167813, 1e-11);
  EXPECT_NEAR(normal_cdf(normal_quantile(0.3)), 0.3, 1e-15);
}

ParamSet params(std::vector<double> a, std::vector<double> b = {}) {
  ParamSet p;
  p["w"] = {"F64", {static_cast<std::int64_t>(a.size())}, std::move(a)};
  if (!b.empty()) p["b"] = {"F64", {static_cast<std::int64_t>(b.size())}, std::move(b)};
  return p;
}

TEST(WiseFt, ConvexCombination) {
  const auto base = params({2}, {1, -1});
  const auto adapted = params({4}, {3, 5});
  EXPECT_EQ(wise_ft_merge(base, adapted, 0.5).at("w").values, (std::vector<double>{3}));
  EXPECT_EQ(wise_ft_merge(base, adapted, 0.0), base);
  EXPECT_EQ(wise_ft_merge(base, adapted, 1.0), adapted);
  EXPECT_EQ(wise_ft_merge(base, adapted, 0.25).at("b").values, (std::vector<double>{1.5, 0.5}));
  EXPECT_THROW(wise_ft_merge(base, adapted, 1.5), ValidationError);
}

TEST(WiseFt, MismatchNamesParameter) {
  auto adapted = params({4}, {3, 5, 6});
  adapted["b"].shape = {3};
  try {
    wise_ft_merge(params({2}, {1, -1}), adapted, 0.5);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
  auto extra = params({4});
  extra["z"] = {"F64", {1}, {0}};
  try {
    wise_ft_merge(params({2}), extra, 0.5);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("'z'"), std::string::npos);
  }
}

TEST(Safetensors, RoundTripAllDtypes) {
  testing::TempDir dir;
  ParamSet p;
  p["a.f64"] = {"F64", {2, 2}, {1.0 / 3, -2.5, 1e300, 0}};
  p["b.f32"] = {"F32", {3}, {0.1, -7.25, 3e38}};
  p["c.f16"] = {"F16", {4}, {1.0, 65504.0, std::ldexp(1.0, -24), -0.333}};
  p["d.bf16"] = {"BF16", {2}, {1.0, 3.14159}};
  write_safetensors(dir / "m.safetensors", p, {{"format", "pt"}});
  const auto back = read_safetensors(dir / "m.safetensors");
  ASSERT_EQ(back.size(), 4u);
  for (const auto& [name, t] : p) {
    const auto& b = back.at(name);
    EXPECT_EQ(b.shape, t.shape);
    EXPECT_EQ(b.dtype, t.dtype);
    for (std::size_t i = 0; i < t.values.size(); ++i) EXPECT_EQ(b.values[i], round_to_dtype(t.values[i], t.dtype));
  }
  EXPECT_EQ(back.at("c.f16").values[0], 1.0);
  EXPECT_EQ(back.at("c.f16").values[1], 65504.0);
  EXPECT_EQ(back.at("c.f16").values[2], std::ldexp(1.0, -24));
  EXPECT_NEAR(back.at("c.f16").values[3], -0.333, 1e-3);
  EXPECT_EQ(back.at("d.bf16").values[1], 3.140625);
  EXPECT_EQ(back.at("b.f32").values[0], static_cast<double>(0.1f));
}

TEST(Safetensors, RejectsBadFiles) {
  testing::TempDir dir;
  util::write_file_atomic(dir / "x", "abc");
  EXPECT_THROW(read_safetensors(dir / "x"), ParseError);
  std::string bad(8, '\0');
  const std::string h = R"({"w":{"dtype":"F32","shape":[4],"data_offsets":[0,8]}})";
  const std::uint64_t len = h.size();
  std::memcpy(bad.data(), &len, 8);
  util::write_file_atomic(dir / "y", bad + h + std::string(8, '\0'));
  EXPECT_THROW(read_safetensors(dir / "y"), ParseError);
}

cluster::EmbeddingMatrix keyed(std::vector<std::string> keys, Eigen::MatrixXd v) {
  cluster::EmbeddingMatrix m;
  m.values = std::move(v);
  m.row_keys = std::move(keys);
  return m;
}

TEST(Classification, AveragesVariantsPerRun) {
  const auto task = task_from_json(nlohmann::json::parse(R"({
    "task_name": "toy",
    "classes": [{"label": "cat", "captions": ["a cat", "feline"]},
                {"label": "dog", "captions": ["a dog", "canine"]}],
    "items": [{"image_key": "i1", "class": "cat"}, {"image_key": "i2", "class": "dog"}]})"));
  Eigen::MatrixXd img(2, 2);
  img << 1, 0, 0, 1;
  Eigen::MatrixXd txt(4, 2);
  // Variant 1 aligned, variant 2 swapped.
  txt << 1, 0, 0, 1, 0, 1, 1, 0;
  const KeyedEmbeddings images(keyed({"i1", "i2"}, img));
  const KeyedEmbeddings texts(keyed({"a cat", "a dog", "feline", "canine"}, txt));
  const auto r = run_classification(task, images, texts, {.shuffle_seed = 3});
  EXPECT_EQ(r.variant_accuracy, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(r.accuracy, 0.5);
  EXPECT_EQ(r.ci.low, 0.5);  // every item scores 0.5 after averaging
  const auto j = nlohmann::json(r);
  EXPECT_EQ(j["accuracy"], 0.5);
}

TEST(Classification, TaskValidation) {
  EXPECT_THROW(task_from_json(nlohmann::json::parse(R"({"task_name":"t","classes":[{"label":"a","captions":["x"]}],"items":[]})")),
               ValidationError);
  EXPECT_THROW(task_from_json(nlohmann::json::parse(
                   R"({"task_name":"t","classes":[{"label":"a","captions":["x"]},{"label":"b","captions":["y","z"]}],"items":[]})")),
               ValidationError);
  EXPECT_THROW(task_from_json(nlohmann::json::parse(
                   R"({"task_name":"t","classes":[{"label":"a","captions":["x"]},{"label":"b","captions":["y"]}],"items":[{"image_key":"k","class":"c"}]})")),
               ValidationError);
  EXPECT_THROW(task_from_json(nlohmann::json::parse(R"({"classes":[]})")), SchemaError);
}

TEST(RetrievalReport, PairsByKey) {
  util::SplitMix64 rng(6);
  const Eigen::MatrixXd v = random_unit_rows(4, 5, rng);
  Eigen::MatrixXd reversed = v.colwise().reverse();
  const auto r = run_retrieval(keyed({"a", "b", "c", "d"}, v), keyed({"d", "c", "b", "a"}, reversed), {1, 10});
  ASSERT_EQ(r.entries.size(), 4u);
  for (const auto& e : r.entries) EXPECT_EQ(e.recall, 1.0);
  EXPECT_EQ(r.warnings.size(), 2u);
  EXPECT_THROW(run_retrieval(keyed({"a", "b", "c", "d"}, v), keyed({"a", "b", "c", "x"}, v)), ValidationError);
}

}  // namespace
}  // namespace pmcoa::eval
