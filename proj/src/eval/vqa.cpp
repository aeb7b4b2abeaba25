#include "pmcoa/eval/vqa.hpp"

#include <numeric>
#include <thread>

#include "pmcoa/error.hpp"
#include "pmcoa/util/rng.hpp"

namespace pmcoa::eval {

void validate(const ClosedVqaItem& item) {
  const auto M = item.answers.rows();
  if (M < 2) throw ValidationError("item " + item.id + ": needs at least 2 answers");
  if (!item.answer_texts.empty() && static_cast<Eigen::Index>(item.answer_texts.size()) != M) {
    throw ValidationError("item " + item.id + ": answer texts and embeddings differ in count");
  }
  if (item.correct_index < 0 || item.correct_index >= M) {
    throw ValidationError("item " + item.id + ": correct index out of range");
  }
  if (item.answers.cols() != item.image.size()) {
    throw ValidationError("item " + item.id + ": image and answer embeddings differ in dimension");
  }
  if (!item.image.allFinite() || !item.answers.allFinite()) {
    throw ValidationError("item " + item.id + ": non-finite embedding");
  }
}

int predict(const ClosedVqaItem& item) {
  validate(item);
  const double in = item.image.norm();
  if (in == 0.0) throw ValidationError("item " + item.id + ": zero-norm image embedding");
  int best = 0;
  double best_sim = 0;
  for (Eigen::Index j = 0; j < item.answers.rows(); ++j) {
    const double an = item.answers.row(j).norm();
    if (an == 0.0) throw ValidationError("item " + item.id + ": zero-norm embedding for answer " + std::to_string(j));
    const double sim = item.answers.row(j).dot(item.image) / (an * in);
    if (j == 0 || sim > best_sim) {
      best = static_cast<int>(j);
      best_sim = sim;
    }
  }
  return best;
}

VqaResult closed_vqa_accuracy(const std::vector<ClosedVqaItem>& items, std::size_t workers) {
  VqaResult r;
  r.predictions.assign(items.size(), 0);
  r.scores.assign(items.size(), 0.0);
  if (items.empty()) return r;
  workers = std::max<std::size_t>(1, std::min(workers, items.size()));
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < items.size(); i += workers) {
            r.predictions[i] = predict(items[i]);
            r.scores[i] = r.predictions[i] == items[i].correct_index ? 1.0 : 0.0;
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  r.accuracy = std::accumulate(r.scores.begin(), r.scores.end(), 0.0) / static_cast<double>(items.size());
  return r;
}

std::vector<ClosedVqaItem> shuffle_answers(std::vector<ClosedVqaItem> items, std::uint64_t seed) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& item = items[i];
    const auto M = static_cast<std::size_t>(item.answers.rows());
    std::vector<std::size_t> perm(M);
    std::iota(perm.begin(), perm.end(), 0);
    util::SplitMix64 rng(util::mix_seed(util::mix_seed(seed, item.permutation_seed), i));
    util::shuffle(perm, rng);
    Eigen::MatrixXd answers(item.answers.rows(), item.answers.cols());
    std::vector<std::string> texts(item.answer_texts.size());
    int correct = 0;
    for (std::size_t j = 0; j < M; ++j) {
      answers.row(static_cast<Eigen::Index>(j)) = item.answers.row(static_cast<Eigen::Index>(perm[j]));
      if (!texts.empty()) texts[j] = std::move(item.answer_texts[perm[j]]);
      if (static_cast<int>(perm[j]) == item.correct_index) correct = static_cast<int>(j);
    }
    item.answers = std::move(answers);
    item.answer_texts = std::move(texts);
    item.correct_index = correct;
  }
  return items;
}

}  // namespace pmcoa::eval
