#include "pmcoa/eval/retrieval.hpp"

#include "pmcoa/error.hpp"

namespace pmcoa::eval {

std::string to_string(Direction d) { return d == Direction::ImageToText ? "image_to_text" : "text_to_image"; }

namespace {

Eigen::MatrixXd unit_rows(const Eigen::MatrixXd& m, const char* what) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw ValidationError(std::string("zero-norm or non-finite ") + what + " embedding at row " + std::to_string(i));
    }
    out.row(i) /= n;
  }
  return out;
}

}  // namespace

std::vector<std::size_t> mate_ranks(const RetrievalSet& set, Direction direction) {
  if (set.images.rows() != set.captions.rows()) throw ValidationError("retrieval set: image and caption counts differ");
  if (set.images.cols() != set.captions.cols()) throw ValidationError("retrieval set: embedding dimensions differ");
  const auto img = unit_rows(set.images, "image");
  const auto cap = unit_rows(set.captions, "caption");
  const auto& queries = direction == Direction::ImageToText ? img : cap;
  const auto& candidates = direction == Direction::ImageToText ? cap : img;
  const Eigen::Index n = queries.rows();
  std::vector<std::size_t> ranks(static_cast<std::size_t>(n));
  for (Eigen::Index q = 0; q < n; ++q) {
    const Eigen::VectorXd sims = candidates * queries.row(q).transpose();
    const double mate = sims(q);
    std::size_t rank = 1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (sims(j) > mate || (sims(j) == mate && j < q)) ++rank;
    }
    ranks[static_cast<std::size_t>(q)] = rank;
  }
  return ranks;
}

RecallResult recall_at_k(const RetrievalSet& set, Direction direction, std::size_t k,
                         const std::function<void(const std::string&)>& warn) {
  if (k == 0) throw ValidationError("recall_at_k: k must be >= 1");
  RecallResult r;
  r.ranks = mate_ranks(set, direction);
  const std::size_t n = r.ranks.size();
  if (k > n && warn) warn("recall@" + std::to_string(k) + " exceeds the " + std::to_string(n) + " candidates");
  std::size_t hits = 0;
  for (auto rank : r.ranks) {
    r.hits.push_back(rank <= k ? 1.0 : 0.0);
    hits += rank <= k;
  }
  r.recall = n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  return r;
}

}  // namespace pmcoa::eval
