#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pmcoa::eval {

// Row i of `images` and row i of `captions` form the ground-truth pair.
struct RetrievalSet {
  Eigen::MatrixXd images;
  Eigen::MatrixXd captions;
};

enum class Direction { ImageToText, TextToImage };
std::string to_string(Direction d);

struct RecallResult {
  double recall = 0;
  std::vector<std::size_t> ranks;  // 1-based rank of each query's mate
  std::vector<double> hits;        // 1 when rank <= k
};

// Candidates are ranked by cosine similarity, descending, ties by lower
// index. k > N is allowed (every mate is a hit) and reported through `warn`.
// ValidationError on k == 0, mismatched shapes, or zero-norm rows.
RecallResult recall_at_k(const RetrievalSet& set, Direction direction, std::size_t k,
                         const std::function<void(const std::string&)>& warn = {});

// Ranks only; recall for several k values can be read off them.
std::vector<std::size_t> mate_ranks(const RetrievalSet& set, Direction direction);

}  // namespace pmcoa::eval
