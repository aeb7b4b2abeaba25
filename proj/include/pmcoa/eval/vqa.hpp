#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pmcoa::eval {

struct ClosedVqaItem {
  std::string id;
  Eigen::VectorXd image;              // d
  std::vector<std::string> answer_texts;
  Eigen::MatrixXd answers;            // M x d, row j embeds answer_texts[j]
  int correct_index = 0;
  std::uint64_t permutation_seed = 0;
};

// M >= 2, one correct index in range, consistent dimensions, finite values.
// Throws ValidationError naming the item.
void validate(const ClosedVqaItem& item);

// Argmax of cosine similarity between the image and each answer; the lowest
// index wins ties. A zero-norm vector raises ValidationError naming the item.
int predict(const ClosedVqaItem& item);

struct VqaResult {
  double accuracy = 0;
  std::vector<int> predictions;
  std::vector<double> scores;  // 1 correct, 0 wrong, per item
};

// Items are scored on `workers` threads; the sum is reduced in item order.
VqaResult closed_vqa_accuracy(const std::vector<ClosedVqaItem>& items, std::size_t workers = 1);

// Permutes each item's answers with a stream derived from (seed,
// permutation_seed, position) and moves correct_index along with its answer.
std::vector<ClosedVqaItem> shuffle_answers(std::vector<ClosedVqaItem> items, std::uint64_t seed);

}  // namespace pmcoa::eval
