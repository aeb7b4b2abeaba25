#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmcoa/cluster/embedding.hpp"
#include "pmcoa/eval/bootstrap.hpp"
#include "pmcoa/eval/retrieval.hpp"

namespace pmcoa::eval {

struct TaskClass {
  std::string label;
  std::vector<std::string> captions;  // caption variants; every class has the same count
};

struct TaskItem {
  std::string image_key;
  std::string class_label;
};

// {task_name, classes: [{label, captions: [v1, v2]}], items: [{image_key, class}]}
struct ClassificationTask {
  std::string task_name;
  std::vector<TaskClass> classes;
  std::vector<TaskItem> items;
};

ClassificationTask task_from_json(const nlohmann::json& j);  // SchemaError / ValidationError
ClassificationTask load_task(const std::filesystem::path& path);

// Row lookup by key over an embedding matrix.
class KeyedEmbeddings {
 public:
  explicit KeyedEmbeddings(cluster::EmbeddingMatrix m);
  // NotFoundError naming the key.
  Eigen::VectorXd row(const std::string& key) const;
  bool contains(const std::string& key) const { return index_.contains(key); }
  const cluster::EmbeddingMatrix& matrix() const { return m_; }

 private:
  cluster::EmbeddingMatrix m_;
  std::map<std::string, Eigen::Index> index_;
};

struct EvalOptions {
  BootstrapOptions bootstrap;
  std::uint64_t shuffle_seed = 0;
  std::size_t workers = 1;
};

struct ClassificationReport {
  std::string task_name;
  std::size_t items = 0;
  std::size_t classes = 0;
  std::vector<double> variant_accuracy;  // one per caption variant
  double accuracy = 0;                   // mean over variants
  Interval ci;                           // over per-item scores averaged across variants
};

// Each caption variant is a full closed-VQA run with every class caption as
// a candidate (answers shuffled per item); the reported accuracy is the mean
// of the per-variant accuracies. Text embeddings are looked up by caption text.
ClassificationReport run_classification(const ClassificationTask& task, const KeyedEmbeddings& images,
                                        const KeyedEmbeddings& texts, const EvalOptions& options = {});

struct RecallEntry {
  Direction direction;
  std::size_t k;
  double recall;
  Interval ci;
};

struct RetrievalReport {
  std::size_t pairs = 0;
  std::vector<RecallEntry> entries;
  std::vector<std::string> warnings;
};

// Pairs rows with equal keys; both matrices must carry the same key set.
RetrievalReport run_retrieval(const cluster::EmbeddingMatrix& images, const cluster::EmbeddingMatrix& captions,
                              const std::vector<std::size_t>& ks = {1, 10, 100}, const EvalOptions& options = {});

void to_json(nlohmann::json& j, const ClassificationReport& r);
void to_json(nlohmann::json& j, const RetrievalReport& r);

}  // namespace pmcoa::eval
