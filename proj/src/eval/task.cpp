#include "pmcoa/eval/task.hpp"

#include <set>

#include "pmcoa/error.hpp"
#include "pmcoa/eval/vqa.hpp"
#include "pmcoa/util/fs.hpp"
#include "pmcoa/util/rng.hpp"

namespace pmcoa::eval {

ClassificationTask task_from_json(const nlohmann::json& j) {
  ClassificationTask t;
  try {
    t.task_name = j.at("task_name").get<std::string>();
    for (const auto& c : j.at("classes")) {
      t.classes.push_back({c.at("label").get<std::string>(), c.at("captions").get<std::vector<std::string>>()});
    }
    for (const auto& it : j.at("items")) {
      t.items.push_back({it.at("image_key").get<std::string>(), it.at("class").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("task spec: ") + e.what());
  }
  if (t.classes.size() < 2) throw ValidationError("task " + t.task_name + ": needs at least 2 classes");
  std::set<std::string> labels;
  for (const auto& c : t.classes) {
    if (!labels.insert(c.label).second) throw ValidationError("task " + t.task_name + ": duplicate class " + c.label);
    if (c.captions.empty()) throw ValidationError("task " + t.task_name + ": class " + c.label + " has no captions");
    if (c.captions.size() != t.classes[0].captions.size()) {
      throw ValidationError("task " + t.task_name + ": class " + c.label + " has a different number of caption variants");
    }
  }
  for (const auto& it : t.items) {
    if (!labels.contains(it.class_label)) {
      throw ValidationError("task " + t.task_name + ": item " + it.image_key + " has unknown class " + it.class_label);
    }
  }
  return t;
}

ClassificationTask load_task(const std::filesystem::path& path) {
  try {
    return task_from_json(nlohmann::json::parse(util::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), static_cast<long long>(e.byte));
  }
}

KeyedEmbeddings::KeyedEmbeddings(cluster::EmbeddingMatrix m) : m_(std::move(m)) {
  m_.validate();
  for (std::size_t i = 0; i < m_.row_keys.size(); ++i) index_[m_.row_keys[i]] = static_cast<Eigen::Index>(i);
}

Eigen::VectorXd KeyedEmbeddings::row(const std::string& key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) throw NotFoundError("no embedding for key '" + key + "'");
  return m_.values.row(it->second).transpose();
}

ClassificationReport run_classification(const ClassificationTask& task, const KeyedEmbeddings& images,
                                        const KeyedEmbeddings& texts, const EvalOptions& options) {
  ClassificationReport r;
  r.task_name = task.task_name;
  r.items = task.items.size();
  r.classes = task.classes.size();
  if (task.items.empty()) throw ValidationError("task " + task.task_name + ": no items");
  std::map<std::string, int> class_index;
  for (std::size_t c = 0; c < task.classes.size(); ++c) class_index[task.classes[c].label] = static_cast<int>(c);

  const std::size_t variants = task.classes[0].captions.size();
  std::vector<double> per_item(task.items.size(), 0.0);
  for (std::size_t v = 0; v < variants; ++v) {
    const auto d = texts.matrix().d();
    Eigen::MatrixXd answers(static_cast<Eigen::Index>(task.classes.size()), static_cast<Eigen::Index>(d));
    std::vector<std::string> answer_texts;
    for (std::size_t c = 0; c < task.classes.size(); ++c) {
      answers.row(static_cast<Eigen::Index>(c)) = texts.row(task.classes[c].captions[v]).transpose();
      answer_texts.push_back(task.classes[c].captions[v]);
    }
    std::vector<ClosedVqaItem> items;
    items.reserve(task.items.size());
    for (std::size_t i = 0; i < task.items.size(); ++i) {
      const auto& it = task.items[i];
      items.push_back({it.image_key, images.row(it.image_key), answer_texts, answers, class_index.at(it.class_label), i});
    }
    const auto res = closed_vqa_accuracy(shuffle_answers(std::move(items), util::mix_seed(options.shuffle_seed, v)),
                                         options.workers);
    r.variant_accuracy.push_back(res.accuracy);
    for (std::size_t i = 0; i < per_item.size(); ++i) per_item[i] += res.scores[i] / static_cast<double>(variants);
  }
  double sum = 0;
  for (double a : r.variant_accuracy) sum += a;
  r.accuracy = sum / static_cast<double>(variants);
  r.ci = bootstrap_ci(per_item, options.bootstrap);
  return r;
}

RetrievalReport run_retrieval(const cluster::EmbeddingMatrix& images, const cluster::EmbeddingMatrix& captions,
                              const std::vector<std::size_t>& ks, const EvalOptions& options) {
  images.validate();
  captions.validate();
  if (images.n() != captions.n()) throw ValidationError("retrieval: image and caption sets differ in size");
  const KeyedEmbeddings cap(captions);
  RetrievalSet set;
  set.images = images.values;
  set.captions.resize(images.values.rows(), captions.values.cols());
  for (std::size_t i = 0; i < images.n(); ++i) {
    if (!cap.contains(images.row_keys[i])) {
      throw ValidationError("retrieval: image key '" + images.row_keys[i] + "' has no caption embedding");
    }
    set.captions.row(static_cast<Eigen::Index>(i)) = cap.row(images.row_keys[i]).transpose();
  }
  RetrievalReport r;
  r.pairs = images.n();
  for (auto dir : {Direction::ImageToText, Direction::TextToImage}) {
    const auto ranks = mate_ranks(set, dir);
    for (auto k : ks) {
      if (k == 0) throw ValidationError("retrieval: k must be >= 1");
      if (k > r.pairs) r.warnings.push_back("recall@" + std::to_string(k) + " exceeds the " + std::to_string(r.pairs) + " candidates");
      std::vector<double> hits;
      for (auto rank : ranks) hits.push_back(rank <= k ? 1.0 : 0.0);
      const auto ci = bootstrap_ci(hits, options.bootstrap);
      r.entries.push_back({dir, k, ci.estimate, ci});
    }
  }
  return r;
}

void to_json(nlohmann::json& j, const ClassificationReport& r) {
  j = {{"task_name", r.task_name},
       {"metric", "closed_vqa_accuracy"},
       {"items", r.items},
       {"classes", r.classes},
       {"variant_accuracy", r.variant_accuracy},
       {"accuracy", r.accuracy},
       {"ci", r.ci}};
}

void to_json(nlohmann::json& j, const RetrievalReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"direction", to_string(e.direction)}, {"k", e.k}, {"recall", e.recall}, {"ci", e.ci}});
  }
  j = {{"metric", "recall_at_k"}, {"pairs", r.pairs}, {"results", entries}, {"warnings", r.warnings}};
}

}  // namespace pmcoa::eval
