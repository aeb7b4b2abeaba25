#include "pmcoa/pipeline/config.hpp"

#include <cstdlib>
#include <set>
#include <sstream>

#include "pmcoa/error.hpp"
#include "pmcoa/util/fs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pmcoa::pipeline {

const std::vector<std::string>& stage_order() {
  static const std::vector<std::string> v = {"ingest", "extract",         "enrich",  "store",     "embed",
                                             "cluster", "annotate-export", "resolve", "serialize", "eval"};
  return v;
}

const std::vector<std::string>& path_names() {
  static const std::vector<std::string> v = {"file_list",  "ingest_dir", "extract_dir", "enrich_dir", "articles_dir",
                                             "stats",      "embeddings", "cluster_dir", "export_dir", "annotations",
                                             "labels_dir", "shards_dir", "eval_dir"};
  return v;
}

const fs::path& PipelineConfig::path(const std::string& name) const {
  const auto it = paths.find(name);
  if (it == paths.end()) throw ValidationError("config: path '" + name + "' is not declared under \"paths\"");
  return it->second;
}

namespace {

// Reads one section, rejecting keys outside `allowed`.
class Section {
 public:
  Section(const json& doc, std::string name, std::set<std::string> allowed)
      : name_(std::move(name)), j_(doc.contains(name_) ? doc.at(name_) : json::object()) {
    if (!j_.is_object()) throw ValidationError("config: \"" + name_ + "\" must be an object");
    for (const auto& [k, v] : j_.items()) {
      if (!allowed.contains(k)) throw ValidationError("config: unknown key \"" + name_ + "." + k + "\"");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& raw() const { return j_; }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    if (!has(key)) return fallback;
    return get<T>(key);
  }

  template <typename T>
  T get(const std::string& key) const {
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw json::type_error::create(302, "expected a boolean", &v);
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw json::type_error::create(302, "expected an integer", &v);
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
            throw json::type_error::create(302, "expected a non-negative integer", &v);
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw json::type_error::create(302, "expected a number", &v);
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw json::type_error::create(302, "expected a string", &v);
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ValidationError("config: \"" + name_ + "." + key + "\": " + e.what());
    }
  }

  std::string where(const std::string& key) const { return name_ + "." + key; }

 private:
  std::string name_;
  json j_;
};

void require_positive(double v, const std::string& where) {
  if (!(v > 0)) throw ValidationError("config: \"" + where + "\" must be positive");
}

fs::path resolve_against(const fs::path& base, const fs::path& p) {
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

PipelineConfig config_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ValidationError("config: top level must be an object");
  static const std::set<std::string> top = {"work_dir", "paths",    "ingest",  "extract",   "enrich", "store",
                                            "embed",    "cluster",  "annotate", "resolve",  "serialize", "eval"};
  for (const auto& [k, v] : doc.items()) {
    if (!top.contains(k)) throw ValidationError("config: unknown top-level key \"" + k + "\"");
  }
  PipelineConfig c;
  const fs::path base = fs::absolute(base_dir);
  if (doc.contains("work_dir")) {
    if (!doc.at("work_dir").is_string()) throw ValidationError("config: \"work_dir\" must be a string");
    c.work_dir = resolve_against(base, doc.at("work_dir").get<std::string>());
  } else {
    c.work_dir = base.lexically_normal();
  }

  if (doc.contains("paths")) {
    const auto& p = doc.at("paths");
    if (!p.is_object()) throw ValidationError("config: \"paths\" must be an object");
    const std::set<std::string> known(path_names().begin(), path_names().end());
    for (const auto& [k, v] : p.items()) {
      if (!known.contains(k)) throw ValidationError("config: unknown path name \"paths." + k + "\"");
      if (!v.is_string() || v.get<std::string>().empty()) {
        throw ValidationError("config: \"paths." + k + "\" must be a non-empty string");
      }
      c.paths[k] = resolve_against(c.work_dir, v.get<std::string>());
    }
  }

  {
    Section s(doc, "ingest", {"mirror", "rate", "retries", "retry_base_ms", "keep", "workers"});
    c.mirror = env_or("PMCOA_MIRROR_URL", s.get<std::string>("mirror", ""));
    auto& p = c.ingest.policy;
    p.max_requests_per_second = s.get<double>("rate", p.max_requests_per_second);
    p.max_retries = s.get<int>("retries", p.max_retries);
    p.retry_base_delay = std::chrono::milliseconds(s.get<std::int64_t>("retry_base_ms", p.retry_base_delay.count()));
    if (s.has("keep")) {
      p.keep_extensions.clear();
      for (const auto& e : s.get<std::vector<std::string>>("keep")) p.keep_extensions.insert(util::to_lower(e));
    }
    c.ingest.workers = s.get<std::size_t>("workers", c.ingest.workers);
    try {
      p.validate();
    } catch (const Error& e) {
      throw ValidationError(std::string("config: ingest: ") + e.what());
    }
    require_positive(static_cast<double>(c.ingest.workers), s.where("workers"));
    c.sections["ingest"] = s.raw();
  }
  {
    Section s(doc, "extract", {"per_file"});
    c.extract_per_file = s.get<std::size_t>("per_file", c.extract_per_file);
    require_positive(static_cast<double>(c.extract_per_file), s.where("per_file"));
    c.sections["extract"] = s.raw();
  }
  {
    Section s(doc, "enrich", {"enabled", "service_url", "tool", "email", "batch_size", "retries", "retry_base_ms", "rate"});
    auto& e = c.enrich;
    e.enabled = s.get<bool>("enabled", e.enabled);
    e.service_url = env_or("PMCOA_ENTREZ_URL", s.get<std::string>("service_url", ""));
    e.tool = s.get<std::string>("tool", e.tool);
    e.email = s.get<std::string>("email", e.email);
    e.batch_size = s.get<std::size_t>("batch_size", e.batch_size);
    e.max_retries = s.get<int>("retries", e.max_retries);
    e.retry_base_delay = std::chrono::milliseconds(s.get<std::int64_t>("retry_base_ms", e.retry_base_delay.count()));
    e.rate = s.get<double>("rate", e.rate);
    require_positive(static_cast<double>(e.batch_size), s.where("batch_size"));
    require_positive(e.rate, s.where("rate"));
    if (e.max_retries < 0) throw ValidationError("config: \"enrich.retries\" must be non-negative");
    // The service URL may come from the environment, so it stays out of the fingerprint.
    auto raw = s.raw();
    raw.erase("service_url");
    c.sections["enrich"] = raw;
  }
  {
    Section s(doc, "store", {"per_file"});
    c.store_per_file = s.get<std::size_t>("per_file", c.store_per_file);
    require_positive(static_cast<double>(c.store_per_file), s.where("per_file"));
    c.sections["store"] = s.raw();
  }
  {
    Section s(doc, "embed", {"backend", "dim", "command", "workers"});
    auto& e = c.embed;
    e.backend = s.get<std::string>("backend", e.backend);
    e.dim = s.get<std::size_t>("dim", e.dim);
    e.command = s.get<std::vector<std::string>>("command", e.command);
    e.workers = s.get<unsigned>("workers", e.workers);
    if (e.backend != "hash" && e.backend != "process") {
      throw ValidationError("config: \"embed.backend\" must be \"hash\" or \"process\"");
    }
    if (e.backend == "process" && e.command.empty()) {
      throw ValidationError("config: \"embed.command\" is required for the process backend");
    }
    require_positive(static_cast<double>(e.dim), s.where("dim"));
    require_positive(e.workers, s.where("workers"));
    c.sections["embed"] = s.raw();
  }
  {
    Section s(doc, "cluster", {"k", "variance_target", "max_components", "seed", "max_iters"});
    if (s.has("seed")) {
      ClusterOptions o;
      o.seed = s.get<std::uint64_t>("seed");
      o.k = s.get<int>("k", o.k);
      o.variance_target = s.get<double>("variance_target", o.variance_target);
      if (s.has("max_components")) o.max_components = s.get<std::size_t>("max_components");
      o.max_iters = s.get<int>("max_iters", o.max_iters);
      require_positive(o.k, s.where("k"));
      require_positive(o.max_iters, s.where("max_iters"));
      if (!(o.variance_target > 0 && o.variance_target <= 1)) {
        throw ValidationError("config: \"cluster.variance_target\" must be in (0, 1]");
      }
      c.cluster = o;
    }
    c.sections["cluster"] = s.raw();
  }
  {
    Section s(doc, "annotate", {"sample_size", "seed"});
    c.annotate_sample_size = s.get<std::size_t>("sample_size", 30);
    require_positive(static_cast<double>(*c.annotate_sample_size), s.where("sample_size"));
    if (s.has("seed")) c.annotate_seed = s.get<std::uint64_t>("seed");
    c.sections["annotate-export"] = s.raw();
  }
  {
    Section s(doc, "resolve", {"taxonomy"});
    if (s.has("taxonomy")) c.taxonomy = resolve_against(c.work_dir, s.get<std::string>("taxonomy"));
    c.sections["resolve"] = s.raw();
  }
  {
    Section s(doc, "serialize",
              {"shard_size", "workers", "dedup", "filter", "balance_cap", "seed", "use_labels", "require_labels"});
    auto& o = c.serialize;
    o.shard_size = s.get<std::size_t>("shard_size", o.shard_size);
    o.workers = s.get<std::size_t>("workers", o.workers);
    o.dedup = s.get<bool>("dedup", o.dedup);
    o.require_labels = s.get<bool>("require_labels", o.require_labels);
    c.serialize_use_labels = s.get<bool>("use_labels", c.serialize_use_labels);
    if (s.has("filter")) {
      try {
        o.filter = shard::filter_spec_from_json(s.raw().at("filter"));
      } catch (const Error& e) {
        throw ValidationError(std::string("config: \"serialize.filter\": ") + e.what());
      }
    }
    if (s.has("balance_cap")) o.balance_cap = s.get<std::size_t>("balance_cap");
    if (s.has("seed")) {
      o.seed = s.get<std::uint64_t>("seed");
      c.serialize_seed_set = true;
    }
    if (o.filter && o.balance_cap) {
      throw ValidationError("config: \"serialize.filter\" and \"serialize.balance_cap\" are mutually exclusive");
    }
    if (o.require_labels && !c.serialize_use_labels) {
      throw ValidationError("config: \"serialize.require_labels\" needs \"serialize.use_labels\"");
    }
    require_positive(static_cast<double>(o.shard_size), s.where("shard_size"));
    require_positive(static_cast<double>(o.workers), s.where("workers"));
    if (o.balance_cap) require_positive(static_cast<double>(*o.balance_cap), s.where("balance_cap"));
    c.sections["serialize"] = s.raw();
  }
  {
    Section s(doc, "eval", {"bootstrap", "shuffle_seed", "workers", "tasks"});
    auto& o = c.eval;
    bool bootstrap_seed = false;
    if (s.has("bootstrap")) {
      Section b(s.raw(), "bootstrap", {"resamples", "level", "seed", "method"});
      o.bootstrap.resamples = b.get<std::size_t>("resamples", o.bootstrap.resamples);
      o.bootstrap.level = b.get<double>("level", o.bootstrap.level);
      if (b.has("seed")) {
        o.bootstrap.seed = b.get<std::uint64_t>("seed");
        bootstrap_seed = true;
      }
      const auto method = b.get<std::string>("method", "percentile");
      if (method == "percentile") o.bootstrap.method = eval::CiMethod::Percentile;
      else if (method == "bca") o.bootstrap.method = eval::CiMethod::BCa;
      else throw ValidationError("config: \"eval.bootstrap.method\" must be \"percentile\" or \"bca\"");
      require_positive(static_cast<double>(o.bootstrap.resamples), "eval.bootstrap.resamples");
      if (!(o.bootstrap.level > 0 && o.bootstrap.level < 1)) {
        throw ValidationError("config: \"eval.bootstrap.level\" must be in (0, 1)");
      }
    }
    if (s.has("shuffle_seed")) o.shuffle_seed = s.get<std::uint64_t>("shuffle_seed");
    c.eval_seeds_set = bootstrap_seed && s.has("shuffle_seed");
    o.workers = s.get<std::size_t>("workers", o.workers);
    require_positive(static_cast<double>(o.workers), s.where("workers"));
    if (s.has("tasks")) {
      const auto& tasks = s.raw().at("tasks");
      if (!tasks.is_array()) throw ValidationError("config: \"eval.tasks\" must be an array");
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        Section t(json{{"task", tasks[i]}}, "task", {"kind", "image_embeddings", "text_embeddings", "task", "ks"});
        const std::string where = "eval.tasks[" + std::to_string(i) + "]";
        EvalTaskSpec spec;
        if (!t.has("kind") || !t.has("image_embeddings") || !t.has("text_embeddings")) {
          throw ValidationError("config: \"" + where + "\" needs kind, image_embeddings and text_embeddings");
        }
        spec.kind = t.get<std::string>("kind");
        if (spec.kind != "classify" && spec.kind != "retrieve") {
          throw ValidationError("config: \"" + where + ".kind\" must be \"classify\" or \"retrieve\"");
        }
        spec.image_embeddings = resolve_against(c.work_dir, t.get<std::string>("image_embeddings"));
        spec.text_embeddings = resolve_against(c.work_dir, t.get<std::string>("text_embeddings"));
        if (spec.kind == "classify") {
          if (!t.has("task")) throw ValidationError("config: \"" + where + ".task\" is required for classify");
          spec.task = resolve_against(c.work_dir, t.get<std::string>("task"));
        }
        spec.ks = t.get<std::vector<std::size_t>>("ks", spec.ks);
        for (auto k : spec.ks) {
          if (k == 0) throw ValidationError("config: \"" + where + ".ks\" entries must be positive");
        }
        c.eval_tasks.push_back(std::move(spec));
      }
    }
    c.sections["eval"] = s.raw();
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(util::read_file(path), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ValidationError("config: " + path.string() + ": " + e.what());
  } catch (const IoError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return config_from_json(doc, fs::absolute(path).parent_path());
}

namespace {

std::vector<std::string> required_paths(const PipelineConfig& c, const std::string& stage) {
  if (stage == "ingest") return {"file_list", "ingest_dir"};
  if (stage == "extract") return {"ingest_dir", "extract_dir"};
  if (stage == "enrich") return {"extract_dir", "enrich_dir"};
  if (stage == "store") return {"enrich_dir", "articles_dir", "stats"};
  if (stage == "embed") return {"articles_dir", "ingest_dir", "embeddings"};
  if (stage == "cluster") return {"embeddings", "cluster_dir"};
  if (stage == "annotate-export") return {"cluster_dir", "export_dir"};
  if (stage == "resolve") return {"annotations", "cluster_dir", "labels_dir"};
  if (stage == "serialize") {
    std::vector<std::string> v = {"articles_dir", "ingest_dir", "shards_dir"};
    if (c.serialize_use_labels) v.push_back("labels_dir");
    return v;
  }
  if (stage == "eval") return {"eval_dir"};
  throw ValidationError("unknown stage '" + stage + "'");
}

}  // namespace

void validate_for(const PipelineConfig& c, const std::vector<std::string>& stages) {
  std::vector<std::string> problems;
  for (const auto& s : stages) {
    for (const auto& p : required_paths(c, s)) {
      if (!c.has_path(p)) problems.push_back("stage " + s + " needs paths." + p);
    }
    if (s == "cluster" && !c.cluster) problems.push_back("stage cluster needs an explicit cluster.seed");
    if (s == "annotate-export" && !c.annotate_seed) {
      problems.push_back("stage annotate-export needs an explicit annotate.seed");
    }
    if (s == "serialize" && c.serialize.balance_cap && !c.serialize_seed_set) {
      problems.push_back("stage serialize needs an explicit serialize.seed with balance_cap");
    }
    if (s == "eval") {
      if (!c.eval_seeds_set) problems.push_back("stage eval needs explicit eval.bootstrap.seed and eval.shuffle_seed");
      if (c.eval_tasks.empty()) problems.push_back("stage eval needs at least one entry in eval.tasks");
    }
  }
  if (problems.empty()) return;
  std::ostringstream msg;
  msg << "config validation failed:";
  for (const auto& p : problems) msg << "\n  " << p;
  throw ValidationError(msg.str());
}

std::vector<std::string> parse_stage_list(const std::string& csv) {
  if (csv.empty()) return stage_order();
  std::set<std::string> wanted;
  std::stringstream ss(csv);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    item = item.substr(b, e - b + 1);
    if (std::find(stage_order().begin(), stage_order().end(), item) == stage_order().end()) {
      throw ValidationError("unknown stage '" + item + "'");
    }
    wanted.insert(item);
  }
  if (wanted.empty()) throw ValidationError("no stages given");
  std::vector<std::string> out;
  for (const auto& s : stage_order()) {
    if (wanted.contains(s)) out.push_back(s);
  }
  return out;
}

}  // namespace pmcoa::pipeline
