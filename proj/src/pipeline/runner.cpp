#include "pmcoa/pipeline/runner.hpp"

#include <algorithm>
#include <chrono>

#include "pmcoa/enrich/entrez.hpp"
#include "pmcoa/ingest/rate_limiter.hpp"
#include "pmcoa/util/fs.hpp"
#include "pmcoa/util/hash.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pmcoa::pipeline {

void to_json(json& j, const StageResult& r) {
  j = {{"stage", r.stage}, {"status", r.status}, {"counts", r.counts}, {"seconds", r.seconds}};
  if (!r.error.empty()) j["error"] = r.error;
}

void to_json(json& j, const RunReport& r) {
  j = {{"exit_code", r.exit_code}, {"stages", r.stages}};
  if (!r.error.empty()) j["error"] = r.error;
}

std::vector<std::string> prerequisites(const PipelineConfig& c, const std::string& stage) {
  if (stage == "extract") return {"ingest"};
  if (stage == "enrich") return {"extract"};
  if (stage == "store") return {"enrich"};
  if (stage == "embed") return {"ingest", "store"};
  if (stage == "cluster") return {"embed"};
  if (stage == "annotate-export" || stage == "resolve") return {"cluster"};
  if (stage == "serialize") {
    if (c.serialize_use_labels) return {"ingest", "store", "resolve"};
    return {"ingest", "store"};
  }
  return {};
}

namespace {

fs::path with_suffix(const fs::path& base, const std::string& suffix) { return fs::path(base.string() + suffix); }

// Inputs read from outside the pipeline.
std::vector<fs::path> external_inputs(const PipelineConfig& c, const std::string& stage) {
  if (stage == "ingest") return {c.path("file_list")};
  if (stage == "resolve") {
    std::vector<fs::path> v = {c.path("annotations")};
    if (c.taxonomy) v.push_back(*c.taxonomy);
    return v;
  }
  if (stage == "eval") {
    std::vector<fs::path> v;
    for (const auto& t : c.eval_tasks) {
      for (const auto& h : {t.image_embeddings, t.text_embeddings}) {
        v.push_back(h);
        // Header <base>.json names <base>.f32 and <base>.keys.
        if (h.extension() == ".json") {
          v.push_back(fs::path(h).replace_extension(".f32"));
          v.push_back(fs::path(h).replace_extension(".keys"));
        }
      }
      if (!t.task.empty()) v.push_back(t.task);
    }
    return v;
  }
  return {};
}

std::vector<std::string> path_keys(const PipelineConfig& c, const std::string& stage) {
  std::vector<std::string> out;
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"ingest", {"file_list", "ingest_dir"}},
      {"extract", {"ingest_dir", "extract_dir"}},
      {"enrich", {"extract_dir", "enrich_dir"}},
      {"store", {"enrich_dir", "articles_dir", "stats"}},
      {"embed", {"articles_dir", "ingest_dir", "embeddings"}},
      {"cluster", {"embeddings", "cluster_dir"}},
      {"annotate-export", {"cluster_dir", "export_dir"}},
      {"resolve", {"annotations", "cluster_dir", "labels_dir"}},
      {"serialize", {"articles_dir", "ingest_dir", "labels_dir", "shards_dir"}},
      {"eval", {"eval_dir"}}};
  for (const auto& k : keys.at(stage)) {
    if (c.has_path(k)) out.push_back(k);
  }
  return out;
}

json read_marker(const fs::path& p) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return nullptr;
  try {
    auto j = json::parse(util::read_file(p));
    if (j.is_object() && j.contains("input_fingerprint") && j.contains("output_hash")) return j;
  } catch (const std::exception&) {
  }
  return nullptr;
}

void hash_path(util::Sha256& h, const fs::path& root) {
  std::error_code ec;
  if (fs::is_regular_file(root, ec)) {
    h.update("file\0");
    h.update(util::sha256_file(root));
    return;
  }
  if (!fs::is_directory(root, ec)) {
    h.update("absent\0");
    return;
  }
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.emplace_back(fs::relative(e.path(), root).generic_string(), e.path());
  }
  std::sort(files.begin(), files.end());
  h.update("dir\0");
  for (const auto& [rel, p] : files) {
    h.update(rel);
    h.update(std::string_view("\0", 1));
    h.update(util::sha256_file(p));
  }
}

bool outputs_present(const std::vector<fs::path>& outs) {
  std::error_code ec;
  return std::all_of(outs.begin(), outs.end(), [&](const fs::path& p) { return fs::exists(p, ec); });
}

// Prerequisite completed and untouched since.
json verified_marker(const PipelineConfig& c, const std::string& stage, const std::string& needed_by) {
  const auto marker = read_marker(marker_path(c, stage));
  const auto outs = stage_outputs(c, stage);
  if (marker.is_null() || !outputs_present(outs)) {
    throw MissingPrerequisiteError("stage " + needed_by + " needs the output of stage " + stage +
                                       ", which has not completed; run stage " + stage + " first",
                                   stage);
  }
  if (content_hash(outs) != marker.at("output_hash").get<std::string>()) {
    throw StaleInputError("stale input: the output of stage " + stage + " changed after it completed; rerun stage " +
                              stage + " before " + needed_by,
                          stage);
  }
  return marker;
}

std::string fingerprint(const PipelineConfig& c, const std::string& stage) {
  json f = {{"stage", stage}, {"section", c.sections.contains(stage) ? c.sections.at(stage) : json::object()}};
  json paths = json::object();
  for (const auto& k : path_keys(c, stage)) paths[k] = c.path(k).generic_string();
  f["paths"] = paths;
  json prereqs = json::object();
  for (const auto& p : prerequisites(c, stage)) {
    const auto m = read_marker(marker_path(c, p));
    prereqs[p] = m.is_null() ? json(nullptr) : m.at("output_hash");
  }
  f["prerequisites"] = prereqs;
  json ext = json::array();
  for (const auto& p : external_inputs(c, stage)) ext.push_back(content_hash({p}));
  f["external"] = ext;
  return util::sha256_hex(f.dump());
}

StageCounts execute(const PipelineConfig& c, const std::string& stage, const RunHooks& hooks) {
  const Log& log = hooks.log;
  if (stage == "ingest") {
    std::unique_ptr<ingest::Transport> owned;
    ingest::Transport* t = hooks.transport;
    if (!t) {
      owned = ingest::make_transport(c.mirror);
      t = owned.get();
    }
    return run_ingest(c.path("file_list"), *t, c.path("ingest_dir"), c.ingest, log);
  }
  if (stage == "extract") return run_extract(c.path("ingest_dir"), c.path("extract_dir"), c.extract_per_file, log);
  if (stage == "enrich") {
    std::unique_ptr<enrich::MetadataService> owned;
    enrich::MetadataService* svc = hooks.metadata;
    if (!svc && c.enrich.enabled) {
      owned = std::make_unique<enrich::HttpMetadataService>(c.enrich.service_url, c.enrich.tool, c.enrich.email);
      svc = owned.get();
    }
    ingest::RateLimiter limiter(c.enrich.rate);
    enrich::FetchOptions fo;
    fo.retry = {c.enrich.max_retries, c.enrich.retry_base_delay};
    fo.limiter = &limiter;
    fo.log = log;
    return run_enrich(c.path("extract_dir"), c.path("enrich_dir"), svc, c.enrich.batch_size, fo, log);
  }
  if (stage == "store") {
    return run_store(c.path("enrich_dir"), c.path("articles_dir"), c.path("stats"), c.store_per_file, log);
  }
  if (stage == "embed") {
    std::unique_ptr<cluster::EmbeddingBackend> owned;
    cluster::EmbeddingBackend* b = hooks.backend;
    if (!b) {
      owned = make_backend(c.embed);
      b = owned.get();
    }
    return run_embed(c.path("articles_dir"), media_root(c.path("ingest_dir")), *b, c.path("embeddings"),
                     c.embed.workers, log);
  }
  if (stage == "cluster") {
    return run_cluster(with_suffix(c.path("embeddings"), ".json"), c.path("cluster_dir"), *c.cluster, log);
  }
  if (stage == "annotate-export") {
    return run_annotate_export(c.path("cluster_dir"), c.path("export_dir"), *c.annotate_sample_size,
                               *c.annotate_seed, log);
  }
  if (stage == "resolve") {
    const auto taxonomy = c.taxonomy ? label::Taxonomy::load(*c.taxonomy) : label::Taxonomy::builtin();
    return run_resolve(c.path("annotations"), c.path("cluster_dir"), taxonomy, c.path("labels_dir"), log);
  }
  if (stage == "serialize") {
    std::optional<fs::path> labels;
    if (c.serialize_use_labels) labels = c.path("labels_dir") / "labels.json";
    return run_serialize(c.path("articles_dir"), media_root(c.path("ingest_dir")), labels, c.path("shards_dir"),
                         c.serialize, log);
  }
  if (stage == "eval") return run_eval(c.eval_tasks, c.path("eval_dir"), c.eval, log);
  throw ValidationError("unknown stage '" + stage + "'");
}

void write_report(const PipelineConfig& c, const RunReport& r) {
  std::error_code ec;
  fs::create_directories(c.work_dir, ec);
  try {
    util::write_file_atomic(c.work_dir / "run_report.json", json(r).dump(2) + "\n");
  } catch (const std::exception&) {
  }
}

}  // namespace

std::vector<fs::path> stage_outputs(const PipelineConfig& c, const std::string& stage) {
  if (stage == "ingest") return {c.path("ingest_dir")};
  if (stage == "extract") return {c.path("extract_dir")};
  if (stage == "enrich") return {c.path("enrich_dir")};
  if (stage == "store") return {c.path("articles_dir"), c.path("stats")};
  if (stage == "embed") {
    const auto& b = c.path("embeddings");
    return {with_suffix(b, ".json"), with_suffix(b, ".f32"), with_suffix(b, ".keys")};
  }
  if (stage == "cluster") return {c.path("cluster_dir")};
  if (stage == "annotate-export") return {c.path("export_dir")};
  if (stage == "resolve") return {c.path("labels_dir")};
  if (stage == "serialize") return {c.path("shards_dir")};
  if (stage == "eval") return {c.path("eval_dir")};
  throw ValidationError("unknown stage '" + stage + "'");
}

std::string content_hash(const std::vector<fs::path>& paths) {
  util::Sha256 h;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    h.update("#" + std::to_string(i) + "\n");
    hash_path(h, paths[i]);
  }
  return h.hex_digest();
}

fs::path marker_path(const PipelineConfig& c, const std::string& stage) {
  return c.work_dir / ".pmcoa-state" / (stage + ".done.json");
}

RunReport run(const PipelineConfig& c, const std::vector<std::string>& requested, const RunHooks& hooks) {
  RunReport report;
  const auto say = [&](const std::string& m) {
    if (hooks.log) hooks.log(m);
  };
  std::vector<std::string> stages;
  try {
    for (const auto& s : stage_order()) {
      if (std::find(requested.begin(), requested.end(), s) != requested.end()) stages.push_back(s);
    }
    for (const auto& s : requested) {
      if (std::find(stage_order().begin(), stage_order().end(), s) == stage_order().end()) {
        throw ValidationError("unknown stage '" + s + "'");
      }
    }
    validate_for(c, stages);
    const auto wants = [&](const std::string& s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
    if (wants("ingest") && !hooks.transport && c.mirror.empty()) {
      throw ValidationError("config validation failed:\n  stage ingest needs ingest.mirror (or PMCOA_MIRROR_URL)");
    }
    if (wants("enrich") && !hooks.metadata && c.enrich.enabled && c.enrich.service_url.empty()) {
      throw ValidationError(
          "config validation failed:\n  stage enrich needs enrich.service_url (or PMCOA_ENTREZ_URL), or "
          "enrich.enabled = false");
    }
    for (const auto& s : stages) {
      for (const auto& p : external_inputs(c, s)) {
        std::error_code ec;
        if (!fs::is_regular_file(p, ec)) throw ValidationError("stage " + s + " input not found: " + p.string());
      }
      for (const auto& p : prerequisites(c, s)) {
        if (!wants(p)) verified_marker(c, p, s);
      }
    }
  } catch (const ValidationError& e) {
    report.exit_code = 2;
    report.error = e.what();
    say(report.error);
    write_report(c, report);
    return report;
  }

  fs::create_directories(c.work_dir / ".pmcoa-state");
  for (const auto& s : stages) {
    StageResult r;
    r.stage = s;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto fp = fingerprint(c, s);
      const auto marker = read_marker(marker_path(c, s));
      const auto outs = stage_outputs(c, s);
      if (!marker.is_null() && marker.at("input_fingerprint") == fp && outputs_present(outs) &&
          content_hash(outs) == marker.at("output_hash").get<std::string>()) {
        r.status = "skipped";
        if (marker.contains("counts")) {
          const auto& m = marker.at("counts");
          r.counts.in = m.value("in", std::size_t{0});
          r.counts.written = m.value("written", std::size_t{0});
          r.counts.skipped = m.value("skipped", std::size_t{0});
          r.counts.details = m.value("details", json::object());
        }
        say(s + ": up to date, skipped");
      } else {
        fs::remove(marker_path(c, s));
        say(s + ": running");
        r.counts = execute(c, s, hooks);
        const json m = {{"stage", s},
                        {"input_fingerprint", fp},
                        {"output_hash", content_hash(outs)},
                        {"counts", r.counts}};
        util::write_file_atomic(marker_path(c, s), m.dump(2) + "\n");
        r.status = "ok";
      }
    } catch (const std::exception& e) {
      r.status = "failed";
      r.error = e.what();
      report.exit_code = 3;
      report.error = "stage " + s + " failed: " + e.what();
      say(report.error);
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.stages.push_back(std::move(r));
    if (report.exit_code != 0) break;
  }
  write_report(c, report);
  return report;
}

}  // namespace pmcoa::pipeline
