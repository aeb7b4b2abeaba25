#include "pmcoa/pipeline/stages.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "pmcoa/cluster/io.hpp"
#include "pmcoa/cluster/kmeans.hpp"
#include "pmcoa/cluster/pca.hpp"
#include "pmcoa/enrich/apply.hpp"
#include "pmcoa/error.hpp"
#include "pmcoa/eval/task.hpp"
#include "pmcoa/ingest/extract.hpp"
#include "pmcoa/ingest/fetch.hpp"
#include "pmcoa/ingest/file_list.hpp"
#include "pmcoa/ingest/rate_limiter.hpp"
#include "pmcoa/ingest/retry.hpp"
#include "pmcoa/jats/parse.hpp"
#include "pmcoa/label/annotation_log.hpp"
#include "pmcoa/label/disagreement.hpp"
#include "pmcoa/label/resolve.hpp"
#include "pmcoa/shard/columnar.hpp"
#include "pmcoa/shard/writer.hpp"
#include "pmcoa/store/jsonl.hpp"
#include "pmcoa/store/stats.hpp"
#include "pmcoa/util/fs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pmcoa::pipeline {

void to_json(json& j, const StageCounts& c) {
  j = {{"in", c.in}, {"written", c.written}, {"skipped", c.skipped}};
  if (!c.details.empty()) j["details"] = c.details;
}

namespace {

void say(const Log& log, const std::string& msg) {
  if (log) log(msg);
}

void conservation(const Log& log, const std::string& stage, const StageCounts& c) {
  say(log, stage + ": in=" + std::to_string(c.in) + " written=" + std::to_string(c.written) +
               " skipped=" + std::to_string(c.skipped));
}

void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  util::write_file_atomic(path, out);
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> out;
  const auto data = util::read_file(path);
  std::size_t pos = 0, line = 0;
  while (pos < data.size()) {
    auto nl = data.find('\n', pos);
    if (nl == std::string::npos) nl = data.size();
    ++line;
    const std::string_view s(data.data() + pos, nl - pos);
    pos = nl + 1;
    if (s.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(json::parse(s));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line) + ": " + e.what(), static_cast<long long>(line));
    }
  }
  return out;
}

json read_json(const fs::path& path) {
  try {
    return json::parse(util::read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), static_cast<long long>(e.byte));
  }
}

}  // namespace

fs::path media_root(const fs::path& ingest_dir) { return ingest_dir / "extracted"; }

StageCounts run_ingest(const fs::path& file_list_csv, ingest::Transport& transport, const fs::path& ingest_dir,
                       const IngestOptions& options, const Log& log) {
  auto policy = options.policy;
  policy.validate();
  const auto entries = ingest::parse_file_list(util::read_file(file_list_csv));
  fs::create_directories(ingest_dir);
  std::vector<json> list_rows;
  for (const auto& e : entries) list_rows.push_back(e);
  write_jsonl(ingest_dir / "file_list.jsonl", list_rows);

  ingest::RateLimiter limiter(policy.max_requests_per_second);
  std::vector<json> records(entries.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < entries.size();) {
      const auto& e = entries[i];
      json rec = {{"accession_id", e.accession_id}, {"file", e.file_path}};
      try {
        const auto out = ingest::fetch_package(e, policy, transport, limiter, ingest_dir / "archives");
        const auto kept = ingest::extract_package(out.archive, policy, media_root(ingest_dir), e.accession_id);
        rec["status"] = out.skipped ? "skipped" : "ok";
        rec["bytes"] = out.bytes;
        rec["attempts"] = out.attempts;
        rec["kept_files"] = kept.size();
      } catch (const ingest::FetchError& err) {
        rec["status"] = "failed";
        rec["attempts"] = err.attempts();
        rec["bytes"] = 0;
        rec["error"] = err.what();
      } catch (const Error& err) {
        rec["status"] = "failed";
        rec["attempts"] = 0;
        rec["bytes"] = 0;
        rec["error"] = err.what();
      }
      {
        std::lock_guard lock(log_mu);
        say(log, "ingest " + e.accession_id + ": " + rec["status"].get<std::string>());
      }
      records[i] = std::move(rec);
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::max<std::size_t>(1, options.workers); ++w) pool.emplace_back(worker);
  }
  write_jsonl(ingest_dir / "ingest_log.jsonl", records);

  StageCounts c;
  c.in = entries.size();
  std::size_t already = 0;
  for (const auto& r : records) {
    if (r["status"] == "failed") ++c.skipped;
    else ++c.written;
    if (r["status"] == "skipped") ++already;
  }
  c.details["already_present"] = already;
  conservation(log, "ingest", c);
  return c;
}

StageCounts run_extract(const fs::path& ingest_dir, const fs::path& out_dir, std::size_t per_file, const Log& log) {
  std::map<std::string, ingest::FileListEntry> entries;
  for (const auto& row : read_jsonl(ingest_dir / "file_list.jsonl")) {
    auto e = row.get<ingest::FileListEntry>();
    entries[e.accession_id] = e;
  }
  const auto root = media_root(ingest_dir);
  StageCounts c;
  std::vector<jats::ArticleDoc> docs;
  std::size_t warnings = 0;
  for (const auto& rec : read_jsonl(ingest_dir / "ingest_log.jsonl")) {
    ++c.in;
    const auto acc = rec.at("accession_id").get<std::string>();
    if (rec.at("status") == "failed") {
      ++c.skipped;
      say(log, "extract " + acc + ": skipped, ingest failed");
      continue;
    }
    std::vector<fs::path> nxmls;
    if (fs::is_directory(root / acc)) {
      for (const auto& f : fs::recursive_directory_iterator(root / acc)) {
        if (f.is_regular_file() && util::lower_extension(f.path()) == "nxml") nxmls.push_back(f.path());
      }
    }
    std::sort(nxmls.begin(), nxmls.end());
    if (nxmls.empty()) {
      ++c.skipped;
      say(log, "extract " + acc + ": skipped, no nXML");
      continue;
    }
    try {
      const auto it = entries.find(acc);
      auto parsed = jats::parse_article(util::read_file(nxmls[0]), nxmls[0].parent_path(),
                                        it == entries.end() ? nullptr : &it->second);
      if (parsed.doc.accession_id.empty()) parsed.doc.accession_id = acc;
      parsed.doc.nxml = fs::relative(nxmls[0], root).generic_string();
      for (const auto& w : parsed.warnings) say(log, "extract " + acc + ": " + w);
      warnings += parsed.warnings.size();
      docs.push_back(std::move(parsed.doc));
      ++c.written;
    } catch (const Error& e) {
      ++c.skipped;
      say(log, "extract " + acc + ": skipped, " + e.what());
    }
  }
  fs::remove_all(out_dir);
  store::write_article_jsonl(docs, out_dir, per_file);
  c.details["warnings"] = warnings;
  conservation(log, "extract", c);
  return c;
}

StageCounts run_enrich(const fs::path& in_dir, const fs::path& out_dir, enrich::MetadataService* service,
                       std::size_t batch_size, const enrich::FetchOptions& options, const Log& log) {
  if (fs::equivalent(in_dir, out_dir)) throw ValidationError("enrich: input and output directories must differ");
  fs::remove_all(out_dir);
  fs::create_directories(out_dir);
  for (const auto& p : store::list_article_files(in_dir)) fs::copy_file(p, out_dir / p.filename());
  StageCounts c;
  if (!service) {
    for (const auto& p : store::list_article_files(out_dir)) c.in += store::read_article_file(p).size();
    c.written = c.in;
    c.details["enriched"] = false;
    say(log, "enrich: no metadata service configured, articles copied unchanged");
  } else {
    const auto s = enrich::enrich_article_dir(out_dir, *service, batch_size, options);
    c.in = s.articles;
    c.written = s.articles;
    c.details = {{"with_pmid", s.with_pmid}, {"batches", s.batches}, {"enriched", true}};
  }
  conservation(log, "enrich", c);
  return c;
}

StageCounts run_store(const fs::path& in_dir, const fs::path& articles_dir, const fs::path& stats_path,
                      std::size_t per_file, const Log& log) {
  const auto docs = store::read_article_dir(in_dir);
  fs::remove_all(articles_dir);
  store::write_article_jsonl(docs, articles_dir, per_file);
  const store::WhitespaceTokenizer tok;
  util::write_file_atomic(stats_path, json(store::compute_stats(docs, tok)).dump(2) + "\n");
  StageCounts c;
  c.in = c.written = docs.size();
  conservation(log, "store", c);
  return c;
}

std::unique_ptr<cluster::EmbeddingBackend> make_backend(const EmbedOptions& options) {
  if (options.backend == "hash") return std::make_unique<cluster::HashBackend>(options.dim);
  if (options.backend == "process") {
    if (options.command.empty()) throw ValidationError("embed: process backend needs a command");
    return std::make_unique<cluster::ExternalProcessBackend>(options.command);
  }
  throw ValidationError("embed: unknown backend '" + options.backend + "' (hash or process)");
}

StageCounts run_embed(const fs::path& articles_dir, const fs::path& media, cluster::EmbeddingBackend& backend,
                      const fs::path& out_base, unsigned workers, const Log& log) {
  std::vector<cluster::ImageItem> items;
  StageCounts c;
  store::for_each_article(articles_dir, [&](const jats::ArticleDoc& a) {
    for (const auto& f : a.figure_set) {
      ++c.in;
      const auto path = shard::image_source_path(media, a, f);
      std::error_code ec;
      if (f.missing || !fs::is_regular_file(path, ec)) {
        ++c.skipped;
        say(log, "embed: image missing " + path.string());
        continue;
      }
      items.push_back({shard::make_sample_key(a.accession_id, f.image_id), util::read_file(path)});
    }
  });
  auto result = cluster::embed_images(items, backend, workers);
  for (const auto& s : result.skipped) say(log, "embed: skipped " + s.key + ": " + s.reason);
  c.skipped += result.skipped.size();
  c.written = result.matrix.n();
  if (out_base.has_parent_path()) fs::create_directories(out_base.parent_path());
  cluster::save_embeddings(out_base, result.matrix);
  c.details["dim"] = result.matrix.d();
  conservation(log, "embed", c);
  return c;
}

StageCounts run_cluster(const fs::path& embeddings_header, const fs::path& cluster_dir, const ClusterOptions& options,
                        const Log& log) {
  const auto X = cluster::load_embeddings(embeddings_header);
  const auto pca = cluster::fit_pca(X, options.variance_target, options.max_components);
  say(log, "cluster: PCA kept " + std::to_string(pca.k()) + " of " + std::to_string(pca.d()) +
               " dimensions, cumulative explained variance " + std::to_string(pca.cumulative_ratio));
  const auto Y = cluster::project(pca, X);
  const auto model = cluster::kmeans(Y, options.k, options.seed, options.max_iters);
  fs::create_directories(cluster_dir);
  util::write_file_atomic(cluster_dir / "pca.json", json(pca).dump() + "\n");
  util::write_file_atomic(cluster_dir / "kmeans.json", json(model).dump() + "\n");
  cluster::save_assignments(cluster_dir / "assignments.csv", model);
  StageCounts c;
  c.in = c.written = X.n();
  c.details = {{"components", pca.k()},
               {"cumulative_ratio", pca.cumulative_ratio},
               {"k", options.k},
               {"iterations", model.iterations},
               {"converged", model.converged},
               {"inertia", model.inertia()}};
  conservation(log, "cluster", c);
  return c;
}

namespace {

std::map<std::int64_t, std::vector<std::string>> members_by_cluster(const fs::path& cluster_dir) {
  std::map<std::int64_t, std::vector<std::string>> out;
  for (const auto& [key, id] : cluster::load_assignments(cluster_dir / "assignments.csv")) out[id].push_back(key);
  return out;
}

}  // namespace

StageCounts run_annotate_export(const fs::path& cluster_dir, const fs::path& export_dir, std::size_t sample_size,
                                std::uint64_t seed, const Log& log) {
  const auto members = members_by_cluster(cluster_dir);
  json clusters = json::object(), samples = json::object();
  StageCounts c;
  for (const auto& [id, keys] : members) {
    clusters[std::to_string(id)] = keys;
    samples[std::to_string(id)] = cluster::sample_members(keys, id, sample_size, seed);
    c.in += keys.size();
  }
  fs::create_directories(export_dir);
  util::write_file_atomic(export_dir / "clusters.json", clusters.dump(2) + "\n");
  util::write_file_atomic(export_dir / "samples.json", samples.dump(2) + "\n");
  c.written = c.in;
  c.details["clusters"] = members.size();
  conservation(log, "annotate-export", c);
  return c;
}

StageCounts run_resolve(const fs::path& annotation_log, const fs::path& cluster_dir, const label::Taxonomy& taxonomy,
                        const fs::path& labels_dir, const Log& log) {
  const auto entries = label::read_annotation_log(annotation_log);
  const auto latest = label::latest_per_annotator(entries);
  const auto resolved = label::resolve_all(latest, &taxonomy);
  const auto assignments = cluster::load_assignment_map(cluster_dir / "assignments.csv");

  // Images in clusters nobody annotated stay unlabeled.
  std::map<std::string, int> covered;
  for (const auto& [key, id] : assignments) {
    if (resolved.contains(id)) covered.emplace(key, id);
  }
  const auto per_image = label::propagate(resolved, covered);

  fs::create_directories(labels_dir);
  std::vector<json> rows;
  for (const auto& [id, r] : resolved) rows.push_back(r);
  write_jsonl(labels_dir / "resolved.jsonl", rows);
  json labels = json::object();
  for (const auto& [key, r] : per_image) labels[key] = r;
  util::write_file_atomic(labels_dir / "labels.json", labels.dump() + "\n");
  util::write_file_atomic(labels_dir / "review_queue.csv", label::review_queue_csv(resolved));
  std::map<std::int64_t, std::vector<label::ClusterAnnotation>> by_cluster;
  for (const auto& a : latest) by_cluster[a.cluster_id].push_back(a);
  util::write_file_atomic(labels_dir / "disagreement.json", json(label::disagreement_stats(by_cluster)).dump(2) + "\n");

  StageCounts c;
  c.in = assignments.size();
  c.written = per_image.size();
  c.skipped = c.in - c.written;
  std::size_t review = 0;
  for (const auto& [id, r] : resolved) review += r.needs_review;
  c.details = {{"annotations", entries.size()}, {"clusters_resolved", resolved.size()}, {"needs_review", review}};
  conservation(log, "resolve", c);
  return c;
}

StageCounts run_serialize(const fs::path& articles_dir, const fs::path& media,
                          const std::optional<fs::path>& labels_json, const fs::path& shards_dir,
                          const SerializeOptions& options, const Log& log) {
  if (options.filter && options.balance_cap) {
    throw ValidationError("serialize: choose either a concept filter or a balance cap, not both");
  }
  shard::LabelMap labels;
  if (labels_json) {
    const auto doc = read_json(*labels_json);
    for (const auto& [key, v] : doc.items()) labels[key] = v.get<label::ResolvedClusterLabels>();
  }
  shard::DenormalizeStats ds;
  std::vector<shard::FigureSample> samples;
  shard::DenormalizeOptions dopt{media, options.require_labels, log};
  store::for_each_article(articles_dir, [&](const jats::ArticleDoc& a) {
    shard::denormalize(a, labels, dopt, ds, [&](shard::FigureSample&& s) { samples.push_back(std::move(s)); });
  });
  StageCounts c;
  c.in = ds.figures_in;
  c.details["missing_images"] = ds.skipped_missing;
  c.details["unlabeled"] = ds.unlabeled;

  std::string subset = "full";
  json filter_spec;
  if (options.dedup) {
    std::size_t dropped = 0;
    samples = shard::dedup_exact(std::move(samples), &dropped);
    c.details["duplicates"] = dropped;
  }
  if (options.filter) {
    auto r = shard::concept_filter(std::move(samples), options.filter->keep_globals, options.filter->unlabeled);
    samples = std::move(r.kept);
    c.details["filtered_concept"] = r.dropped_concept;
    c.details["filtered_unlabeled"] = r.dropped_unlabeled;
    subset = "concept_filtered";
    filter_spec = shard::to_json(*options.filter);
  } else if (options.balance_cap) {
    const auto before = samples.size();
    samples = shard::concept_balance(std::move(samples), *options.balance_cap, options.seed);
    c.details["balanced_out"] = before - samples.size();
    subset = "concept_balanced";
    filter_spec = {{"balance_cap", *options.balance_cap}, {"seed", options.seed}};
  }

  shard::write_columnar_metadata(samples, shards_dir / "metadata.pmccol");
  const auto m = shard::write_shards(std::move(samples), shards_dir,
                                     {.samples_per_shard = options.shard_size,
                                      .workers = options.workers,
                                      .subset_name = subset,
                                      .filter_spec = filter_spec,
                                      .log = log});
  c.written = m.total_samples;
  c.skipped = c.in - c.written;
  c.details["shards"] = m.shards.size();
  conservation(log, "serialize", c);
  return c;
}

json run_eval_task(const EvalTaskSpec& spec, const EvalRunOptions& options) {
  const eval::EvalOptions eo{options.bootstrap, options.shuffle_seed, options.workers};
  const auto images = cluster::load_embeddings(spec.image_embeddings);
  const auto texts = cluster::load_embeddings(spec.text_embeddings);
  json out;
  if (spec.kind == "classify") {
    out = eval::run_classification(eval::load_task(spec.task), eval::KeyedEmbeddings(images),
                                   eval::KeyedEmbeddings(texts), eo);
  } else if (spec.kind == "retrieve") {
    out = eval::run_retrieval(images, texts, spec.ks, eo);
  } else {
    throw ValidationError("eval: unknown task kind '" + spec.kind + "' (classify or retrieve)");
  }
  out["bootstrap"] = {{"resamples", options.bootstrap.resamples},
                      {"level", options.bootstrap.level},
                      {"seed", options.bootstrap.seed},
                      {"method", eval::to_string(options.bootstrap.method)}};
  return out;
}

StageCounts run_eval(const std::vector<EvalTaskSpec>& tasks, const fs::path& eval_dir, const EvalRunOptions& options,
                     const Log& log) {
  json results = json::array();
  for (const auto& t : tasks) results.push_back(run_eval_task(t, options));
  fs::create_directories(eval_dir);
  util::write_file_atomic(eval_dir / "results.json", results.dump(2) + "\n");
  StageCounts c;
  c.in = c.written = tasks.size();
  conservation(log, "eval", c);
  return c;
}

}  // namespace pmcoa::pipeline
