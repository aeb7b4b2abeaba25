#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmcoa/cluster/embedding.hpp"
#include "pmcoa/enrich/entrez.hpp"
#include "pmcoa/eval/bootstrap.hpp"
#include "pmcoa/ingest/policy.hpp"
#include "pmcoa/ingest/transport.hpp"
#include "pmcoa/label/taxonomy.hpp"
#include "pmcoa/shard/subset.hpp"

namespace pmcoa::pipeline {

using Log = std::function<void(const std::string&)>;

// Every stage reports in == written + skipped.
struct StageCounts {
  std::size_t in = 0;
  std::size_t written = 0;
  std::size_t skipped = 0;
  nlohmann::json details = nlohmann::json::object();
};
void to_json(nlohmann::json& j, const StageCounts& c);

// ingest_dir layout: archives/<accession>.tar.gz, extracted/<accession>/...,
// file_list.jsonl (parsed entries), ingest_log.jsonl (one record per entry:
// accession_id, file, status ok|skipped|failed, bytes, attempts, error).
std::filesystem::path media_root(const std::filesystem::path& ingest_dir);

struct IngestOptions {
  ingest::DownloadPolicy policy;
  std::size_t workers = 4;
};
StageCounts run_ingest(const std::filesystem::path& file_list_csv, ingest::Transport& transport,
                       const std::filesystem::path& ingest_dir, const IngestOptions& options, const Log& log = {});

// Parses each ingested article's nXML (first *.nxml under its directory, by
// name) into articles-*.jsonl under out_dir. Failed or nXML-less entries are skipped.
StageCounts run_extract(const std::filesystem::path& ingest_dir, const std::filesystem::path& out_dir,
                        std::size_t per_file = 200, const Log& log = {});

// Copies in_dir to out_dir, then enriches out_dir in place. A null service
// copies only.
StageCounts run_enrich(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                       enrich::MetadataService* service, std::size_t batch_size, const enrich::FetchOptions& options,
                       const Log& log = {});

// Rewrites the articles into the final store and writes stats.json next to it.
StageCounts run_store(const std::filesystem::path& in_dir, const std::filesystem::path& articles_dir,
                      const std::filesystem::path& stats_path, std::size_t per_file = 200, const Log& log = {});

struct EmbedOptions {
  std::string backend = "hash";          // "hash" or "process"
  std::size_t dim = 1024;                // hash backend
  std::vector<std::string> command;      // process backend argv
  unsigned workers = 1;
};
std::unique_ptr<cluster::EmbeddingBackend> make_backend(const EmbedOptions& options);

// Embeds every present figure; keys are shard sample keys. Writes
// <out_base>.json/.f32/.keys.
StageCounts run_embed(const std::filesystem::path& articles_dir, const std::filesystem::path& media,
                      cluster::EmbeddingBackend& backend, const std::filesystem::path& out_base, unsigned workers,
                      const Log& log = {});

struct ClusterOptions {
  int k = 2000;
  double variance_target = 0.99;
  std::optional<std::size_t> max_components;
  std::uint64_t seed = 0;
  int max_iters = 300;
};
// cluster_dir: pca.json, kmeans.json, assignments.csv.
StageCounts run_cluster(const std::filesystem::path& embeddings_header, const std::filesystem::path& cluster_dir,
                        const ClusterOptions& options, const Log& log = {});

// export_dir: clusters.json ({cluster_id: [keys]}) and samples.json
// ({cluster_id: [sampled keys]}) for annotators.
StageCounts run_annotate_export(const std::filesystem::path& cluster_dir, const std::filesystem::path& export_dir,
                                std::size_t sample_size, std::uint64_t seed, const Log& log = {});

// labels_dir: resolved.jsonl (one resolution per line, by cluster id),
// labels.json ({sample_key: resolution}), review_queue.csv, disagreement.json.
StageCounts run_resolve(const std::filesystem::path& annotation_log, const std::filesystem::path& cluster_dir,
                        const label::Taxonomy& taxonomy, const std::filesystem::path& labels_dir,
                        const Log& log = {});

struct SerializeOptions {
  std::size_t shard_size = 10000;
  std::size_t workers = 1;
  bool dedup = false;
  std::optional<shard::FilterSpec> filter;
  std::optional<std::size_t> balance_cap;
  std::uint64_t seed = 0;
  bool require_labels = false;
};
// Writes shards, manifest.json and metadata.pmccol into shards_dir.
StageCounts run_serialize(const std::filesystem::path& articles_dir, const std::filesystem::path& media,
                          const std::optional<std::filesystem::path>& labels_json,
                          const std::filesystem::path& shards_dir, const SerializeOptions& options,
                          const Log& log = {});

struct EvalTaskSpec {
  std::string kind;  // "classify" or "retrieve"
  std::filesystem::path image_embeddings;
  std::filesystem::path text_embeddings;
  std::filesystem::path task;  // classify only
  std::vector<std::size_t> ks = {1, 10, 100};
};
struct EvalRunOptions {
  eval::BootstrapOptions bootstrap;
  std::uint64_t shuffle_seed = 0;
  std::size_t workers = 1;
};
nlohmann::json run_eval_task(const EvalTaskSpec& spec, const EvalRunOptions& options);
// Writes <eval_dir>/results.json with one entry per task.
StageCounts run_eval(const std::vector<EvalTaskSpec>& tasks, const std::filesystem::path& eval_dir,
                     const EvalRunOptions& options, const Log& log = {});

}  // namespace pmcoa::pipeline
