#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "pmcoa/cluster/io.hpp"
#include "pmcoa/enrich/apply.hpp"
#include "pmcoa/error.hpp"
#include "pmcoa/eval/merge.hpp"
#include "pmcoa/eval/task.hpp"
#include "pmcoa/ingest/rate_limiter.hpp"
#include "pmcoa/label/service.hpp"
#include "pmcoa/pipeline/runner.hpp"
#include "pmcoa/shard/benchmark.hpp"
#include "pmcoa/shard/reader.hpp"
#include "pmcoa/shard/sample.hpp"
#include "pmcoa/shard/writer.hpp"
#include "pmcoa/store/jsonl.hpp"
#include "pmcoa/store/stats.hpp"
#include "pmcoa/util/fs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pmcoa;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitFailure = 3;

void log_line(const std::string& msg) { std::cerr << msg << "\n"; }

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

void print_counts(const pipeline::StageCounts& c) { std::cout << json(c).dump() << "\n"; }

eval::CiMethod ci_method(const std::string& s) {
  if (s == "percentile") return eval::CiMethod::Percentile;
  if (s == "bca") return eval::CiMethod::BCa;
  throw ValidationError("--ci must be percentile or bca");
}

void write_or_print(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    util::write_file_atomic(out, j.dump(2) + "\n");
  }
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PMC-OA figure-caption dataset pipeline"};
  app.require_subcommand(1);
  std::function<int()> action;

  // ingest
  std::string file_list, out_dir, mirror, keep = "nxml,jpg";
  double rate = 3.0;
  int retries = 5;
  std::int64_t retry_base_ms = 500;
  std::size_t workers = 4;
  auto* ingest = app.add_subcommand("ingest", "Download and extract article packages");
  ingest->add_option("--file-list", file_list, "File list CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", out_dir, "Ingest directory")->required();
  ingest->add_option("--mirror", mirror, "Mirror URL or directory (env PMCOA_MIRROR_URL)");
  ingest->add_option("--rate", rate, "Requests per second")->capture_default_str();
  ingest->add_option("--retries", retries, "Retries per package")->capture_default_str();
  ingest->add_option("--retry-base-ms", retry_base_ms, "First retry delay")->capture_default_str();
  ingest->add_option("--keep", keep, "Extensions kept on extraction")->capture_default_str();
  ingest->add_option("--workers", workers, "Concurrent downloads")->capture_default_str();
  ingest->callback([&] {
    action = [&] {
      pipeline::IngestOptions o;
      o.policy.max_requests_per_second = rate;
      o.policy.max_retries = retries;
      o.policy.retry_base_delay = std::chrono::milliseconds(retry_base_ms);
      o.policy.keep_extensions.clear();
      for (const auto& e : split_csv(keep)) o.policy.keep_extensions.insert(util::to_lower(e));
      o.workers = workers;
      const auto m = env_or("PMCOA_MIRROR_URL", mirror);
      if (m.empty()) throw ValidationError("ingest: --mirror or PMCOA_MIRROR_URL is required");
      auto transport = ingest::make_transport(m);
      print_counts(pipeline::run_ingest(file_list, *transport, out_dir, o, log_line));
      return 0;
    };
  });

  // extract
  std::string in_dir;
  std::size_t per_file = 200;
  auto* extract = app.add_subcommand("extract", "Parse ingested nXML into article JSONL");
  extract->add_option("--in", in_dir, "Ingest directory")->required()->check(CLI::ExistingDirectory);
  extract->add_option("--out", out_dir, "Article JSONL directory")->required();
  extract->add_option("--per-file", per_file, "Articles per JSONL file")->capture_default_str();
  extract->callback([&] {
    action = [&] {
      print_counts(pipeline::run_extract(in_dir, out_dir, per_file, log_line));
      return 0;
    };
  });

  // enrich
  std::string service_url, tool = "pmcoa", email;
  std::size_t batch_size = 200;
  auto* enrich_cmd = app.add_subcommand("enrich", "Add MeSH terms and citations in place");
  enrich_cmd->add_option("--in", in_dir, "Article JSONL directory")->required()->check(CLI::ExistingDirectory);
  enrich_cmd->add_option("--service-url", service_url, "E-utilities base URL (env PMCOA_ENTREZ_URL)");
  enrich_cmd->add_option("--batch-size", batch_size, "PMIDs per request")->capture_default_str();
  enrich_cmd->add_option("--tool", tool, "Tool name sent to the service")->capture_default_str();
  enrich_cmd->add_option("--email", email, "Contact email sent to the service");
  enrich_cmd->add_option("--rate", rate, "Requests per second")->capture_default_str();
  enrich_cmd->add_option("--retries", retries, "Retries per batch")->capture_default_str();
  enrich_cmd->callback([&] {
    action = [&] {
      const auto url = env_or("PMCOA_ENTREZ_URL", service_url);
      if (url.empty()) throw ValidationError("enrich: --service-url or PMCOA_ENTREZ_URL is required");
      if (batch_size == 0) throw ValidationError("enrich: --batch-size must be positive");
      enrich::HttpMetadataService svc(url, tool, email);
      ingest::RateLimiter limiter(rate);
      enrich::FetchOptions fo;
      fo.retry = {retries, std::chrono::milliseconds(retry_base_ms)};
      fo.limiter = &limiter;
      fo.log = log_line;
      const auto s = enrich::enrich_article_dir(in_dir, svc, batch_size, fo);
      std::cout << json{{"articles", s.articles}, {"with_pmid", s.with_pmid}, {"batches", s.batches}}.dump() << "\n";
      return 0;
    };
  });

  // stats
  std::string out_file;
  auto* stats = app.add_subcommand("stats", "Corpus statistics over article JSONL");
  stats->add_option("--in", in_dir, "Article JSONL directory")->required()->check(CLI::ExistingDirectory);
  stats->add_option("--out", out_file, "stats.json path")->required();
  stats->callback([&] {
    action = [&] {
      const store::WhitespaceTokenizer tok;
      const auto s = store::compute_stats(
          [&](const std::function<void(const jats::ArticleDoc&)>& fn) { store::for_each_article(in_dir, fn); }, tok);
      util::write_file_atomic(out_file, json(s).dump(2) + "\n");
      return 0;
    };
  });

  // embed
  std::string ingest_dir;
  pipeline::EmbedOptions embed_opts;
  auto* embed = app.add_subcommand("embed", "Embed every present figure image");
  embed->add_option("--in", in_dir, "Article JSONL directory")->required()->check(CLI::ExistingDirectory);
  embed->add_option("--ingest", ingest_dir, "Ingest directory holding extracted media")->required();
  embed->add_option("--out", out_file, "Output base path (writes .json, .f32, .keys)")->required();
  embed->add_option("--backend", embed_opts.backend, "hash or process")->capture_default_str();
  embed->add_option("--dim", embed_opts.dim, "Hash backend dimension")->capture_default_str();
  embed->add_option("--command", embed_opts.command, "Process backend argv")->expected(-1);
  embed->add_option("--workers", embed_opts.workers, "Concurrent embed calls")->capture_default_str();
  embed->callback([&] {
    action = [&] {
      auto backend = pipeline::make_backend(embed_opts);
      print_counts(pipeline::run_embed(in_dir, pipeline::media_root(ingest_dir), *backend, out_file,
                                       embed_opts.workers, log_line));
      return 0;
    };
  });

  // cluster
  std::string embeddings;
  pipeline::ClusterOptions cluster_opts;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_components;
  auto* cluster_cmd = app.add_subcommand("cluster", "PCA then k-means over image embeddings");
  cluster_cmd->add_option("--embeddings", embeddings, "Embedding header JSON")->required()->check(CLI::ExistingFile);
  cluster_cmd->add_option("--out", out_dir, "Cluster directory")->required();
  cluster_cmd->add_option("--k", cluster_opts.k, "Number of clusters")->capture_default_str();
  cluster_cmd->add_option("--variance-target", cluster_opts.variance_target, "Retained variance")
      ->capture_default_str();
  cluster_cmd->add_option("--max-components", max_components, "Component cap");
  cluster_cmd->add_option("--max-iters", cluster_opts.max_iters, "k-means iteration cap")->capture_default_str();
  cluster_cmd->add_option("--seed", seed, "k-means seed")->required();
  cluster_cmd->callback([&] {
    action = [&] {
      cluster_opts.seed = *seed;
      cluster_opts.max_components = max_components;
      print_counts(pipeline::run_cluster(embeddings, out_dir, cluster_opts, log_line));
      return 0;
    };
  });

  // annotate-export
  std::string cluster_dir;
  std::size_t sample_size = 30;
  auto* export_cmd = app.add_subcommand("annotate-export", "Write cluster members and annotation samples");
  export_cmd->add_option("--clusters", cluster_dir, "Cluster directory")->required()->check(CLI::ExistingDirectory);
  export_cmd->add_option("--out", out_dir, "Export directory")->required();
  export_cmd->add_option("--sample-size", sample_size, "Images per cluster sample")->capture_default_str();
  export_cmd->add_option("--seed", seed, "Sampling seed")->required();
  export_cmd->callback([&] {
    action = [&] {
      print_counts(pipeline::run_annotate_export(cluster_dir, out_dir, sample_size, *seed, log_line));
      return 0;
    };
  });

  // serve-annotations
  std::string log_path, taxonomy_path, host = "127.0.0.1", cors = "*";
  int port = 8080;
  std::optional<std::size_t> max_annotators, max_clusters;
  auto* serve = app.add_subcommand("serve-annotations", "Run the annotation HTTP service");
  serve->add_option("--clusters", cluster_dir, "Cluster directory")->required()->check(CLI::ExistingDirectory);
  serve->add_option("--articles", in_dir, "Article JSONL directory (image lookup)")->check(CLI::ExistingDirectory);
  serve->add_option("--ingest", ingest_dir, "Ingest directory (image lookup)");
  serve->add_option("--log", log_path, "Annotation log JSONL")->required();
  serve->add_option("--taxonomy", taxonomy_path, "Taxonomy JSON (default: built-in)");
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
  serve->add_option("--sample-size", sample_size, "Images per cluster sample")->capture_default_str();
  serve->add_option("--seed", seed, "Sampling seed")->required();
  serve->add_option("--max-annotators-per-cluster", max_annotators, "409 beyond this many annotators");
  serve->add_option("--max-clusters-per-annotator", max_clusters, "409 beyond this many clusters");
  serve->add_option("--cors-origin", cors, "Access-Control-Allow-Origin")->capture_default_str();
  serve->callback([&] {
    action = [&] {
      label::ServiceConfig cfg;
      for (const auto& [key, id] : cluster::load_assignments(fs::path(cluster_dir) / "assignments.csv")) {
        cfg.clusters[id].push_back(key);
      }
      if (!taxonomy_path.empty()) cfg.taxonomy = label::Taxonomy::load(taxonomy_path);
      cfg.log_path = log_path;
      cfg.sample_size = sample_size;
      cfg.sample_seed = *seed;
      cfg.max_annotators_per_cluster = max_annotators;
      cfg.max_clusters_per_annotator = max_clusters;
      cfg.cors_origin = cors;
      auto images = std::make_shared<std::map<std::string, fs::path>>();
      if (!in_dir.empty() && !ingest_dir.empty()) {
        const auto media = pipeline::media_root(ingest_dir);
        store::for_each_article(in_dir, [&](const jats::ArticleDoc& a) {
          for (const auto& f : a.figure_set) {
            (*images)[shard::make_sample_key(a.accession_id, f.image_id)] = shard::image_source_path(media, a, f);
          }
        });
      }
      cfg.image_path = [images](const std::string& key) -> std::optional<fs::path> {
        const auto it = images->find(key);
        if (it == images->end()) return std::nullopt;
        return it->second;
      };
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      label::AnnotationService svc(std::move(cfg));
      const int bound = svc.bind(host, port);
      std::cout << "listening on http://" << host << ":" << bound << std::endl;
      std::jthread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        svc.stop();
      });
      svc.listen();
      pthread_kill(waiter.native_handle(), SIGTERM);
      return 0;
    };
  });

  // resolve
  auto* resolve = app.add_subcommand("resolve", "Majority-vote cluster labels and propagate to images");
  resolve->add_option("--log", log_path, "Annotation log JSONL")->required()->check(CLI::ExistingFile);
  resolve->add_option("--clusters", cluster_dir, "Cluster directory")->required()->check(CLI::ExistingDirectory);
  resolve->add_option("--out", out_dir, "Labels directory")->required();
  resolve->add_option("--taxonomy", taxonomy_path, "Taxonomy JSON (default: built-in)");
  resolve->callback([&] {
    action = [&] {
      const auto tax = taxonomy_path.empty() ? label::Taxonomy::builtin() : label::Taxonomy::load(taxonomy_path);
      print_counts(pipeline::run_resolve(log_path, cluster_dir, tax, out_dir, log_line));
      return 0;
    };
  });

  // serialize
  std::string labels_path, filter_path;
  pipeline::SerializeOptions ser;
  std::optional<std::size_t> balance_cap;
  auto* serialize = app.add_subcommand("serialize", "Write tar shards, manifest and columnar metadata");
  serialize->add_option("--in", in_dir, "Article JSONL directory")->required()->check(CLI::ExistingDirectory);
  serialize->add_option("--ingest", ingest_dir, "Ingest directory holding extracted media")->required();
  serialize->add_option("--labels", labels_path, "labels.json from resolve")->check(CLI::ExistingFile);
  serialize->add_option("--out", out_dir, "Shard directory")->required();
  serialize->add_option("--shard-size", ser.shard_size, "Samples per shard")->capture_default_str();
  serialize->add_option("--workers", ser.workers, "Parallel shard writers")->capture_default_str();
  auto* filter_opt = serialize->add_option("--filter", filter_path, "Concept filter JSON")->check(CLI::ExistingFile);
  auto* cap_opt = serialize->add_option("--balance-cap", balance_cap, "Per-local-concept cap");
  serialize->add_option("--seed", seed, "Balancing seed");
  serialize->add_flag("--dedup", ser.dedup, "Drop exact (image hash, caption) duplicates");
  serialize->add_flag("--require-labels", ser.require_labels, "Fail on unlabeled images");
  filter_opt->excludes(cap_opt);
  serialize->callback([&] {
    action = [&] {
      if (!filter_path.empty()) {
        json doc;
        try {
          doc = json::parse(util::read_file(filter_path));
        } catch (const json::parse_error& e) {
          throw ValidationError("--filter: " + std::string(e.what()));
        }
        ser.filter = shard::filter_spec_from_json(doc);
      }
      if (balance_cap) {
        if (!seed) throw ValidationError("serialize: --balance-cap requires --seed");
        if (*balance_cap == 0) throw ValidationError("serialize: --balance-cap must be positive");
        ser.balance_cap = balance_cap;
        ser.seed = *seed;
      }
      std::optional<fs::path> labels;
      if (!labels_path.empty()) labels = labels_path;
      if (ser.require_labels && !labels) throw ValidationError("serialize: --require-labels needs --labels");
      print_counts(pipeline::run_serialize(in_dir, pipeline::media_root(ingest_dir), labels, out_dir, ser, log_line));
      return 0;
    };
  });

  // stream
  std::string manifest, files_dir;
  bool benchmark = false;
  std::size_t skip = 0;
  auto* stream = app.add_subcommand("stream", "Stream samples from shards, or benchmark shard vs file reads");
  stream->add_option("--manifest", manifest, "manifest.json")->required()->check(CLI::ExistingFile);
  stream->add_flag("--benchmark", benchmark, "Compare sequential shard and random file throughput");
  stream->add_option("--files-dir", files_dir, "Per-file copy for the benchmark (default: <shards>/../files)");
  stream->add_option("--seed", seed, "Random read order seed");
  stream->add_option("--resume", skip, "Samples already consumed");
  stream->callback([&] {
    action = [&] {
      if (benchmark) {
        const fs::path files = files_dir.empty() ? fs::path(manifest).parent_path().parent_path() / "files"
                                                 : fs::path(files_dir);
        shard::materialize_files(manifest, files);
        std::cout << json(shard::benchmark_io(manifest, files, seed.value_or(0))).dump(2) << "\n";
        return 0;
      }
      auto s = shard::ShardStream::resume(manifest, skip);
      while (auto sample = s.next()) {
        json line = {{"key", sample->sample_key}, {"image_bytes", sample->image.size()}, {"caption", sample->caption}};
        std::cout << line.dump() << "\n";
      }
      return 0;
    };
  });

  // eval
  std::vector<std::string> emb_paths;
  std::string task_path, ci = "percentile", ks = "1,10,100";
  eval::EvalOptions eo;
  std::optional<std::uint64_t> shuffle_seed;
  auto* eval_cmd = app.add_subcommand("eval", "Zero-shot classification and retrieval metrics");
  eval_cmd->require_subcommand(1);
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--embeddings", emb_paths, "Image and text embedding headers")->required()->expected(2);
    sub->add_option("--bootstrap", eo.bootstrap.resamples, "Bootstrap resamples")->capture_default_str();
    sub->add_option("--level", eo.bootstrap.level, "Confidence level")->capture_default_str();
    sub->add_option("--ci", ci, "percentile or bca")->capture_default_str();
    sub->add_option("--seed", seed, "Bootstrap seed")->required();
    sub->add_option("--workers", eo.workers, "Scoring threads")->capture_default_str();
    sub->add_option("--out", out_file, "results JSON (default: stdout)");
  };
  auto* classify = eval_cmd->add_subcommand("classify", "Closed-set classification over caption candidates");
  add_common(classify);
  classify->add_option("--task", task_path, "Task spec JSON")->required()->check(CLI::ExistingFile);
  classify->add_option("--shuffle-seed", shuffle_seed, "Answer order seed")->required();
  classify->callback([&] {
    action = [&] {
      eo.bootstrap.seed = *seed;
      eo.bootstrap.method = ci_method(ci);
      eo.shuffle_seed = *shuffle_seed;
      const auto report = eval::run_classification(eval::load_task(task_path),
                                                   eval::KeyedEmbeddings(cluster::load_embeddings(emb_paths[0])),
                                                   eval::KeyedEmbeddings(cluster::load_embeddings(emb_paths[1])), eo);
      write_or_print(report, out_file);
      return 0;
    };
  });
  auto* retrieve = eval_cmd->add_subcommand("retrieve", "Image-text recall@k");
  add_common(retrieve);
  retrieve->add_option("--k", ks, "Comma-separated k values")->capture_default_str();
  retrieve->callback([&] {
    action = [&] {
      eo.bootstrap.seed = *seed;
      eo.bootstrap.method = ci_method(ci);
      std::vector<std::size_t> kv;
      for (const auto& k : split_csv(ks)) {
        try {
          kv.push_back(std::stoul(k));
        } catch (const std::exception&) {
          throw ValidationError("--k: not a number: " + k);
        }
      }
      const auto report = eval::run_retrieval(cluster::load_embeddings(emb_paths[0]),
                                              cluster::load_embeddings(emb_paths[1]), kv, eo);
      for (const auto& w : report.warnings) log_line("warning: " + w);
      write_or_print(report, out_file);
      return 0;
    };
  });

  // merge
  std::string base_path, adapted_path;
  double alpha = 0.5;
  auto* merge = app.add_subcommand("merge", "Weight-space interpolation of two safetensors checkpoints");
  merge->add_option("--base", base_path, "Base checkpoint")->required()->check(CLI::ExistingFile);
  merge->add_option("--adapted", adapted_path, "Fine-tuned checkpoint")->required()->check(CLI::ExistingFile);
  merge->add_option("--alpha", alpha, "Weight on the fine-tuned model")->capture_default_str();
  merge->add_option("--out", out_file, "Output checkpoint")->required();
  merge->callback([&] {
    action = [&] {
      const auto merged =
          eval::wise_ft_merge(eval::read_safetensors(base_path), eval::read_safetensors(adapted_path), alpha);
      eval::write_safetensors(out_file, merged, {{"alpha", std::to_string(alpha)}});
      std::cout << json{{"tensors", merged.size()}, {"alpha", alpha}}.dump() << "\n";
      return 0;
    };
  });

  // pipeline
  std::string config_path, stages_csv;
  auto* pipe = app.add_subcommand("pipeline", "Run configured stages with completion markers");
  pipe->require_subcommand(1);
  auto* run = pipe->add_subcommand("run", "Run stages in order, skipping those already up to date");
  run->add_option("--config", config_path, "Pipeline config JSON")->required();
  run->add_option("--stages", stages_csv, "Comma-separated subset (default: all)");
  run->callback([&] {
    action = [&] {
      const auto config = pipeline::load_config(config_path);
      const auto report = pipeline::run(config, pipeline::parse_stage_list(stages_csv), {nullptr, nullptr, nullptr, log_line});
      std::cout << json(report).dump(2) << "\n";
      return report.exit_code;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }
  try {
    return action();
  } catch (const ValidationError& e) {
    log_line(std::string("error: ") + e.what());
    return kExitValidation;
  } catch (const SchemaError& e) {
    log_line(std::string("error: ") + e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    log_line(std::string("error: ") + e.what());
    return kExitFailure;
  }
}
