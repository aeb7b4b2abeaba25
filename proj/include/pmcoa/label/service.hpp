#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pmcoa/label/annotation_log.hpp"
#include "pmcoa/label/taxonomy.hpp"

namespace httplib {
class Server;
}

namespace pmcoa::label {

struct ServiceConfig {
  // Cluster id -> member image keys, in assignment order.
  std::map<std::int64_t, std::vector<std::string>> clusters;
  Taxonomy taxonomy = Taxonomy::builtin();
  std::filesystem::path log_path;
  // Maps an image key to a file to serve; nullopt -> 404.
  std::function<std::optional<std::filesystem::path>(const std::string&)> image_path;
  std::size_t sample_size = 30;
  std::uint64_t sample_seed = 0;
  // Deployment limits; unset means unlimited.
  std::optional<std::size_t> max_annotators_per_cluster;
  std::optional<std::size_t> max_clusters_per_annotator;
  std::string cors_origin = "*";
};

// JSON-over-HTTP annotation API:
//   GET  /taxonomy
//   GET  /limits
//   GET  /clusters                          progress per cluster
//   GET  /clusters/{id}/sample[?n=&seed=]   montage keys, form questions, taxonomy
//   POST /clusters/{id}/annotations[?replace=true]
//   GET  /images/{key}
// POST answers 200 only after the log line is on disk; 404 for an unknown
// cluster, 422 with field errors for a bad body, 409 for a repeat submission
// (without replace) or an exceeded limit.
class AnnotationService {
 public:
  explicit AnnotationService(ServiceConfig config);
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  // Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  void listen();
  void stop();
  void wait_until_ready();

  AnnotationLog& log() { return log_; }

 private:
  void routes();

  ServiceConfig config_;
  AnnotationLog log_;
  std::mutex submit_mu_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace pmcoa::label
