// Eigen must precede httplib: <resolv.h> defines a `_res` macro.
#include "pmcoa/cluster/kmeans.hpp"
#include "pmcoa/label/service.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "pmcoa/error.hpp"
#include "pmcoa/util/fs.hpp"

namespace pmcoa::label {
namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                json extra = json::object()) {
  extra["error"] = code;
  extra["message"] = message;
  send_json(res, status, extra);
}

std::optional<std::int64_t> parse_id(const std::string& s) {
  if (s.empty() || s.size() > 18) return std::nullopt;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
  }
  return std::stoll(s);
}

std::string content_type_for(const std::filesystem::path& p) {
  const std::string ext = util::lower_extension(p);
  if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
  if (ext == "png") return "image/png";
  if (ext == "gif") return "image/gif";
  return "application/octet-stream";
}

}  // namespace

AnnotationService::AnnotationService(ServiceConfig config)
    : config_(std::move(config)), log_(config_.log_path), server_(std::make_unique<httplib::Server>()) {
  routes();
}

AnnotationService::~AnnotationService() { stop(); }

int AnnotationService::bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw IoError("annotation service: cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void AnnotationService::listen() { server_->listen_after_bind(); }

void AnnotationService::stop() {
  if (server_) server_->stop();
}

void AnnotationService::wait_until_ready() { server_->wait_until_ready(); }

void AnnotationService::routes() {
  auto& srv = *server_;
  const std::string origin = config_.cors_origin;
  srv.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Headers", "Content-Type, X-Annotator-Id");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
  });
  srv.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Get("/taxonomy", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(config_.taxonomy.to_json().dump(), "application/json");
  });

  srv.Get("/limits", [this](const httplib::Request&, httplib::Response& res) {
    json j = {{"max_annotators_per_cluster", nullptr}, {"max_clusters_per_annotator", nullptr},
              {"sample_size", config_.sample_size}};
    if (config_.max_annotators_per_cluster) j["max_annotators_per_cluster"] = *config_.max_annotators_per_cluster;
    if (config_.max_clusters_per_annotator) j["max_clusters_per_annotator"] = *config_.max_clusters_per_annotator;
    send_json(res, 200, j);
  });

  srv.Get("/clusters", [this](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& [id, members] : config_.clusters) {
      const auto who = log_.annotators(id);
      list.push_back({{"cluster_id", id},
                      {"size", members.size()},
                      {"annotation_count", who.size()},
                      {"annotators", std::vector<std::string>(who.begin(), who.end())}});
    }
    send_json(res, 200, {{"clusters", list}});
  });

  srv.Get(R"(/clusters/([^/]+)/sample)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto id = parse_id(req.matches[1]);
    const auto it = id ? config_.clusters.find(*id) : config_.clusters.end();
    if (it == config_.clusters.end()) return send_error(res, 404, "unknown_cluster", "no such cluster");
    std::size_t n = config_.sample_size;
    std::uint64_t seed = config_.sample_seed;
    try {
      if (req.has_param("n")) n = std::stoul(req.get_param_value("n"));
      if (req.has_param("seed")) seed = std::stoull(req.get_param_value("seed"));
    } catch (const std::exception&) {
      return send_error(res, 422, "invalid_query", "n and seed must be non-negative integers",
                        {{"errors", json::array({{{"field", "n"}, {"message", "not an integer"}}})}});
    }
    const auto keys = cluster::sample_members(it->second, *id, n, seed);
    json images = json::array();
    for (const auto& k : keys) images.push_back({{"key", k}, {"url", "/images/" + k}});
    json panel_options = json::array();
    for (PanelType p : all_panel_types()) panel_options.push_back({{"value", to_string(p)}, {"label", panel_description(p)}});
    json global_options = json::array();
    for (const auto& g : config_.taxonomy.globals()) global_options.push_back(g.name);
    json questions = json::array({
        {{"field", "panel_type"},
         {"kind", "single_choice"},
         {"prompt", "Are the majority of images in this cluster single panel or multiple panel?"},
         {"options", panel_options}},
        {{"field", "global_labels"},
         {"kind", "multi_choice"},
         {"prompt", "What is the most likely global class for the majority of images?"},
         {"options", global_options}},
        {{"field", "local_labels"},
         {"kind", "free_text_list"},
         {"prompt", "What is the most likely local class? Use the taxonomy where possible."}},
    });
    send_json(res, 200,
              {{"cluster_id", *id},
               {"cluster_size", it->second.size()},
               {"images", images},
               {"questions", questions},
               {"taxonomy", json::parse(config_.taxonomy.to_json().dump())}});
  });

  srv.Post(R"(/clusters/([^/]+)/annotations)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto id = parse_id(req.matches[1]);
    if (!id || !config_.clusters.contains(*id)) return send_error(res, 404, "unknown_cluster", "no such cluster");
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      return send_error(res, 422, "invalid_body", "body is not JSON",
                        {{"errors", json::array({{{"field", ""}, {"message", "malformed JSON"}}})}});
    }
    if (body.is_object() && !body.contains("annotator_id") && req.has_header("X-Annotator-Id")) {
      body["annotator_id"] = req.get_header_value("X-Annotator-Id");
    }
    auto errors = validate_annotation_json(body, config_.taxonomy);
    if (body.is_object() && body.contains("cluster_id") &&
        (!body["cluster_id"].is_number_integer() || body["cluster_id"].get<std::int64_t>() != *id)) {
      errors.push_back({"cluster_id", "does not match the cluster in the URL"});
    }
    if (!errors.empty()) {
      json list = json::array();
      for (const auto& e : errors) list.push_back({{"field", e.field}, {"message", e.message}});
      return send_error(res, 422, "validation_failed", "annotation rejected", {{"errors", list}});
    }
    body["cluster_id"] = *id;
    if (!body.contains("submitted_at")) body["submitted_at"] = utc_timestamp_now();
    const auto ann = body.get<ClusterAnnotation>();
    const bool replace = req.get_param_value("replace") == "true";

    std::lock_guard lock(submit_mu_);
    const bool repeat = log_.has(ann.annotator_id, *id);
    if (repeat && !replace) {
      return send_error(res, 409, "duplicate", "annotator already submitted this cluster; use ?replace=true");
    }
    if (!repeat) {
      if (config_.max_annotators_per_cluster && log_.annotator_count(*id) >= *config_.max_annotators_per_cluster) {
        return send_error(res, 409, "cluster_limit", "cluster already has the maximum number of annotators");
      }
      if (config_.max_clusters_per_annotator &&
          log_.cluster_count(ann.annotator_id) >= *config_.max_clusters_per_annotator) {
        return send_error(res, 409, "annotator_limit", "annotator reached the maximum number of clusters");
      }
    }
    try {
      log_.append(ann);
    } catch (const std::exception& e) {
      return send_error(res, 500, "write_failed", e.what());
    }
    send_json(res, 200, {{"stored", json(ann)}, {"replaced", repeat}, {"annotation_count", log_.annotator_count(*id)}});
  });

  srv.Get(R"(/images/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string key = req.matches[1];
    const auto path = config_.image_path ? config_.image_path(key) : std::nullopt;
    if (!path || !std::filesystem::is_regular_file(*path)) {
      return send_error(res, 404, "unknown_image", "no such image");
    }
    res.set_content(util::read_file(*path), content_type_for(*path));
  });
}

}  // namespace pmcoa::label
