#include "pmcoa/ingest/transport.hpp"

#include <curl/curl.h>

#include <algorithm>
#include <mutex>
#include <sstream>

#include "pmcoa/util/fs.hpp"

namespace fs = std::filesystem;

namespace pmcoa::ingest {

fs::path DirectoryTransport::resolve(const std::string& remote_path) const {
  const fs::path rel = fs::path(remote_path).relative_path();
  for (const auto& part : rel) {
    if (part == "..") throw TransportError("path escapes mirror root: " + remote_path, false);
  }
  return root_ / rel;
}

std::vector<std::string> DirectoryTransport::list(const std::string& remote_dir) {
  const fs::path dir = resolve(remote_dir);
  if (!fs::is_directory(dir)) throw TransportError("no such directory: " + remote_dir, false);
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

Retrieved DirectoryTransport::retrieve(const std::string& remote_path) {
  const fs::path p = resolve(remote_path);
  if (!fs::is_regular_file(p)) throw TransportError("no such file: " + remote_path, false);
  Retrieved r;
  r.bytes = util::read_file(p);
  r.expected_size = fs::file_size(p);
  return r;
}

std::optional<std::uint64_t> DirectoryTransport::size(const std::string& remote_path) {
  const fs::path p = resolve(remote_path);
  if (!fs::is_regular_file(p)) return std::nullopt;
  return fs::file_size(p);
}

namespace {

void curl_init_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

std::size_t append_body(char* ptr, std::size_t size, std::size_t nmemb, void* userdata) {
  static_cast<std::string*>(userdata)->append(ptr, size * nmemb);
  return size * nmemb;
}

struct CurlHandle {
  CURL* h;
  CurlHandle() : h(curl_easy_init()) {
    if (h == nullptr) throw TransportError("curl_easy_init failed", true);
  }
  ~CurlHandle() { curl_easy_cleanup(h); }
  CurlHandle(const CurlHandle&) = delete;
  CurlHandle& operator=(const CurlHandle&) = delete;
};

bool permanent_code(CURLcode rc) {
  return rc == CURLE_REMOTE_FILE_NOT_FOUND || rc == CURLE_UNSUPPORTED_PROTOCOL || rc == CURLE_URL_MALFORMAT ||
         rc == CURLE_FILE_COULDNT_READ_FILE || rc == CURLE_LOGIN_DENIED || rc == CURLE_REMOTE_ACCESS_DENIED;
}

void perform(CurlHandle& c, const std::string& url) {
  const CURLcode rc = curl_easy_perform(c.h);
  if (rc != CURLE_OK) {
    throw TransportError(url + ": " + curl_easy_strerror(rc), !permanent_code(rc));
  }
  long status = 0;
  curl_easy_getinfo(c.h, CURLINFO_RESPONSE_CODE, &status);
  if (url.starts_with("http") && status >= 400) {
    throw TransportError(url + ": HTTP " + std::to_string(status), status >= 500 || status == 429);
  }
}

}  // namespace

CurlTransport::CurlTransport(std::string base_url, long timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {
  curl_init_once();
  if (!base_url_.empty() && base_url_.back() != '/') base_url_.push_back('/');
}

std::string CurlTransport::url_for(const std::string& remote_path) const {
  std::string rel = remote_path;
  while (!rel.empty() && rel.front() == '/') rel.erase(0, 1);
  return base_url_ + rel;
}

std::vector<std::string> CurlTransport::list(const std::string& remote_dir) {
  CurlHandle c;
  std::string url = url_for(remote_dir);
  if (url.back() != '/') url.push_back('/');
  std::string body;
  curl_easy_setopt(c.h, CURLOPT_URL, url.c_str());
  curl_easy_setopt(c.h, CURLOPT_DIRLISTONLY, 1L);
  curl_easy_setopt(c.h, CURLOPT_WRITEFUNCTION, append_body);
  curl_easy_setopt(c.h, CURLOPT_WRITEDATA, &body);
  curl_easy_setopt(c.h, CURLOPT_TIMEOUT, timeout_seconds_);
  perform(c, url);
  std::vector<std::string> out;
  std::istringstream in(body);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Retrieved CurlTransport::retrieve(const std::string& remote_path) {
  CurlHandle c;
  const std::string url = url_for(remote_path);
  Retrieved r;
  curl_easy_setopt(c.h, CURLOPT_URL, url.c_str());
  curl_easy_setopt(c.h, CURLOPT_WRITEFUNCTION, append_body);
  curl_easy_setopt(c.h, CURLOPT_WRITEDATA, &r.bytes);
  curl_easy_setopt(c.h, CURLOPT_TIMEOUT, timeout_seconds_);
  curl_easy_setopt(c.h, CURLOPT_FOLLOWLOCATION, 1L);
  perform(c, url);
  curl_off_t len = -1;
  if (curl_easy_getinfo(c.h, CURLINFO_CONTENT_LENGTH_DOWNLOAD_T, &len) == CURLE_OK && len >= 0) {
    r.expected_size = static_cast<std::uint64_t>(len);
  }
  return r;
}

std::optional<std::uint64_t> CurlTransport::size(const std::string& remote_path) {
  CurlHandle c;
  const std::string url = url_for(remote_path);
  curl_easy_setopt(c.h, CURLOPT_URL, url.c_str());
  curl_easy_setopt(c.h, CURLOPT_NOBODY, 1L);
  curl_easy_setopt(c.h, CURLOPT_TIMEOUT, timeout_seconds_);
  perform(c, url);
  curl_off_t len = -1;
  if (curl_easy_getinfo(c.h, CURLINFO_CONTENT_LENGTH_DOWNLOAD_T, &len) == CURLE_OK && len >= 0) {
    return static_cast<std::uint64_t>(len);
  }
  return std::nullopt;
}

std::unique_ptr<Transport> make_transport(const std::string& mirror) {
  if (mirror.find("://") != std::string::npos) return std::make_unique<CurlTransport>(mirror);
  return std::make_unique<DirectoryTransport>(mirror);
}

}  // namespace pmcoa::ingest
