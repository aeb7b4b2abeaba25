#include "pmcoa/cluster/embedding.hpp"

#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>
#include <unordered_set>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "pmcoa/util/hash.hpp"
#include "pmcoa/util/rng.hpp"

namespace pmcoa::cluster {

void EmbeddingMatrix::validate() const {
  if (row_keys.size() != n()) {
    throw ValidationError("embedding matrix has " + std::to_string(n()) + " rows but " +
                          std::to_string(row_keys.size()) + " keys");
  }
  if (!values.allFinite()) throw ValidationError("embedding matrix contains NaN or Inf");
  std::unordered_set<std::string> seen;
  for (const auto& k : row_keys) {
    if (!seen.insert(k).second) throw ValidationError("duplicate embedding row key: " + k);
  }
}

std::vector<float> HashBackend::embed(std::string_view image_bytes) {
  const std::string digest = util::sha256_hex(image_bytes);
  util::SplitMix64 rng(std::stoull(digest.substr(0, 16), nullptr, 16));
  std::vector<double> v(dim_);
  double norm2 = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<float> out(dim_);
  for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(v[i] * inv);
  return out;
}

namespace {

void write_all(int fd, const char* p, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::write(fd, p, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw BackendError(std::string("embedder write failed: ") + std::strerror(errno));
    }
    p += w;
    n -= static_cast<std::size_t>(w);
  }
}

void read_all(int fd, char* p, std::size_t n) {
  while (n > 0) {
    const ssize_t r = ::read(fd, p, n);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw BackendError(std::string("embedder read failed: ") + std::strerror(errno));
    }
    if (r == 0) throw BackendError("embedder process closed its output");
    p += r;
    n -= static_cast<std::size_t>(r);
  }
}

void put_u32(char* b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint32_t get_u32(const char* b) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

}  // namespace

ExternalProcessBackend::ExternalProcessBackend(std::vector<std::string> argv) : argv_(std::move(argv)) {
  if (argv_.empty()) throw ValidationError("external embedder: empty command");
}

ExternalProcessBackend::~ExternalProcessBackend() { stop(); }

void ExternalProcessBackend::start() {
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw BackendError("external embedder: pipe() failed");
  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);
  const pid_t pid = ::fork();
  if (pid < 0) throw BackendError("external embedder: fork() failed");
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  ::signal(SIGPIPE, SIG_IGN);
}

void ExternalProcessBackend::stop() {
  if (pid_ < 0) return;
  ::close(to_child_);
  ::close(from_child_);
  int status = 0;
  ::waitpid(pid_, &status, 0);
  pid_ = -1;
  to_child_ = from_child_ = -1;
}

std::vector<float> ExternalProcessBackend::embed(std::string_view image_bytes) {
  std::lock_guard lock(mu_);
  if (pid_ < 0) start();
  std::vector<float> out;
  try {
    char hdr[4];
    put_u32(hdr, static_cast<std::uint32_t>(image_bytes.size()));
    write_all(to_child_, hdr, 4);
    write_all(to_child_, image_bytes.data(), image_bytes.size());
    read_all(from_child_, hdr, 4);
    const std::uint32_t d = get_u32(hdr);
    std::string raw(static_cast<std::size_t>(d) * 4, '\0');
    read_all(from_child_, raw.data(), raw.size());
    out.resize(d);
    for (std::uint32_t i = 0; i < d; ++i) {
      const std::uint32_t bits = get_u32(raw.data() + 4 * i);
      std::memcpy(&out[i], &bits, 4);
    }
  } catch (const BackendError&) {
    stop();  // protocol state is unknown; restart on the next call
    throw;
  }
  if (out.empty()) throw BackendError("embedder rejected the image");
  return out;
}

EmbedResult embed_images(const std::vector<ImageItem>& images, EmbeddingBackend& backend, unsigned workers) {
  {
    std::unordered_set<std::string> seen;
    for (const auto& im : images) {
      if (!seen.insert(im.key).second) throw ValidationError("duplicate image key: " + im.key);
    }
  }
  struct Slot {
    std::vector<float> v;
    std::string error;
  };
  std::vector<Slot> slots(images.size());
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < images.size(); i = next++) {
      try {
        slots[i].v = backend.embed(images[i].bytes);
        if (slots[i].v.empty()) slots[i].error = "backend returned an empty vector";
      } catch (const std::exception& e) {
        slots[i].error = e.what();
      }
    }
  };
  workers = std::max(1u, workers);
  if (workers == 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
  }

  EmbedResult result;
  std::size_t dim = 0;
  for (const auto& s : slots) {
    if (s.error.empty()) {
      dim = s.v.size();
      break;
    }
  }
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    auto& s = slots[i];
    if (s.error.empty() && s.v.size() != dim) {
      s.error = "dimension " + std::to_string(s.v.size()) + " differs from " + std::to_string(dim);
    }
    if (s.error.empty()) {
      for (float x : s.v) {
        if (!std::isfinite(x)) {
          s.error = "non-finite embedding value";
          break;
        }
      }
    }
    if (s.error.empty()) {
      ok.push_back(i);
    } else {
      result.skipped.push_back({images[i].key, s.error});
    }
  }
  result.matrix.values.resize(static_cast<Eigen::Index>(ok.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < ok.size(); ++r) {
    const auto& v = slots[ok[r]].v;
    for (std::size_t c = 0; c < dim; ++c) {
      result.matrix.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[c];
    }
    result.matrix.row_keys.push_back(images[ok[r]].key);
  }
  return result;
}

}  // namespace pmcoa::cluster
