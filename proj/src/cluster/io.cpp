#include "pmcoa/cluster/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <nlohmann/json.hpp>
#include <unordered_set>

#include "pmcoa/util/csv.hpp"
#include "pmcoa/util/fs.hpp"

namespace fs = std::filesystem;

namespace pmcoa::cluster {

static_assert(std::endian::native == std::endian::little, "float32 files assume a little-endian host");

void save_assignments(const fs::path& path, const std::vector<Assignment>& rows) {
  std::string out = "image_key,cluster_id\n";
  for (const auto& [key, id] : rows) out += util::csv_line({key, std::to_string(id)}) + "\n";
  util::write_file_atomic(path, out);
}

void save_assignments(const fs::path& path, const ClusterModel& model) {
  std::vector<Assignment> rows;
  for (std::size_t i = 0; i < model.row_keys.size(); ++i) rows.emplace_back(model.row_keys[i], model.labels[i]);
  save_assignments(path, rows);
}

std::vector<Assignment> load_assignments(const fs::path& path) {
  const auto rows = util::parse_csv(util::read_file(path));
  if (rows.empty() || rows[0] != util::CsvRow{"image_key", "cluster_id"}) {
    throw SchemaError(path.string() + ": expected header image_key,cluster_id");
  }
  std::vector<Assignment> out;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 2) throw ParseError(path.string() + ": bad row " + std::to_string(r + 1), static_cast<long long>(r + 1));
    int id = 0;
    const auto [p, ec] = std::from_chars(row[1].data(), row[1].data() + row[1].size(), id);
    if (ec != std::errc() || p != row[1].data() + row[1].size() || id < 0) {
      throw ParseError(path.string() + ": bad cluster id on row " + std::to_string(r + 1), static_cast<long long>(r + 1));
    }
    if (!seen.insert(row[0]).second) throw ValidationError(path.string() + ": key assigned twice: " + row[0]);
    out.emplace_back(row[0], id);
  }
  return out;
}

std::map<std::string, int> load_assignment_map(const fs::path& path) {
  std::map<std::string, int> out;
  for (auto& [k, v] : load_assignments(path)) out.emplace(std::move(k), v);
  return out;
}

void save_embeddings(const fs::path& base, const EmbeddingMatrix& m) {
  m.validate();
  std::string keys;
  for (const auto& k : m.row_keys) {
    if (k.find('\n') != std::string::npos) throw ValidationError("embedding key contains a newline: " + k);
    keys += k + "\n";
  }
  std::string raw(m.n() * m.d() * 4, '\0');
  std::size_t off = 0;
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
      const float f = static_cast<float>(m.values(r, c));
      std::memcpy(raw.data() + off, &f, 4);
      off += 4;
    }
  }
  const std::string stem = base.filename().string();
  util::write_file_atomic(fs::path(base.string() + ".f32"), raw);
  util::write_file_atomic(fs::path(base.string() + ".keys"), keys);
  const nlohmann::json header = {
      {"n", m.n()}, {"d", m.d()}, {"row_keys_file", stem + ".keys"}, {"values_file", stem + ".f32"}};
  util::write_file_atomic(fs::path(base.string() + ".json"), header.dump(2) + "\n");
}

EmbeddingMatrix load_embeddings(const fs::path& header_path) {
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(util::read_file(header_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(header_path.string() + ": " + e.what());
  }
  const auto n = h.at("n").get<std::size_t>();
  const auto d = h.at("d").get<std::size_t>();
  const fs::path dir = header_path.parent_path();
  const std::string raw = util::read_file(dir / h.at("values_file").get<std::string>());
  if (raw.size() != n * d * 4) {
    throw ParseError(header_path.string() + ": value file holds " + std::to_string(raw.size()) + " bytes, expected " +
                     std::to_string(n * d * 4));
  }
  EmbeddingMatrix m;
  m.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::size_t off = 0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      float f;
      std::memcpy(&f, raw.data() + off, 4);
      off += 4;
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = f;
    }
  }
  const std::string keys = util::read_file(dir / h.at("row_keys_file").get<std::string>());
  std::size_t pos = 0;
  while (pos < keys.size()) {
    const auto nl = keys.find('\n', pos);
    const auto end = nl == std::string::npos ? keys.size() : nl;
    m.row_keys.emplace_back(keys.substr(pos, end - pos));
    pos = end + 1;
  }
  m.validate();
  return m;
}

}  // namespace pmcoa::cluster
