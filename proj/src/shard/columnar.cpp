#include "pmcoa/shard/columnar.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

#include "pmcoa/error.hpp"
#include "pmcoa/util/fs.hpp"

namespace fs = std::filesystem;

namespace pmcoa::shard {

namespace {

constexpr char kMagic[8] = {'P', 'M', 'C', 'C', 'O', 'L', '1', '\n'};

static_assert(std::endian::native == std::endian::little, "columnar I/O assumes a little-endian host");

void put_u64(std::string& out, std::uint64_t v) { out.append(reinterpret_cast<const char*>(&v), 8); }

std::uint64_t get_u64(const char* p) {
  std::uint64_t v;
  std::memcpy(&v, p, 8);
  return v;
}

ColumnType type_of(const nlohmann::ordered_json& v) {
  switch (v.type()) {
    case nlohmann::json::value_t::null: return ColumnType::Null;
    case nlohmann::json::value_t::number_integer:
    case nlohmann::json::value_t::number_unsigned: return ColumnType::Int64;
    case nlohmann::json::value_t::number_float: return ColumnType::Float64;
    case nlohmann::json::value_t::boolean: return ColumnType::Bool;
    case nlohmann::json::value_t::string: return ColumnType::String;
    default: return ColumnType::Json;
  }
}

}  // namespace

std::string to_string(ColumnType t) {
  switch (t) {
    case ColumnType::Null: return "null";
    case ColumnType::Int64: return "int64";
    case ColumnType::Float64: return "float64";
    case ColumnType::Bool: return "bool";
    case ColumnType::String: return "string";
    case ColumnType::Json: return "json";
  }
  return "null";
}

ColumnType column_type_from_string(const std::string& s) {
  for (auto t : {ColumnType::Null, ColumnType::Int64, ColumnType::Float64, ColumnType::Bool, ColumnType::String,
                 ColumnType::Json}) {
    if (to_string(t) == s) return t;
  }
  throw SchemaError("unknown column type '" + s + "'");
}

const std::vector<ColumnSpec>& sample_schema() {
  static const std::vector<ColumnSpec> schema = [] {
    using T = ColumnType;
    const std::map<std::string, T> types = {
        {"image_cluster_id", T::Int64},   {"image_set", T::Json},          {"image_context", T::Json},
        {"image_width", T::Int64},        {"image_height", T::Int64},      {"image_secondary_label", T::Json},
        {"image_secondary_locals", T::Json}, {"image_needs_review", T::Bool}, {"article_keywords", T::Json},
        {"article_mesh_terms", T::Json},  {"article_pmid", T::Int64},      {"article_citing_pmids", T::Json},
        {"article_citing_count", T::Int64}};
    std::vector<ColumnSpec> out;
    for (const auto& f : metadata_fields()) {
      const auto it = types.find(f);
      out.push_back({f, it == types.end() ? T::String : it->second});
    }
    return out;
  }();
  return schema;
}

std::vector<ColumnSpec> infer_schema(const std::vector<nlohmann::ordered_json>& rows) {
  std::vector<ColumnSpec> schema;
  if (rows.empty()) return schema;
  for (const auto& [k, v] : rows[0].items()) schema.push_back({k, ColumnType::Null});
  for (auto& c : schema) {
    for (const auto& r : rows) {
      const auto it = r.find(c.name);
      if (it != r.end() && !it->is_null()) {
        c.type = type_of(*it);
        break;
      }
    }
  }
  return schema;
}

void write_columnar(const std::vector<nlohmann::ordered_json>& rows, const std::vector<ColumnSpec>& schema,
                    const fs::path& path) {
  const std::size_t n = rows.size();
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = rows[r];
    if (!row.is_object()) throw SchemaError("row " + std::to_string(r) + " is not an object");
    if (row.size() != schema.size()) {
      for (const auto& [k, v] : row.items()) {
        bool known = false;
        for (const auto& c : schema) known = known || c.name == k;
        if (!known) throw SchemaError("field '" + k + "' in row " + std::to_string(r) + " is not in the schema");
      }
    }
    for (const auto& c : schema) {
      const auto it = row.find(c.name);
      if (it == row.end()) throw SchemaError("field '" + c.name + "' missing from row " + std::to_string(r));
      const auto t = type_of(*it);
      if (t == ColumnType::Null) continue;
      if (t != c.type) {
        throw SchemaError("field '" + c.name + "' in row " + std::to_string(r) + " has type " + to_string(t) +
                          ", schema says " + to_string(c.type));
      }
      if (it->is_number_unsigned() && it->get<std::uint64_t>() > std::uint64_t(std::numeric_limits<std::int64_t>::max())) {
        throw SchemaError("field '" + c.name + "' in row " + std::to_string(r) + " overflows int64");
      }
    }
  }

  std::string data;
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : schema) {
    const std::uint64_t start = data.size();
    std::string bitmap((n + 7) / 8, '\0');
    for (std::size_t r = 0; r < n; ++r) {
      if (!rows[r].at(c.name).is_null()) bitmap[r / 8] = static_cast<char>(bitmap[r / 8] | (1u << (r % 8)));
    }
    data += bitmap;
    switch (c.type) {
      case ColumnType::Null: break;
      case ColumnType::Int64:
        for (const auto& row : rows) {
          const auto& v = row.at(c.name);
          const std::int64_t x = v.is_null() ? 0 : v.get<std::int64_t>();
          data.append(reinterpret_cast<const char*>(&x), 8);
        }
        break;
      case ColumnType::Float64:
        for (const auto& row : rows) {
          const auto& v = row.at(c.name);
          const double x = v.is_null() ? 0.0 : v.get<double>();
          data.append(reinterpret_cast<const char*>(&x), 8);
        }
        break;
      case ColumnType::Bool:
        for (const auto& row : rows) {
          const auto& v = row.at(c.name);
          data.push_back(!v.is_null() && v.get<bool>() ? 1 : 0);
        }
        break;
      case ColumnType::String:
      case ColumnType::Json: {
        std::vector<std::string> values;
        values.reserve(n);
        for (const auto& row : rows) {
          const auto& v = row.at(c.name);
          if (v.is_null()) values.emplace_back();
          else if (c.type == ColumnType::String) values.push_back(v.get<std::string>());
          else values.push_back(v.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict));
        }
        std::uint64_t off = 0;
        put_u64(data, 0);
        for (const auto& s : values) put_u64(data, off += s.size());
        for (const auto& s : values) data += s;
        break;
      }
    }
    cols.push_back({{"name", c.name}, {"type", to_string(c.type)}, {"offset", start}, {"length", data.size() - start}});
  }

  const std::string header = nlohmann::json{{"version", 1}, {"rows", n}, {"columns", cols}}.dump();
  std::string out(kMagic, sizeof kMagic);
  put_u64(out, header.size());
  out += header;
  out += data;
  util::write_file_atomic(path, out);
}

void write_columnar_metadata(const std::vector<FigureSample>& samples, const fs::path& path) {
  std::vector<nlohmann::ordered_json> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(s.metadata);
  write_columnar(rows, sample_schema(), path);
}

nlohmann::json Column::value(std::size_t row) const {
  if (!valid.at(row)) return nullptr;
  switch (spec.type) {
    case ColumnType::Null: return nullptr;
    case ColumnType::Int64: return ints[row];
    case ColumnType::Float64: return reals[row];
    case ColumnType::Bool: return bools[row] != 0;
    case ColumnType::String: return strings[row];
    case ColumnType::Json: return nlohmann::json::parse(strings[row]);
  }
  return nullptr;
}

ColumnarFile::ColumnarFile(fs::path path) : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw IoError("cannot open " + path_.string());
  char head[16];
  in.read(head, 16);
  if (in.gcount() != 16 || std::memcmp(head, kMagic, 8) != 0) {
    throw ParseError(path_.string() + ": not a PMCCOL1 file", 0);
  }
  const std::uint64_t header_len = get_u64(head + 8);
  const std::uint64_t file_size = fs::file_size(path_);
  if (header_len > file_size - 16) throw ParseError(path_.string() + ": header length past end of file", 8);
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  const std::uint64_t data_start = 16 + header_len;
  try {
    const auto h = nlohmann::json::parse(header);
    rows_ = h.at("rows").get<std::size_t>();
    for (const auto& c : h.at("columns")) {
      schema_.push_back({c.at("name").get<std::string>(), column_type_from_string(c.at("type").get<std::string>())});
      const auto off = c.at("offset").get<std::uint64_t>();
      const auto len = c.at("length").get<std::uint64_t>();
      if (data_start + off + len > file_size) {
        throw ParseError(path_.string() + ": column " + schema_.back().name + " runs past end of file",
                         static_cast<long long>(data_start + off));
      }
      blocks_.emplace_back(data_start + off, len);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path_.string() + ": bad header: " + e.what(), 16);
  }
}

Column ColumnarFile::read_column(const std::string& name) const {
  std::size_t idx = 0;
  while (idx < schema_.size() && schema_[idx].name != name) ++idx;
  if (idx == schema_.size()) throw NotFoundError(path_.string() + ": no column '" + name + "'");
  const auto [off, len] = blocks_[idx];
  std::ifstream in(path_, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(off));
  std::string block(len, '\0');
  in.read(block.data(), static_cast<std::streamsize>(len));
  if (static_cast<std::uint64_t>(in.gcount()) != len) throw ParseError(path_.string() + ": short read", static_cast<long long>(off));
  bytes_read_ += len;

  Column col;
  col.spec = schema_[idx];
  const std::size_t n = rows_;
  const std::size_t bm = (n + 7) / 8;
  auto need = [&](std::uint64_t bytes) {
    if (bytes > len) throw ParseError(path_.string() + ": column " + name + " is truncated", static_cast<long long>(off));
  };
  need(bm);
  col.valid.resize(n);
  for (std::size_t r = 0; r < n; ++r) col.valid[r] = (static_cast<unsigned char>(block[r / 8]) >> (r % 8)) & 1u;
  const char* p = block.data() + bm;
  switch (col.spec.type) {
    case ColumnType::Null: break;
    case ColumnType::Int64:
      need(bm + 8 * n);
      col.ints.resize(n);
      std::memcpy(col.ints.data(), p, 8 * n);
      break;
    case ColumnType::Float64:
      need(bm + 8 * n);
      col.reals.resize(n);
      std::memcpy(col.reals.data(), p, 8 * n);
      break;
    case ColumnType::Bool:
      need(bm + n);
      col.bools.assign(p, p + n);
      break;
    case ColumnType::String:
    case ColumnType::Json: {
      need(bm + 8 * (n + 1));
      const char* bytes = p + 8 * (n + 1);
      const std::uint64_t avail = len - bm - 8 * (n + 1);
      col.strings.reserve(n);
      for (std::size_t r = 0; r < n; ++r) {
        const auto a = get_u64(p + 8 * r), b = get_u64(p + 8 * (r + 1));
        if (a > b || b > avail) throw ParseError(path_.string() + ": bad string offsets in " + name, static_cast<long long>(off));
        col.strings.emplace_back(bytes + a, b - a);
      }
      break;
    }
  }
  return col;
}

std::vector<std::size_t> scan_equals(const ColumnarFile& file, const std::string& column, const nlohmann::json& value) {
  const auto col = file.read_column(column);
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < col.size(); ++r) {
    if (!col.valid[r]) continue;
    bool eq = false;
    switch (col.spec.type) {
      case ColumnType::String: eq = value.is_string() && value.get_ref<const std::string&>() == col.strings[r]; break;
      case ColumnType::Int64: eq = value.is_number_integer() && value.get<std::int64_t>() == col.ints[r]; break;
      default: eq = col.value(r) == value;
    }
    if (eq) out.push_back(r);
  }
  return out;
}

}  // namespace pmcoa::shard
