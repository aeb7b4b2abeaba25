#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmcoa/shard/sample.hpp"

namespace pmcoa::shard {

// Self-describing column store for sample metadata ("PMCCOL1"); byte layout
// in docs/columnar.md. Each column is one contiguous block, so a predicate on
// one column reads only that block.
enum class ColumnType { Null, Int64, Float64, Bool, String, Json };

std::string to_string(ColumnType t);
ColumnType column_type_from_string(const std::string& s);

struct ColumnSpec {
  std::string name;
  ColumnType type;
  friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

// Declared schema of FigureSample metadata, in metadata_fields() order.
const std::vector<ColumnSpec>& sample_schema();

// Every row must have exactly the schema's keys with values of the declared
// type or null; otherwise SchemaError naming the field and row.
void write_columnar(const std::vector<nlohmann::ordered_json>& rows, const std::vector<ColumnSpec>& schema,
                    const std::filesystem::path& path);

// Schema inferred from the rows: key order of the first row, type of the
// first non-null value per key.
std::vector<ColumnSpec> infer_schema(const std::vector<nlohmann::ordered_json>& rows);

void write_columnar_metadata(const std::vector<FigureSample>& samples, const std::filesystem::path& path);

struct Column {
  ColumnSpec spec;
  std::vector<bool> valid;
  std::vector<std::int64_t> ints;
  std::vector<double> reals;
  std::vector<std::uint8_t> bools;
  std::vector<std::string> strings;  // String and Json (JSON text)

  std::size_t size() const noexcept { return valid.size(); }
  nlohmann::json value(std::size_t row) const;
};

class ColumnarFile {
 public:
  explicit ColumnarFile(std::filesystem::path path);

  std::size_t rows() const noexcept { return rows_; }
  const std::vector<ColumnSpec>& schema() const noexcept { return schema_; }
  // Reads one column block; NotFoundError for an unknown name.
  Column read_column(const std::string& name) const;
  // Bytes read from the data region so far.
  std::uint64_t bytes_read() const noexcept { return bytes_read_; }

 private:
  std::filesystem::path path_;
  std::size_t rows_ = 0;
  std::vector<ColumnSpec> schema_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> blocks_;  // absolute offset, length
  mutable std::uint64_t bytes_read_ = 0;
};

// Row indices whose value in `column` equals `value` (nulls never match).
std::vector<std::size_t> scan_equals(const ColumnarFile& file, const std::string& column, const nlohmann::json& value);

}  // namespace pmcoa::shard
