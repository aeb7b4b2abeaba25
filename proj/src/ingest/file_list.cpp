#include "pmcoa/ingest/file_list.hpp"

#include <array>
#include <charconv>
#include <nlohmann/json.hpp>
#include <unordered_map>
#include <unordered_set>

#include "pmcoa/error.hpp"
#include "pmcoa/util/csv.hpp"
#include "pmcoa/util/text.hpp"

namespace pmcoa::ingest {
namespace {

constexpr std::array<std::string_view, 6> kRequired = {"File", "Citation", "Accession_ID", "Date", "PMID", "License"};

std::optional<std::uint64_t> parse_pmid(std::string cell, long long record) {
  cell = util::trim(cell);
  if (cell.starts_with("PMID:")) cell = util::trim(cell.substr(5));
  if (cell.empty()) return std::nullopt;
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError("file list: non-numeric PMID '" + cell + "' in record " + std::to_string(record), record);
  }
  return value;
}

}  // namespace

std::vector<FileListEntry> parse_file_list(std::string_view csv_bytes) {
  const auto rows = util::parse_csv(csv_bytes);
  if (rows.empty()) throw SchemaError("file list: missing header row");

  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col.emplace(util::trim(rows[0][i]), i);
  std::array<std::size_t, kRequired.size()> idx{};
  for (std::size_t k = 0; k < kRequired.size(); ++k) {
    const auto it = col.find(std::string(kRequired[k]));
    if (it == col.end()) throw SchemaError("file list: missing required column '" + std::string(kRequired[k]) + "'");
    idx[k] = it->second;
  }

  std::vector<FileListEntry> out;
  out.reserve(rows.size() - 1);
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const long long record = static_cast<long long>(r + 1);
    if (row.size() != rows[0].size()) {
      throw ParseError("file list: record " + std::to_string(record) + " has " + std::to_string(row.size()) +
                           " fields, header has " + std::to_string(rows[0].size()),
                       record);
    }
    FileListEntry e;
    e.file_path = util::trim(row[idx[0]]);
    e.citation = row[idx[1]];
    e.accession_id = util::trim(row[idx[2]]);
    e.date = util::trim(row[idx[3]]);
    e.pmid = parse_pmid(row[idx[4]], record);
    e.license = util::trim(row[idx[5]]);
    if (e.file_path.empty()) throw ValidationError("file list: empty File in record " + std::to_string(record));
    if (e.accession_id.empty()) {
      throw ValidationError("file list: empty Accession_ID in record " + std::to_string(record));
    }
    if (!seen.insert(e.file_path).second) {
      throw ValidationError("file list: duplicate File path '" + e.file_path + "' in record " + std::to_string(record));
    }
    out.push_back(std::move(e));
  }
  return out;
}

void to_json(nlohmann::json& j, const FileListEntry& e) {
  j = nlohmann::json{{"file_path", e.file_path}, {"citation", e.citation}, {"accession_id", e.accession_id},
                     {"date", e.date},           {"license", e.license}};
  j["pmid"] = e.pmid ? nlohmann::json(*e.pmid) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, FileListEntry& e) {
  j.at("file_path").get_to(e.file_path);
  j.at("citation").get_to(e.citation);
  j.at("accession_id").get_to(e.accession_id);
  j.at("date").get_to(e.date);
  j.at("license").get_to(e.license);
  if (j.contains("pmid") && !j["pmid"].is_null()) {
    e.pmid = j["pmid"].get<std::uint64_t>();
  } else {
    e.pmid.reset();
  }
}

}  // namespace pmcoa::ingest
