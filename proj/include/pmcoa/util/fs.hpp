#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pmcoa::util {

std::string read_file(const std::filesystem::path& path);

// Writes `bytes` to a sibling temp file, fsyncs, then renames over `path`.
// Readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// Regular files directly under `dir` whose names end with `suffix`, sorted by name.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              std::string_view suffix = {});

// Appends one line plus '\n' and fsyncs before returning.
void append_line_durable(const std::filesystem::path& path, std::string_view line);

std::string to_lower(std::string_view s);

// Lowercased suffix after the final dot of the file name; empty if none.
std::string lower_extension(const std::filesystem::path& p);

}  // namespace pmcoa::util
