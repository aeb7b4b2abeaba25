#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pmcoa::util {

using CsvRow = std::vector<std::string>;

// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line endings,
// embedded newlines inside quotes. Throws ParseError with the 1-based record
// number (header = record 1) on unterminated quotes or stray characters after
// a closing quote. A UTF-8 BOM is skipped.
std::vector<CsvRow> parse_csv(std::string_view text);

// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);
std::string csv_line(const CsvRow& row);

}  // namespace pmcoa::util
