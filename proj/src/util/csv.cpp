#include "pmcoa/util/csv.hpp"

#include "pmcoa/error.hpp"

namespace pmcoa::util {

std::vector<CsvRow> parse_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool in_quotes = false;
  bool after_quote = false;  // just closed a quoted field
  bool row_has_content = false;
  long long record = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    after_quote = false;
  };
  auto end_row = [&] {
    end_field();
    // A blank line is not a record.
    if (!(row.size() == 1 && row[0].empty() && !row_has_content)) rows.push_back(std::move(row));
    row.clear();
    row_has_content = false;
    ++record;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
          after_quote = true;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case ',':
        end_field();
        row_has_content = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_row();
        break;
      case '\n':
        end_row();
        break;
      case '"':
        if (!field.empty() || after_quote) {
          throw ParseError("csv: unexpected quote in record " + std::to_string(record), record);
        }
        in_quotes = true;
        row_has_content = true;
        break;
      default:
        if (after_quote) {
          throw ParseError("csv: characters after closing quote in record " + std::to_string(record), record);
        }
        field.push_back(c);
        row_has_content = true;
    }
  }
  if (in_quotes) throw ParseError("csv: unterminated quoted field in record " + std::to_string(record), record);
  if (!field.empty() || !row.empty() || row_has_content) end_row();
  return rows;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string csv_line(const CsvRow& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_escape(row[i]);
  }
  return out;
}

}  // namespace pmcoa::util
