#include "atlas/csv.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "atlas/error.hpp"
#include "atlas/text.hpp"

namespace atlas::csv {

std::size_t Table::column(std::string_view name, std::string_view source) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw InputError(std::string(source) + ": missing column '" +
                   std::string(name) + "'");
}

namespace {

// Splits one logical record starting at `pos`; advances `pos` and `line`.
std::vector<std::string> next_record(std::string_view s, std::size_t& pos,
                                     std::size_t& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_started_quoted = false;
  while (pos < s.size()) {
    const char c = s[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < s.size() && s[pos + 1] == '"') {
          field.push_back('"');
          pos += 2;
          continue;
        }
        quoted = false;
        ++pos;
        continue;
      }
      if (c == '\n') ++line;
      field.push_back(c);
      ++pos;
      continue;
    }
    if (c == '"' && field.empty() && !field_started_quoted) {
      quoted = true;
      field_started_quoted = true;
      ++pos;
      continue;
    }
    if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_started_quoted = false;
      ++pos;
      continue;
    }
    if (c == '\r' && pos + 1 < s.size() && s[pos + 1] == '\n') {
      ++pos;
      continue;
    }
    if (c == '\n') {
      ++pos;
      ++line;
      break;
    }
    field.push_back(c);
    ++pos;
  }
  if (quoted) throw InputError("unterminated quoted field near line " +
                               std::to_string(line));
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

Table parse(std::string_view content) {
  Table table;
  std::size_t pos = 0;
  std::size_t line = 1;
  if (content.size() >= 3 && content.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
  bool have_header = false;
  while (pos < content.size()) {
    const std::size_t record_line = line;
    const std::size_t eol = content.find('\n', pos);
    const std::string_view raw =
        content.substr(pos, eol == std::string_view::npos ? content.size() - pos
                                                          : eol - pos);
    if (!have_header && !raw.empty() && raw.front() == '#') {
      table.comments.emplace_back(text::trim(raw.substr(1)));
      pos = eol == std::string_view::npos ? content.size() : eol + 1;
      ++line;
      continue;
    }
    if (text::trim(raw).empty()) {
      pos = eol == std::string_view::npos ? content.size() : eol + 1;
      ++line;
      continue;
    }
    auto fields = next_record(content, pos, line);
    if (!have_header) {
      for (auto& f : fields) f = std::string(text::trim(f));
      table.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != table.header.size()) {
        throw InputError("line " + std::to_string(record_line) + ": expected " +
                         std::to_string(table.header.size()) + " fields, got " +
                         std::to_string(fields.size()));
      }
      table.rows.push_back(std::move(fields));
      table.row_lines.push_back(record_line);
    }
  }
  return table;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void require_header(const Table& table, const std::vector<std::string>& expected,
                    std::string_view source) {
  bool ok = table.header.size() >= expected.size();
  for (std::size_t i = 0; ok && i < expected.size(); ++i) {
    ok = table.header[i] == expected[i];
  }
  if (!ok) {
    throw InputError(std::string(source) + ": header must begin with " +
                     text::join(expected, ","));
  }
}

std::string escape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\n\r") != std::string_view::npos ||
      (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void Writer::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << escape(fields[i]);
  }
  out_ << '\n';
}

}  // namespace atlas::csv
