#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace atlas::csv {

// RFC 4180 style table. Lines starting with '#' before the header are kept
// in `comments` (without the leading '#') and otherwise ignored.
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based source line of each row, for error messages.
  std::vector<std::size_t> row_lines;

  // Index of a header column; throws InputError naming `source` if absent.
  std::size_t column(std::string_view name, std::string_view source = {}) const;
};

Table parse(std::string_view content);
Table read_file(const std::filesystem::path& path);

// Ensures the header starts with exactly `expected` (extra trailing columns
// are allowed).
void require_header(const Table& table, const std::vector<std::string>& expected,
                    std::string_view source);

std::string escape(std::string_view field);

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

}  // namespace atlas::csv
