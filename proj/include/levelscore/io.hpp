#pragma once

// File helpers shared by the pipeline and the CLI: CSV tables, round-trip
// number formatting and atomic whole-file writes.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace levelscore::io {

/// %.17g, enough digits for any double to parse back to the same bits.
std::string format_number(double v);

/// Strict full-string parse; throws Error(kInvalidArgument) naming `what`.
double parse_number(std::string_view text, std::string_view what);

struct CsvTable {
  std::vector<std::string> header;  // empty when the file had none
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  /// Index of a header column; throws Error(kConfig) when missing.
  std::size_t column(std::string_view name) const;
};

/// Comma-separated, no quoting. A first row with no numeric field is taken as
/// the header. Blank lines are skipped.
CsvTable read_csv(const std::filesystem::path& path);

/// Joins fields with commas.
std::string csv_line(const std::vector<std::string>& fields);

std::string read_text(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace levelscore::io
