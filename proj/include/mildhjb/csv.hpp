#pragma once

#include <filesystem>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <utility>

namespace mildhjb {

struct CsvColumn {
  std::string name;
  std::string unit;
};

/// Writes "# units: a [u], b [v]" followed by "a,b" and switches the stream to
/// round-trip precision.
void write_csv_header(std::ostream& os, std::initializer_list<CsvColumn> columns);

/// Creates parent directories, opens `path` for writing, runs `body`, and
/// throws IoError when any step fails.
void write_file(const std::filesystem::path& path,
                const std::function<void(std::ostream&)>& body);

}  // namespace mildhjb
