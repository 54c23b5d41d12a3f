#include "mildhjb/csv.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include "mildhjb/error.hpp"

namespace mildhjb {

void write_csv_header(std::ostream& os, std::initializer_list<CsvColumn> columns) {
  os << "# units:";
  bool first = true;
  for (const auto& c : columns) {
    os << (first ? " " : ", ") << c.name << " [" << c.unit << ']';
    first = false;
  }
  os << '\n';
  first = true;
  for (const auto& c : columns) {
    os << (first ? "" : ",") << c.name;
    first = false;
  }
  os << '\n' << std::setprecision(17);
}

void write_file(const std::filesystem::path& path,
                const std::function<void(std::ostream&)>& body) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " + path.parent_path().string() +
                    ": " + ec.message());
    }
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  body(os);
  os.flush();
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace mildhjb
