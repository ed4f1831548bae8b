#include "qgevrey/csv.hpp"

#include <cstdio>

#include "qgevrey/errors.hpp"

namespace qgevrey {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : os_(path) {
  if (!os_) throw ResourceError("cannot open " + path.string() + " for writing");
  for (const auto& h : header) *this << h;
  end_row();
}

void CsvWriter::sep() {
  if (!first_) os_ << ',';
  first_ = false;
}

CsvWriter& CsvWriter::operator<<(double x) {
  sep();
  os_ << fmt17(x);
  return *this;
}

CsvWriter& CsvWriter::operator<<(int x) {
  sep();
  os_ << x;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& s) {
  sep();
  os_ << s;
  return *this;
}

void CsvWriter::end_row() {
  os_ << '\n';
  first_ = true;
}

}  // namespace qgevrey
