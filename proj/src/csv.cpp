#include "invnav/csv.hpp"

#include <cmath>
#include <cstdio>

namespace invnav {

CsvWriter::CsvWriter(std::ostream& os) : os_(os) {}

void CsvWriter::header(std::initializer_list<std::string_view> columns) {
  row();
  for (auto c : columns) *this << c;
  end_row();
}

CsvWriter& CsvWriter::row() {
  first_ = true;
  return *this;
}

void CsvWriter::separator() {
  if (!first_) os_ << ',';
  first_ = false;
}

CsvWriter& CsvWriter::operator<<(double v) {
  separator();
  if (std::isnan(v)) {
    os_ << "nan";
  } else {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os_ << buf;
  }
  return *this;
}

CsvWriter& CsvWriter::operator<<(int v) {
  separator();
  os_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(long v) {
  separator();
  os_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(unsigned long v) {
  separator();
  os_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::string_view v) {
  separator();
  os_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(Empty) {
  separator();
  return *this;
}

void CsvWriter::end_row() {
  os_ << '\n';
  first_ = true;
}

}  // namespace invnav
