#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

namespace invnav {

/// Minimal CSV emitter. Doubles are written with 17 significant digits so
/// that files round-trip bit-exactly.
class CsvWriter {
 public:
  struct Empty {};
  static constexpr Empty empty{};

  explicit CsvWriter(std::ostream& os);

  void header(std::initializer_list<std::string_view> columns);

  CsvWriter& row();
  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(int v);
  CsvWriter& operator<<(long v);
  CsvWriter& operator<<(unsigned long v);
  CsvWriter& operator<<(std::string_view v);
  CsvWriter& operator<<(Empty);
  void end_row();

 private:
  void separator();

  std::ostream& os_;
  bool first_ = true;
};

}  // namespace invnav
