#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace qgevrey {

// %.17g, so every double round-trips.
std::string fmt17(double x);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& operator<<(double x);
  CsvWriter& operator<<(int x);
  CsvWriter& operator<<(const std::string& s);
  void end_row();

 private:
  std::ofstream os_;
  bool first_ = true;
  void sep();
};

}  // namespace qgevrey
