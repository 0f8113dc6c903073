#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace cantus::app {

/// Per-step CSV log. Opening an existing log for append checks the header.
class CsvLog {
 public:
  CsvLog(const std::filesystem::path& path, std::vector<std::string> columns, bool append);
  void row(const std::vector<double>& values);

 private:
  std::ofstream out_;
  std::size_t width_;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  int column(const std::string& name) const;  // -1 if absent
  std::vector<double> series(const std::string& name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

/// Keeps only the rows with step < `step` (for resuming).
void truncate_csv(const std::filesystem::path& path, long step);

void ensure_dir(const std::filesystem::path& dir);

}  // namespace cantus::app
