#include "cantus/app/log.hpp"

#include <cstdio>
#include <sstream>

#include "cantus/error.hpp"

namespace cantus::app {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

CsvLog::CsvLog(const fs::path& path, std::vector<std::string> columns, bool append) : width_(columns.size()) {
  const std::string header = join(columns);
  if (append && fs::exists(path)) {
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    if (first != header) throw ValidationError("log " + path.string() + " has different columns; cannot resume");
    out_.open(path, std::ios::app);
  } else {
    out_.open(path, std::ios::trunc);
    out_ << header << '\n';
  }
  if (!out_) throw IoError("cannot write " + path.string());
}

void CsvLog::row(const std::vector<double>& values) {
  if (values.size() != width_) throw ValidationError("log row has the wrong width");
  char buf[40];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    out_ << (i ? "," : "") << buf;
  }
  out_ << '\n';
  out_.flush();
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> CsvTable::series(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw ValidationError("log has no column '" + name + "'");
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + " is empty");
  t.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split(line)) row.push_back(std::stod(cell));
    if (row.size() != t.columns.size()) throw ValidationError(path.string() + ": ragged row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

void truncate_csv(const fs::path& path, long step) {
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  std::string header, line, kept;
  std::getline(in, header);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (std::stol(line.substr(0, line.find(','))) < step) kept += line + '\n';
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  out << header << '\n' << kept;
  if (!out) throw IoError("cannot rewrite " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace cantus::app
