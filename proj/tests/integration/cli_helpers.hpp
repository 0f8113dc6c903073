#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace cli {

namespace fs = std::filesystem;

inline std::string binary() { return CANTUS_BIN; }

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Runs `cantus <args>` and captures stdout, stderr and the exit code.
inline Result run(const std::string& args, const fs::path& scratch) {
  fs::create_directories(scratch);
  const auto out = scratch / "stdout.txt";
  const auto err = scratch / "stderr.txt";
  const std::string cmd = binary() + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

inline fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("cantus_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

inline nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

/// Byte images of every regular file under `dir`, keyed by relative path.
inline std::string tree_digest(const fs::path& dir) {
  std::ostringstream s;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) s << fs::relative(f, dir).string() << '\n' << slurp(f) << '\n';
  return s.str();
}

}  // namespace cli
