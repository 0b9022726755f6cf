#include "litege/fileio.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "litege/error.hpp"

namespace litege {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_invalid("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) fail_runtime("read failed: " + path);
  return out.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail_runtime("cannot open file for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail_runtime("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail_runtime("rename failed: " + tmp + " -> " + path + ": " + ec.message());
}

bool file_exists(const std::string& path) {
  std::error_code ec;
  return std::filesystem::exists(path, ec);
}

}  // namespace litege
