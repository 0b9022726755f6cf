#include "cli/helpers.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "litege/error.hpp"
#include "litege/fileio.hpp"

namespace litege::cli {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_field(const std::string& field, const std::string& origin,
                   std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != field.size())
    fail_invalid(origin + ":" + std::to_string(line_no) +
                 ": expected a number, got '" + field + "'");
  return v;
}

bool looks_numeric(const std::string& field) {
  std::size_t used = 0;
  try {
    (void)std::stod(field, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == field.size() && used > 0;
}

std::vector<std::string> non_empty_lines(const std::string& text,
                                         std::vector<std::size_t>* line_nos) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lines.push_back(line);
    if (line_nos) line_nos->push_back(no);
  }
  return lines;
}

}  // namespace

std::vector<std::string> list_dir(const std::string& dir,
                                  const std::string& ext) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    fail_invalid("not a directory: " + dir);
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension().string() == ext)
      out.push_back(entry.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

void ensure_parent_dir(const std::string& path) {
  fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) fail_invalid("empty directory path");
  fs::create_directories(dir);
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_double_shortest(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& text, const std::string& origin) {
  if (text.empty() || text.size() > 16 ||
      text.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
    fail_invalid(origin + ": malformed hash '" + text + "'");
  return std::stoull(text, nullptr, 16);
}

std::string serialize_descriptor_rows(const std::vector<DescriptorRow>& rows) {
  std::string out;
  for (const DescriptorRow& row : rows) {
    std::string line = row.stem;
    for (Eigen::Index i = 0; i < row.values.size(); ++i) {
      if (!line.empty() || i > 0) line += ',';
      line += fmt_double(row.values[i]);
    }
    out += line;
    out += '\n';
  }
  return out;
}

std::vector<DescriptorRow> parse_descriptor_rows(const std::string& text,
                                                 const std::string& origin) {
  std::vector<std::size_t> line_nos;
  std::vector<std::string> lines = non_empty_lines(text, &line_nos);
  std::vector<DescriptorRow> rows;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    std::vector<std::string> fields = split_fields(lines[r]);
    DescriptorRow row;
    std::size_t first = 0;
    if (!looks_numeric(fields[0])) {
      row.stem = fields[0];
      first = 1;
    }
    if (fields.size() == first)
      fail_invalid(origin + ":" + std::to_string(line_nos[r]) +
                   ": row has no values");
    row.values.resize(static_cast<Eigen::Index>(fields.size() - first));
    for (std::size_t i = first; i < fields.size(); ++i)
      row.values[static_cast<Eigen::Index>(i - first)] =
          parse_field(fields[i], origin, line_nos[r]);
    if (!rows.empty() && rows.front().values.size() != row.values.size())
      fail_invalid(origin + ":" + std::to_string(line_nos[r]) +
                   ": inconsistent value count");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<QueryRow> parse_query_rows(const std::string& text,
                                       const std::string& origin) {
  std::vector<std::size_t> line_nos;
  std::vector<std::string> lines = non_empty_lines(text, &line_nos);
  std::vector<QueryRow> rows;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    std::vector<std::string> fields = split_fields(lines[r]);
    if (fields.size() != 6)
      fail_invalid(origin + ":" + std::to_string(line_nos[r]) +
                   ": expected 6 fields sx,sy,sz,dx,dy,dz");
    double v[6];
    for (std::size_t i = 0; i < 6; ++i)
      v[i] = parse_field(fields[i], origin, line_nos[r]);
    rows.push_back({Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])});
  }
  return rows;
}

std::vector<double> parse_number_lines(const std::string& text,
                                       const std::string& origin) {
  std::vector<std::size_t> line_nos;
  std::vector<std::string> lines = non_empty_lines(text, &line_nos);
  std::vector<double> values;
  for (std::size_t r = 0; r < lines.size(); ++r)
    values.push_back(parse_field(lines[r], origin, line_nos[r]));
  return values;
}

void write_space_sidecar(const std::string& artifact_path,
                         std::uint64_t space_hash) {
  nlohmann::ordered_json j;
  j["space_hash"] = hex64(space_hash);
  write_file_atomic(artifact_path + ".meta.json", j.dump(2) + "\n");
}

std::uint64_t read_space_sidecar(const std::string& artifact_path) {
  std::string path = artifact_path + ".meta.json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail_invalid(path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("space_hash") ||
      !j["space_hash"].is_string())
    fail_invalid(path + ": missing space_hash");
  return parse_hex64(j["space_hash"].get<std::string>(), path);
}

double peak_rss_mb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return static_cast<double>(usage.ru_maxrss) / 1024.0;
}

}  // namespace litege::cli
