#include "litege/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <string_view>

#include "litege/fileio.hpp"

namespace litege {

namespace {

std::string lower_ext(const std::string& path) {
  std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

struct LineScanner {
  std::string_view content;
  std::size_t pos = 0;
  std::size_t line_no = 0;

  bool next(std::string_view& line) {
    if (pos >= content.size()) return false;
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    line = content.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return true;
  }
};

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

[[noreturn]] void parse_fail(const std::string& origin, std::size_t line_no,
                             const std::string& message) {
  fail_invalid(origin + ":" + std::to_string(line_no) + ": " + message);
}

double parse_double(std::string_view token, const std::string& origin,
                    std::size_t line_no) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    parse_fail(origin, line_no, "bad number '" + std::string(token) + "'");
  return value;
}

long parse_long(std::string_view token, const std::string& origin,
                std::size_t line_no) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    parse_fail(origin, line_no, "bad integer '" + std::string(token) + "'");
  return value;
}

// Leading integer of an OBJ face field ("7", "7/1", "7//2", "7/1/2").
long obj_face_index(std::string_view token, const std::string& origin,
                    std::size_t line_no) {
  std::size_t slash = token.find('/');
  if (slash != std::string_view::npos) token = token.substr(0, slash);
  if (token.empty()) parse_fail(origin, line_no, "empty face index");
  return parse_long(token, origin, line_no);
}

Shape finish_geometry(std::vector<Vec3> vertices,
                      std::vector<std::array<std::uint32_t, 3>> faces,
                      const std::string& origin) {
  if (vertices.empty()) fail_invalid(origin + ": empty geometry");
  if (faces.empty()) {
    PointCloud cloud{std::move(vertices)};
    validate_cloud(cloud);
    return cloud;
  }
  TriangleMesh mesh{std::move(vertices), std::move(faces)};
  validate_mesh(mesh);
  return mesh;
}

Shape parse_obj(std::string_view content, const std::string& origin) {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  LineScanner scan{content};
  std::string_view line;
  while (scan.next(line)) {
    auto tokens = tokenize(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (tokens[0] == "v") {
      if (tokens.size() < 4)
        parse_fail(origin, scan.line_no, "vertex needs 3 coordinates");
      vertices.emplace_back(parse_double(tokens[1], origin, scan.line_no),
                            parse_double(tokens[2], origin, scan.line_no),
                            parse_double(tokens[3], origin, scan.line_no));
    } else if (tokens[0] == "f") {
      if (tokens.size() < 4)
        parse_fail(origin, scan.line_no, "face needs at least 3 indices");
      std::vector<std::uint32_t> poly;
      poly.reserve(tokens.size() - 1);
      for (std::size_t t = 1; t < tokens.size(); ++t) {
        long raw = obj_face_index(tokens[t], origin, scan.line_no);
        long idx = raw < 0 ? static_cast<long>(vertices.size()) + raw : raw - 1;
        if (idx < 0 || idx >= static_cast<long>(vertices.size()))
          parse_fail(origin, scan.line_no,
                     "face index " + std::to_string(raw) + " out of range (" +
                         std::to_string(vertices.size()) + " vertices so far)");
        poly.push_back(static_cast<std::uint32_t>(idx));
      }
      for (std::size_t t = 1; t + 1 < poly.size(); ++t)
        faces.push_back({poly[0], poly[t], poly[t + 1]});
    }
  }
  return finish_geometry(std::move(vertices), std::move(faces), origin);
}

struct PlyProperty {
  std::string name;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

Shape parse_ply(std::string_view content, const std::string& origin) {
  LineScanner scan{content};
  std::string_view line;
  if (!scan.next(line) || tokenize(line) != std::vector<std::string_view>{"ply"})
    parse_fail(origin, 1, "missing 'ply' magic");
  bool have_format = false;
  std::vector<PlyElement> elements;
  for (;;) {
    if (!scan.next(line)) parse_fail(origin, scan.line_no, "missing end_header");
    auto tokens = tokenize(line);
    if (tokens.empty() || tokens[0] == "comment" || tokens[0] == "obj_info")
      continue;
    if (tokens[0] == "format") {
      if (tokens.size() < 2 || tokens[1] != "ascii")
        parse_fail(origin, scan.line_no, "only ascii PLY is supported");
      have_format = true;
    } else if (tokens[0] == "element") {
      if (tokens.size() != 3) parse_fail(origin, scan.line_no, "bad element line");
      PlyElement e;
      e.name = std::string(tokens[1]);
      long n = parse_long(tokens[2], origin, scan.line_no);
      if (n < 0) parse_fail(origin, scan.line_no, "negative element count");
      e.count = static_cast<std::size_t>(n);
      elements.push_back(std::move(e));
    } else if (tokens[0] == "property") {
      if (elements.empty())
        parse_fail(origin, scan.line_no, "property before any element");
      PlyProperty p;
      if (tokens.size() >= 2 && tokens[1] == "list") {
        if (tokens.size() != 5) parse_fail(origin, scan.line_no, "bad list property");
        p.is_list = true;
        p.name = std::string(tokens[4]);
      } else {
        if (tokens.size() != 3) parse_fail(origin, scan.line_no, "bad property");
        p.name = std::string(tokens[2]);
      }
      elements.back().properties.push_back(std::move(p));
    } else if (tokens[0] == "end_header") {
      break;
    } else {
      parse_fail(origin, scan.line_no,
                 "unsupported header line '" + std::string(tokens[0]) + "'");
    }
  }
  if (!have_format) parse_fail(origin, scan.line_no, "missing format line");

  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  for (const PlyElement& e : elements) {
    if (e.name == "vertex") {
      int ix = -1, iy = -1, iz = -1;
      for (std::size_t i = 0; i < e.properties.size(); ++i) {
        if (e.properties[i].is_list)
          parse_fail(origin, scan.line_no, "list property in vertex element");
        if (e.properties[i].name == "x") ix = static_cast<int>(i);
        if (e.properties[i].name == "y") iy = static_cast<int>(i);
        if (e.properties[i].name == "z") iz = static_cast<int>(i);
      }
      if (ix < 0 || iy < 0 || iz < 0)
        parse_fail(origin, scan.line_no, "vertex element lacks x/y/z");
      vertices.reserve(e.count);
      for (std::size_t r = 0; r < e.count; ++r) {
        if (!scan.next(line)) parse_fail(origin, scan.line_no, "truncated vertex data");
        auto tokens = tokenize(line);
        if (tokens.size() != e.properties.size())
          parse_fail(origin, scan.line_no, "vertex row width mismatch");
        vertices.emplace_back(parse_double(tokens[ix], origin, scan.line_no),
                              parse_double(tokens[iy], origin, scan.line_no),
                              parse_double(tokens[iz], origin, scan.line_no));
      }
    } else if (e.name == "face") {
      if (e.properties.size() != 1 || !e.properties[0].is_list ||
          (e.properties[0].name != "vertex_indices" &&
           e.properties[0].name != "vertex_index"))
        parse_fail(origin, scan.line_no, "face element must be a single vertex_indices list");
      faces.reserve(e.count);
      for (std::size_t r = 0; r < e.count; ++r) {
        if (!scan.next(line)) parse_fail(origin, scan.line_no, "truncated face data");
        auto tokens = tokenize(line);
        if (tokens.empty()) parse_fail(origin, scan.line_no, "empty face row");
        long n = parse_long(tokens[0], origin, scan.line_no);
        if (n < 3) parse_fail(origin, scan.line_no, "face with fewer than 3 indices");
        if (tokens.size() != static_cast<std::size_t>(n) + 1)
          parse_fail(origin, scan.line_no, "face row width mismatch");
        std::vector<std::uint32_t> poly;
        poly.reserve(static_cast<std::size_t>(n));
        for (long t = 1; t <= n; ++t) {
          long idx = parse_long(tokens[static_cast<std::size_t>(t)], origin, scan.line_no);
          if (idx < 0 || idx >= static_cast<long>(vertices.size()))
            parse_fail(origin, scan.line_no,
                       "face index " + std::to_string(idx) + " out of range");
          poly.push_back(static_cast<std::uint32_t>(idx));
        }
        for (std::size_t t = 1; t + 1 < poly.size(); ++t)
          faces.push_back({poly[0], poly[t], poly[t + 1]});
      }
    } else {
      parse_fail(origin, scan.line_no, "unsupported element '" + e.name + "'");
    }
  }
  return finish_geometry(std::move(vertices), std::move(faces), origin);
}

Shape parse_xyz(std::string_view content, const std::string& origin) {
  std::vector<Vec3> points;
  LineScanner scan{content};
  std::string_view line;
  while (scan.next(line)) {
    auto tokens = tokenize(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (tokens.size() < 3)
      parse_fail(origin, scan.line_no, "point needs 3 coordinates");
    points.emplace_back(parse_double(tokens[0], origin, scan.line_no),
                        parse_double(tokens[1], origin, scan.line_no),
                        parse_double(tokens[2], origin, scan.line_no));
  }
  if (points.empty()) fail_invalid(origin + ": empty geometry");
  PointCloud cloud{std::move(points)};
  validate_cloud(cloud);
  return cloud;
}

void append_point(std::string& out, const char* prefix, const Vec3& p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s%.17g %.17g %.17g\n", prefix, p.x(), p.y(),
                p.z());
  out += buf;
}

}  // namespace

ShapeFormat format_from_path(const std::string& path) {
  std::string ext = lower_ext(path);
  if (ext == "obj") return ShapeFormat::obj;
  if (ext == "ply") return ShapeFormat::ply;
  if (ext == "xyz") return ShapeFormat::xyz;
  fail_invalid("cannot infer shape format from path: " + path);
}

Shape parse_shape(const std::string& content, ShapeFormat format,
                  const std::string& origin) {
  switch (format) {
    case ShapeFormat::obj: return parse_obj(content, origin);
    case ShapeFormat::ply: return parse_ply(content, origin);
    case ShapeFormat::xyz: return parse_xyz(content, origin);
  }
  fail_invalid("unknown shape format");
}

Shape load_shape(const std::string& path, ShapeFormat format) {
  return parse_shape(read_file(path), format, path);
}

Shape load_shape(const std::string& path) {
  return load_shape(path, format_from_path(path));
}

std::string serialize_shape(const Shape& shape, ShapeFormat format) {
  const std::vector<Vec3>& pts = shape_points(shape);
  std::string out;
  out.reserve(pts.size() * 64);
  if (format == ShapeFormat::xyz) {
    if (is_mesh(shape)) fail_invalid("xyz format cannot store faces");
    for (const Vec3& p : pts) append_point(out, "", p);
    return out;
  }
  const std::vector<std::array<std::uint32_t, 3>>* faces = nullptr;
  if (is_mesh(shape)) faces = &as_mesh(shape).faces;
  if (format == ShapeFormat::obj) {
    for (const Vec3& p : pts) append_point(out, "v ", p);
    if (faces) {
      char buf[64];
      for (const auto& f : *faces) {
        std::snprintf(buf, sizeof buf, "f %u %u %u\n", f[0] + 1, f[1] + 1,
                      f[2] + 1);
        out += buf;
      }
    }
    return out;
  }
  // PLY.
  out += "ply\nformat ascii 1.0\n";
  out += "element vertex " + std::to_string(pts.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  out += "element face " + std::to_string(faces ? faces->size() : 0) + "\n";
  out += "property list uchar int vertex_indices\nend_header\n";
  for (const Vec3& p : pts) append_point(out, "", p);
  if (faces) {
    char buf[64];
    for (const auto& f : *faces) {
      std::snprintf(buf, sizeof buf, "3 %u %u %u\n", f[0], f[1], f[2]);
      out += buf;
    }
  }
  return out;
}

void save_shape(const std::string& path, const Shape& shape,
                ShapeFormat format) {
  write_file_atomic(path, serialize_shape(shape, format));
}

void save_shape(const std::string& path, const Shape& shape) {
  save_shape(path, shape, format_from_path(path));
}

}  // namespace litege
