#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "litege/geometry.hpp"

namespace litege::cli {

// Regular files in dir with the given extension (".obj"), lexicographic.
std::vector<std::string> list_dir(const std::string& dir,
                                  const std::string& ext);
std::string stem_of(const std::string& path);
void ensure_parent_dir(const std::string& path);
void ensure_dir(const std::string& dir);
std::string join_path(const std::string& dir, const std::string& name);

// Round-trip-exact decimal rendering (%.17g).
std::string fmt_double(double v);
// Round-trip-exact shortest decimal rendering (0.1 stays "0.1").
std::string fmt_double_shortest(double v);
std::string hex64(std::uint64_t v);
std::uint64_t parse_hex64(const std::string& text, const std::string& origin);

// Descriptor CSV: "stem,v0,...,v{k-1}" per row; a row whose first field is
// numeric is anonymous (empty stem, k values).
struct DescriptorRow {
  std::string stem;
  Eigen::VectorXd values;
};
std::string serialize_descriptor_rows(const std::vector<DescriptorRow>& rows);
std::vector<DescriptorRow> parse_descriptor_rows(const std::string& text,
                                                 const std::string& origin);

// Query CSV: "sx,sy,sz,dx,dy,dz" per row.
struct QueryRow {
  Vec3 src;
  Vec3 dst;
};
std::vector<QueryRow> parse_query_rows(const std::string& text,
                                       const std::string& origin);

// One number per non-empty line.
std::vector<double> parse_number_lines(const std::string& text,
                                       const std::string& origin);

// Provenance sidecar <artifact>.meta.json binding an artifact to the
// descriptor space it was computed with.
void write_space_sidecar(const std::string& artifact_path,
                         std::uint64_t space_hash);
std::uint64_t read_space_sidecar(const std::string& artifact_path);

double peak_rss_mb();

}  // namespace litege::cli
