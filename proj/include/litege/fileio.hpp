#pragma once

#include <string>

namespace litege {

// Whole-file helpers. Writes go to a sibling temp file then rename, so a
// crash never leaves a partial file at the target path.
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& content);
bool file_exists(const std::string& path);

}  // namespace litege
