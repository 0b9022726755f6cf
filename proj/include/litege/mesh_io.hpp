#pragma once

#include <string>

#include "litege/geometry.hpp"

namespace litege {

enum class ShapeFormat { obj, ply, xyz };

// Chooses by extension (.obj/.ply/.xyz, case-insensitive).
ShapeFormat format_from_path(const std::string& path);

// OBJ/PLY files with faces load as meshes, without faces as point clouds;
// XYZ always loads as a point cloud. Parse errors carry file:line context.
Shape load_shape(const std::string& path, ShapeFormat format);
Shape load_shape(const std::string& path);

// XYZ cannot carry faces; saving a mesh to it is rejected.
void save_shape(const std::string& path, const Shape& shape,
                ShapeFormat format);
void save_shape(const std::string& path, const Shape& shape);

Shape parse_shape(const std::string& content, ShapeFormat format,
                  const std::string& origin);
std::string serialize_shape(const Shape& shape, ShapeFormat format);

}  // namespace litege
