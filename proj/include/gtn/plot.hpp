#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gtn/point_set.hpp"

namespace gtn {

enum class ImageFormat { kPng, kSvg };

ImageFormat parse_image_format(const std::string& name);
std::string image_extension(ImageFormat format);

struct ScatterStyle {
  int size_px = 800;
  double point_radius_px = 1.5;
  std::string title;
};

/// Static 2D scatter plot. With `color_values`, points are shaded along a
/// viridis-like ramp from the smallest to the largest value; otherwise they
/// are drawn in a single color.
void write_scatter(const std::filesystem::path& path, ImageFormat format, const PointSet& points,
                   const std::optional<std::vector<double>>& color_values, const ScatterStyle& style = {});

}  // namespace gtn
