#include "gtn/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include <png.h>

#include "gtn/csv.hpp"
#include "gtn/error.hpp"

namespace gtn {

namespace {

struct Rgb {
  unsigned char r, g, b;
};

// Five viridis anchor colors, linearly interpolated.
Rgb ramp(double t) {
  static constexpr std::array<std::array<double, 3>, 5> kAnchors = {{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * (kAnchors.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(t), kAnchors.size() - 2);
  const double f = t - static_cast<double>(i);
  Rgb out{};
  unsigned char* dst[3] = {&out.r, &out.g, &out.b};
  for (int c = 0; c < 3; ++c) {
    *dst[c] = static_cast<unsigned char>(std::lround(kAnchors[i][c] * (1 - f) + kAnchors[i + 1][c] * f));
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double margin;
  double size;

  double px(double x) const { return margin + (x - x0) / (x1 - x0) * (size - 2 * margin); }
  double py(double y) const { return size - margin - (y - y0) / (y1 - y0) * (size - 2 * margin); }
};

Frame fit_frame(const PointSet& points, int size) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    x0 = std::min(x0, points(i, 0));
    x1 = std::max(x1, points(i, 0));
    y0 = std::min(y0, points(i, 1));
    y1 = std::max(y1, points(i, 1));
  }
  const double pad_x = x1 > x0 ? 0.05 * (x1 - x0) : 1.0;
  const double pad_y = y1 > y0 ? 0.05 * (y1 - y0) : 1.0;
  return {x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y, 40.0, static_cast<double>(size)};
}

std::vector<Rgb> point_colors(std::size_t n, const std::optional<std::vector<double>>& values) {
  std::vector<Rgb> colors(n, Rgb{31, 119, 180});
  if (!values) return colors;
  const auto [lo, hi] = std::minmax_element(values->begin(), values->end());
  const double span = *hi > *lo ? *hi - *lo : 1.0;
  for (std::size_t i = 0; i < n; ++i) colors[i] = ramp(((*values)[i] - *lo) / span);
  return colors;
}

void write_svg(const std::filesystem::path& path, const PointSet& points, const std::vector<Rgb>& colors,
               const Frame& frame, const ScatterStyle& style) {
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(style.size_px) + "\" height=\"" +
         std::to_string(style.size_px) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<rect x=\"" + format_double(frame.margin) + "\" y=\"" + format_double(frame.margin) + "\" width=\"" +
         format_double(frame.size - 2 * frame.margin) + "\" height=\"" + format_double(frame.size - 2 * frame.margin) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  if (!style.title.empty()) {
    out += "<text x=\"" + format_double(frame.margin) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" +
           style.title + "</text>\n";
  }
  char buf[160];
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"#%02x%02x%02x\"/>\n",
                  frame.px(points(i, 0)), frame.py(points(i, 1)), style.point_radius_px, colors[i].r, colors[i].g,
                  colors[i].b);
    out += buf;
  }
  out += "</svg>\n";
  write_text_file(path, out);
}

void write_png(const std::filesystem::path& path, const PointSet& points, const std::vector<Rgb>& colors,
               const Frame& frame, const ScatterStyle& style) {
  const int size = style.size_px;
  std::vector<unsigned char> pixels(static_cast<std::size_t>(size) * size * 3, 255);
  auto put = [&](int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= size || y >= size) return;
    auto* p = &pixels[(static_cast<std::size_t>(y) * size + x) * 3];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  };
  const int m0 = static_cast<int>(frame.margin);
  const int m1 = size - m0;
  for (int t = m0; t <= m1; ++t) {
    put(t, m0, {0, 0, 0});
    put(t, m1, {0, 0, 0});
    put(m0, t, {0, 0, 0});
    put(m1, t, {0, 0, 0});
  }
  const double r = style.point_radius_px;
  const int ri = static_cast<int>(std::ceil(r));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double cx = frame.px(points(i, 0));
    const double cy = frame.py(points(i, 1));
    for (int dy = -ri; dy <= ri; ++dy) {
      for (int dx = -ri; dx <= ri; ++dx) {
        if (dx * dx + dy * dy <= r * r + 0.5) {
          put(static_cast<int>(std::lround(cx)) + dx, static_cast<int>(std::lround(cy)) + dy, colors[i]);
        }
      }
    }
  }

  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!file) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "failed writing PNG '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(size), static_cast<png_uint_32>(size), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < size; ++y) png_write_row(png, &pixels[static_cast<std::size_t>(y) * size * 3]);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

ImageFormat parse_image_format(const std::string& name) {
  if (name == "png") return ImageFormat::kPng;
  if (name == "svg") return ImageFormat::kSvg;
  throw Error(ErrorCode::kConfig, "unknown image format '" + name + "' (expected png or svg)");
}

std::string image_extension(ImageFormat format) { return format == ImageFormat::kPng ? "png" : "svg"; }

void write_scatter(const std::filesystem::path& path, ImageFormat format, const PointSet& points,
                   const std::optional<std::vector<double>>& color_values, const ScatterStyle& style) {
  if (points.dim() != 2) throw Error(ErrorCode::kDimensionMismatch, "write_scatter expects 2D points");
  if (points.empty()) throw Error(ErrorCode::kEmptyData, "nothing to plot");
  if (color_values && color_values->size() != points.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "write_scatter: one color value per point required");
  }
  const auto frame = fit_frame(points, style.size_px);
  const auto colors = point_colors(points.size(), color_values);
  if (format == ImageFormat::kSvg) {
    write_svg(path, points, colors, frame, style);
  } else {
    write_png(path, points, colors, frame, style);
  }
}

}  // namespace gtn
