#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gtn/point_set.hpp"

namespace gtn {

/// A numeric CSV file. `header` is empty when the file had no header row.
struct CsvTable {
  std::vector<std::string> header;
  PointSet rows;
};

/// %.17g-style text; reads back to the identical double.
std::string format_double(double v);

/// Parses comma-separated numeric rows. The first line is treated as a header
/// when any of its cells is not a number. Throws Error(kParse) naming the line
/// for ragged rows or non-numeric cells, and Error(kEmptyData) when no data
/// rows remain.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text, const std::string& source_name = "<memory>");

/// Header x0..x{d-1}, one row per point.
void write_points_csv(const std::filesystem::path& path, const PointSet& points);
std::string points_csv(const PointSet& points);

struct PairsTable {
  LabeledDataset pairs;
  std::optional<std::vector<std::size_t>> clusters;
};

/// Header y0..y{d-1},x0..x{d-1}[,cluster].
void write_pairs_csv(const std::filesystem::path& path, const LabeledDataset& pairs,
                     const std::vector<std::size_t>* clusters = nullptr);
PairsTable read_pairs_csv(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gtn
