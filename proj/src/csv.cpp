#include "gtn/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gtn/error.hpp"

namespace gtn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string header_line(const char* prefix, std::size_t d) {
  std::string out;
  for (std::size_t j = 0; j < d; ++j) {
    if (j) out += ',';
    out += prefix + std::to_string(j);
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

CsvTable parse_csv(const std::string& text, const std::string& source_name) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::size_t width = 0;
  std::vector<double> values;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_cells(line);
    if (first) {
      first = false;
      bool numeric = true;
      for (const auto c : cells) numeric = numeric && parse_number(c).has_value();
      width = cells.size();
      if (!numeric) {
        for (const auto c : cells) header.emplace_back(c);
        continue;
      }
    }
    if (cells.size() != width) {
      throw Error(ErrorCode::kParse, source_name + ":" + std::to_string(line_no) + ": expected " +
                                         std::to_string(width) + " cells, found " + std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto v = parse_number(cells[j]);
      if (!v) {
        throw Error(ErrorCode::kParse, source_name + ":" + std::to_string(line_no) + ": cell " + std::to_string(j + 1) +
                                           " is not a finite number: '" + std::string(cells[j]) + "'");
      }
      values.push_back(*v);
    }
  }
  if (values.empty()) throw Error(ErrorCode::kEmptyData, source_name + ": empty dataset");
  return {std::move(header), PointSet(width, std::move(values))};
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

std::string points_csv(const PointSet& points) {
  std::string out = header_line("x", points.dim()) + "\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto r = points.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j) out += ',';
      out += format_double(r[j]);
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

void write_points_csv(const std::filesystem::path& path, const PointSet& points) {
  write_text_file(path, points_csv(points));
}

void write_pairs_csv(const std::filesystem::path& path, const LabeledDataset& pairs,
                     const std::vector<std::size_t>* clusters) {
  pairs.check_aligned();
  const std::size_t d = pairs.sources.dim();
  std::string out = header_line("y", d) + "," + header_line("x", d);
  if (clusters) out += ",cluster";
  out += '\n';
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) out += format_double(pairs.sources(i, j)) + ',';
    for (std::size_t j = 0; j < d; ++j) {
      if (j) out += ',';
      out += format_double(pairs.targets(i, j));
    }
    if (clusters) out += ',' + std::to_string((*clusters)[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

PairsTable read_pairs_csv(const std::filesystem::path& path) {
  auto table = read_csv(path);
  const auto& h = table.header;
  std::vector<std::size_t> y_cols;
  std::vector<std::size_t> x_cols;
  std::optional<std::size_t> cluster_col;
  for (std::size_t j = 0; j < h.size(); ++j) {
    if (h[j] == "cluster") cluster_col = j;
    else if (!h[j].empty() && h[j][0] == 'y') y_cols.push_back(j);
    else if (!h[j].empty() && h[j][0] == 'x') x_cols.push_back(j);
  }
  if (h.empty() || y_cols.empty() || y_cols.size() != x_cols.size()) {
    throw Error(ErrorCode::kParse, path.string() + ": pairs file needs a header y0..y{d-1},x0..x{d-1}[,cluster]");
  }
  const std::size_t n = table.rows.size();
  const std::size_t d = y_cols.size();
  PairsTable out{{PointSet(n, d), PointSet(n, d)}, std::nullopt};
  if (cluster_col) out.clusters.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out.pairs.sources(i, j) = table.rows(i, y_cols[j]);
      out.pairs.targets(i, j) = table.rows(i, x_cols[j]);
    }
    if (cluster_col) {
      const double c = table.rows(i, *cluster_col);
      if (c < 0.0 || c != std::floor(c)) {
        throw Error(ErrorCode::kParse, path.string() + ": data row " + std::to_string(i + 1) +
                                           " has a non-integer cluster index");
      }
      (*out.clusters)[i] = static_cast<std::size_t>(c);
    }
  }
  return out;
}

}  // namespace gtn
