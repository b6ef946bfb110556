#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string_view>

#include "evc/error.hpp"
#include "evc/evcf.hpp"

namespace evc {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_cell(std::string_view cell, const std::string& origin, std::size_t line, std::size_t col) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size())
    fail(ErrorKind::Parse, origin + ": line " + std::to_string(line) + ", column " + std::to_string(col) +
                               ": not a number: '" + std::string(cell) + "'");
  if (!std::isfinite(v))
    fail(ErrorKind::Parse, origin + ": line " + std::to_string(line) + ": non-finite value");
  return v;
}

}  // namespace

FeatureSequence parse_csv(const std::string& text, double frame_shift_ms, CsvOptions options,
                          const std::string& origin) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (options.skip_header && line_no == 1) continue;
    std::size_t n = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      values.push_back(parse_cell(cell, origin, line_no, n + 1));
      ++n;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      cols = n;
    } else if (n != cols) {
      fail(ErrorKind::Parse, origin + ": line " + std::to_string(line_no) + " has " + std::to_string(n) +
                                 " fields, expected " + std::to_string(cols));
    }
    ++rows;
    if (end == text.size()) break;
  }
  if (rows == 0) fail(ErrorKind::Parse, origin + ": no data rows");
  return FeatureSequence(Matrix(rows, cols, std::move(values)), frame_shift_ms);
}

FeatureSequence csv_import(const std::filesystem::path& path, double frame_shift_ms, CsvOptions options) {
  return parse_csv(read_file(path), frame_shift_ms, options, path.string());
}

std::string format_csv(const Matrix& data) {
  std::string out;
  char buf[64];
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < data.cols(); ++c) {
      if (c) out.push_back(',');
      const auto res = std::to_chars(buf, buf + sizeof buf, data(r, c));
      out.append(buf, res.ptr);
    }
    out.push_back('\n');
  }
  return out;
}

void csv_export(const std::filesystem::path& path, const FeatureSequence& seq) {
  write_file_atomic(path, format_csv(seq.data()));
}

F0Contour read_f0(const std::filesystem::path& path, double frame_shift_ms) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 4 && std::string_view(bytes.data(), 4) == std::string_view(kEvcfMagic, 4)) {
    const FeatureSequence seq = decode_evcf(bytes, path.string());
    if (seq.dim() != 1) fail(ErrorKind::Shape, path.string() + ": F0 EVCF must be 1-dimensional");
    std::vector<double> hz = seq.column_values();
    for (double& v : hz)
      if (v < 0.0) fail(ErrorKind::Domain, path.string() + ": negative F0");
    return F0Contour::from_hz(std::move(hz), seq.frame_shift_ms());
  }
  // CSV: frame index, Hz, voiced flag. An optional header row is detected.
  const bool header = !bytes.empty() && (std::isalpha(static_cast<unsigned char>(bytes[0])) != 0);
  const FeatureSequence seq = parse_csv(bytes, frame_shift_ms, CsvOptions{header}, path.string());
  if (seq.dim() != 3) fail(ErrorKind::Shape, path.string() + ": F0 CSV needs columns frame,hz,voiced");
  std::vector<double> hz(seq.n_frames());
  std::vector<bool> voiced(seq.n_frames());
  for (std::size_t i = 0; i < seq.n_frames(); ++i) {
    const double flag = seq.data()(i, 2);
    if (flag != 0.0 && flag != 1.0)
      fail(ErrorKind::Parse, path.string() + ": voiced flag must be 0 or 1 at frame " + std::to_string(i));
    voiced[i] = flag == 1.0;
    hz[i] = voiced[i] ? seq.data()(i, 1) : 0.0;
  }
  return F0Contour(std::move(hz), std::move(voiced), frame_shift_ms);
}

void write_f0_csv(const std::filesystem::path& path, const F0Contour& f0) {
  Matrix m(f0.size(), 3);
  for (std::size_t i = 0; i < f0.size(); ++i) {
    m(i, 0) = static_cast<double>(i);
    m(i, 1) = f0.values()[i];
    m(i, 2) = f0.voiced()[i] ? 1.0 : 0.0;
  }
  write_file_atomic(path, "frame,hz,voiced\n" + format_csv(m));
}

}  // namespace evc
