#include "pecnet/dataset_csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pecnet/errors.hpp"

namespace pecnet {

namespace {

constexpr std::size_t kFixedColumns = 7;

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_fields(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view field, std::size_t line, const char* name) {
  field = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    fail(line, std::string("non-numeric ") + name + " '" + std::string(field) + "'");
  }
  if (!std::isfinite(value)) fail(line, std::string("non-finite ") + name);
  return value;
}

long long parse_int(std::string_view field, std::size_t line, const char* name) {
  field = trim(field);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    fail(line, std::string("non-integer ") + name + " '" + std::string(field) + "'");
  }
  return value;
}

std::size_t header_value(std::string_view header, std::string_view key) {
  const std::size_t at = header.find(key);
  if (at == std::string_view::npos) fail(1, "header lacks '" + std::string(key) + "'");
  std::string_view rest = header.substr(at + key.size());
  const std::size_t end = rest.find_first_of(", ");
  rest = rest.substr(0, end);
  const long long v = parse_int(rest, 1, key.data());
  if (v < 0) fail(1, "negative header value for '" + std::string(key) + "'");
  return static_cast<std::size_t>(v);
}

void append_double(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail(1, "empty file (missing header)");
  const std::string_view header = trim(line);
  constexpr std::string_view kPrefix = "# pecnet-dataset v1";
  if (header.substr(0, kPrefix.size()) != kPrefix) fail(1, "missing '# pecnet-dataset v1' header");

  Dataset data;
  data.signal_length = header_value(header, "T=");
  data.num_classes = header_value(header, "classes=");
  if (data.signal_length == 0) fail(1, "T must be positive");

  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const std::vector<std::string_view> f = split_fields(text);
    if (f.size() != kFixedColumns + data.signal_length) {
      fail(line_no, "expected " + std::to_string(kFixedColumns + data.signal_length) + " fields (T=" +
                        std::to_string(data.signal_length) + "), got " + std::to_string(f.size()));
    }
    Record rec;
    const long long row = parse_int(f[0], line_no, "row");
    const long long col = parse_int(f[1], line_no, "col");
    const long long mask = parse_int(f[2], line_no, "mask");
    const long long label = parse_int(f[3], line_no, "class_label");
    if (row < 0 || col < 0) fail(line_no, "negative row/col");
    if (mask != 0 && mask != 1) fail(line_no, "mask must be 0 or 1");
    if (label < -1 || (label >= 0 && static_cast<std::size_t>(label) >= data.num_classes)) {
      fail(line_no, "class_label " + std::to_string(label) + " outside [-1, " + std::to_string(data.num_classes) + ")");
    }
    rec.row = static_cast<std::size_t>(row);
    rec.col = static_cast<std::size_t>(col);
    rec.usable = mask == 1;
    if (label >= 0) rec.signal.class_label = static_cast<std::size_t>(label);

    const bool has_bot = !trim(f[4]).empty();
    const bool has_tob = !trim(f[5]).empty();
    if (has_tob && !has_bot) fail(line_no, "depth_tob given without depth_bot");
    if (has_bot && has_tob) {
      rec.signal.depth_labels =
          Tensor::vector({parse_double(f[4], line_no, "depth_bot"), parse_double(f[5], line_no, "depth_tob")});
    } else if (has_bot) {
      rec.signal.depth_labels = Tensor::vector({parse_double(f[4], line_no, "depth_bot")});
    }
    rec.truth = parse_double(f[6], line_no, "truth");

    std::vector<double> values(data.signal_length);
    for (std::size_t t = 0; t < data.signal_length; ++t) values[t] = parse_double(f[kFixedColumns + t], line_no, "value");
    rec.signal.values = Tensor({1, data.signal_length}, std::move(values));
    data.records.push_back(std::move(rec));
  }
  return data;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open dataset '" + path.string() + "'");
  try {
    return read_dataset_csv(is);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_dataset_csv(const Dataset& dataset, std::ostream& os) {
  if (dataset.scaled) throw StateError("dataset files hold unscaled labels; unscale before saving");
  os << "# pecnet-dataset v1, T=" << dataset.signal_length << ", classes=" << dataset.num_classes << '\n';
  std::string line;
  for (const Record& r : dataset.records) {
    if (r.signal.values.size() != dataset.signal_length) throw ShapeError("record length differs from dataset T");
    line.clear();
    line += std::to_string(r.row) + ',' + std::to_string(r.col) + ',' + (r.usable ? '1' : '0') + ',';
    line += r.signal.class_label ? std::to_string(*r.signal.class_label) : std::string("-1");
    line += ',';
    if (r.signal.depth_labels) {
      const Tensor& d = *r.signal.depth_labels;
      if (d.size() > 2) throw ShapeError("dataset files hold at most two depth labels");
      append_double(line, d[0]);
      line += ',';
      if (d.size() == 2) append_double(line, d[1]);
    } else {
      line += ',';
    }
    line += ',';
    append_double(line, r.truth);
    for (double v : r.signal.values.values()) {
      line += ',';
      append_double(line, v);
    }
    line += '\n';
    os << line;
  }
  if (!os) throw IoError("failed writing dataset");
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  write_dataset_csv(dataset, os);
}

}  // namespace pecnet
