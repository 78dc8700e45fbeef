#include "pecnet/dataset.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "pecnet/errors.hpp"

namespace pecnet {

bool Dataset::has_class_labels() const {
  return !records.empty() && std::all_of(records.begin(), records.end(), [](const Record& r) {
    return r.signal.class_label.has_value();
  });
}

bool Dataset::has_depth_labels() const {
  return !records.empty() && std::all_of(records.begin(), records.end(), [](const Record& r) {
    return r.signal.depth_labels.has_value();
  });
}

std::size_t Dataset::depth_outputs() const {
  for (const Record& r : records)
    if (r.signal.depth_labels) return r.signal.depth_labels->size();
  return 0;
}

std::size_t ScanGrid::signal_length() const { return signals.empty() ? 0 : signals.front().values.size(); }

void ScanGrid::validate() const {
  if (height == 0 || width == 0) throw ShapeError("scan grid must be non-empty");
  if (signals.size() != height * width || mask.size() != height * width ||
      truth_map.shape() != Shape{height, width}) {
    throw ShapeError("scan grid " + std::to_string(height) + "x" + std::to_string(width) +
                     " has inconsistent signals, mask or truth map");
  }
  const std::size_t t = signal_length();
  for (const Signal& s : signals)
    if (s.values.shape() != Shape{1, t}) throw ShapeError("scan grid signals differ in length");
}

Dataset to_dataset(const ScanGrid& grid) {
  grid.validate();
  Dataset out;
  out.signal_length = grid.signal_length();
  out.num_classes = grid.num_classes;
  out.records.reserve(grid.signals.size());
  for (std::size_t r = 0; r < grid.height; ++r) {
    for (std::size_t c = 0; c < grid.width; ++c) {
      const std::size_t i = grid.index(r, c);
      out.records.push_back(Record{r, c, grid.mask[i] != 0, grid.signals[i], grid.truth_map.at(r, c)});
    }
  }
  return out;
}

Dataset usable_records(const Dataset& dataset) {
  Dataset out = dataset;
  std::erase_if(out.records, [](const Record& r) { return !r.usable; });
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.signal_length != b.signal_length || a.num_classes != b.num_classes || a.scaled != b.scaled ||
      a.label_scale != b.label_scale) {
    throw DataError("cannot concatenate datasets with different length, classes or label scaling");
  }
  Dataset out = a;
  out.records.insert(out.records.end(), b.records.begin(), b.records.end());
  return out;
}

Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices) {
  Dataset out = dataset;
  out.records.clear();
  out.records.reserve(indices.size());
  for (std::size_t i : indices) out.records.push_back(dataset.records.at(i));
  return out;
}

namespace {

Dataset rescale(const Dataset& dataset, double factor) {
  Dataset out = dataset;
  for (Record& r : out.records)
    if (r.signal.depth_labels)
      for (double& x : r.signal.depth_labels->values()) x *= factor;
  return out;
}

}  // namespace

Dataset scale_labels(const Dataset& dataset, double factor) {
  if (dataset.scaled) throw StateError("labels are already scaled by " + std::to_string(dataset.label_scale));
  if (!(factor > 0.0)) throw ConfigError("label scale factor must be positive");
  Dataset out = rescale(dataset, factor);
  out.scaled = true;
  out.label_scale = factor;
  return out;
}

Dataset unscale_labels(const Dataset& dataset) {
  if (!dataset.scaled) throw StateError("labels are not scaled");
  Dataset out = rescale(dataset, 1.0 / dataset.label_scale);
  out.scaled = false;
  out.label_scale = 1.0;
  return out;
}

ScanGrid remove_rivets(const ScanGrid& grid, double threshold, int dilation) {
  if (dilation <= 0) throw ConfigError("rivet dilation must be positive, got " + std::to_string(dilation));
  if (grid.truth_map.shape() != Shape{grid.height, grid.width}) throw ShapeError("remove_rivets needs a truth map");
  const auto h = static_cast<std::ptrdiff_t>(grid.height);
  const auto w = static_cast<std::ptrdiff_t>(grid.width);
  const std::ptrdiff_t radius = dilation / 2;

  // Separable square dilation: rows first, then columns.
  std::vector<std::uint8_t> marked(grid.height * grid.width, 0);
  for (std::size_t i = 0; i < marked.size(); ++i) marked[i] = grid.truth_map[i] < threshold;

  std::vector<std::uint8_t> horizontal(marked.size(), 0);
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    std::ptrdiff_t last = -(radius + 1) - 1;  // most recent marked column
    std::vector<std::ptrdiff_t> next(static_cast<std::size_t>(w), w + radius + 1);
    for (std::ptrdiff_t c = w - 1, seen = w + radius + 1; c >= 0; --c) {
      if (marked[static_cast<std::size_t>(r * w + c)]) seen = c;
      next[static_cast<std::size_t>(c)] = seen;
    }
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      if (marked[static_cast<std::size_t>(r * w + c)]) last = c;
      horizontal[static_cast<std::size_t>(r * w + c)] =
          (c - last <= radius) || (next[static_cast<std::size_t>(c)] - c <= radius);
    }
  }

  ScanGrid out = grid;
  for (std::ptrdiff_t c = 0; c < w; ++c) {
    std::ptrdiff_t last = -(radius + 1) - 1;
    std::vector<std::ptrdiff_t> next(static_cast<std::size_t>(h), h + radius + 1);
    for (std::ptrdiff_t r = h - 1, seen = h + radius + 1; r >= 0; --r) {
      if (horizontal[static_cast<std::size_t>(r * w + c)]) seen = r;
      next[static_cast<std::size_t>(r)] = seen;
    }
    for (std::ptrdiff_t r = 0; r < h; ++r) {
      if (horizontal[static_cast<std::size_t>(r * w + c)]) last = r;
      if ((r - last <= radius) || (next[static_cast<std::size_t>(r)] - r <= radius))
        out.mask[static_cast<std::size_t>(r * w + c)] = 0;
    }
  }
  return out;
}

std::pair<Dataset, Dataset> split_specimen_a(const Dataset& dataset, std::uint64_t seed) {
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& label = dataset.records[i].signal.class_label;
    if (!label) throw SplitError("record " + std::to_string(i) + " has no class label");
    by_class[*label].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train_idx, test_idx;
  for (auto& [label, members] : by_class) {
    if (members.size() % 2 != 0) {
      throw SplitError("class " + std::to_string(label) + " has an odd number of samples (" +
                       std::to_string(members.size()) + ")");
    }
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t half = members.size() / 2;
    std::vector<std::size_t> first(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<std::size_t> second(members.begin() + static_cast<std::ptrdiff_t>(half), members.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    train_idx.insert(train_idx.end(), first.begin(), first.end());
    test_idx.insert(test_idx.end(), second.begin(), second.end());
  }
  return {subset(dataset, train_idx), subset(dataset, test_idx)};
}

}  // namespace pecnet
