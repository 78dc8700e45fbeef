#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pecnet/tensor.hpp"

namespace pecnet {

// One inspection point's time series plus its optional labels.
struct Signal {
  Tensor values;                       // [1, T]
  std::optional<std::size_t> class_label;
  std::optional<Tensor> depth_labels;  // [R]; mm or thickness, times the dataset scale once scaled

  friend bool operator==(const Signal&, const Signal&) = default;
};

// A labelled pixel of a scan; the unit a dataset file stores per row.
struct Record {
  std::size_t row = 0;
  std::size_t col = 0;
  bool usable = true;
  Signal signal;
  double truth = 0.0;

  friend bool operator==(const Record&, const Record&) = default;
};

struct Dataset {
  std::size_t signal_length = 0;
  std::size_t num_classes = 0;  // 0: no class labels
  std::vector<Record> records;
  bool scaled = false;
  double label_scale = 1.0;

  std::size_t size() const noexcept { return records.size(); }
  bool has_class_labels() const;
  bool has_depth_labels() const;
  // Number of depth targets per record (0 when unlabelled).
  std::size_t depth_outputs() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Full 2D scan: row-major signals with a per-pixel ground truth and a
// usability mask.
struct ScanGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t num_classes = 0;
  std::vector<Signal> signals;
  Tensor truth_map;                 // [height, width]
  std::vector<std::uint8_t> mask;  // 1 = usable

  std::size_t index(std::size_t r, std::size_t c) const noexcept { return r * width + c; }
  std::size_t signal_length() const;
  void validate() const;
};

Dataset to_dataset(const ScanGrid& grid);
Dataset usable_records(const Dataset& dataset);
Dataset concat(const Dataset& a, const Dataset& b);
Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices);

// Multiplies every depth label by `factor`; throws StateError when already
// scaled.
Dataset scale_labels(const Dataset& dataset, double factor);
Dataset unscale_labels(const Dataset& dataset);

// Clears the mask within Chebyshev distance dilation / 2 of every pixel
// whose truth value is below `threshold`.
ScanGrid remove_rivets(const ScanGrid& grid, double threshold, int dilation);

// Class-wise random halving: every class's records are shuffled with `seed`
// and split evenly. Throws SplitError on odd or unlabelled classes.
std::pair<Dataset, Dataset> split_specimen_a(const Dataset& dataset, std::uint64_t seed);

}  // namespace pecnet
