#pragma once

#include <filesystem>
#include <iosfwd>

#include "pecnet/dataset.hpp"

namespace pecnet {

// Text dataset format:
//   # pecnet-dataset v1, T=<int>, classes=<int>
//   row,col,mask,class_label,depth_bot,depth_tob,truth,v0,...,v{T-1}
// class_label is -1 when absent; an empty depth field means "no label" (an
// empty depth_tob alone marks a single depth target).

Dataset read_dataset_csv(std::istream& is);
Dataset load_csv(const std::filesystem::path& path);

// Labels must be unscaled (StateError otherwise). Values are written in
// shortest round-trip form.
void write_dataset_csv(const Dataset& dataset, std::ostream& os);
void save_csv(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace pecnet
