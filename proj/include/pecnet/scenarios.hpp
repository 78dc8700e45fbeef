#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "pecnet/dataset.hpp"
#include "pecnet/generator.hpp"

namespace pecnet::scenarios {

// Milled flaw depths (mm) of the two-sheet lap specimen.
inline constexpr std::array<double, 8> kBotDepthsMm{0.4826, 0.2519, 0.1884, 0.1545, 0.1143, 0.0572, 0.0402, 0.021};
inline constexpr std::array<double, 8> kTobDepthsMm{0.0847, 0.1431, 0.1693, 0.2032, 0.1736, 0.1820, 0.2413, 0.4826};

// Ten classes: 0 is loss-free, 1-5 near-layer (BOT) flaws, 6-9 far-layer
// (TOB) flaws. The subset maximises the smallest distance between clean
// responses.
std::vector<FlawSpec> specimen_a_classes(bool airgap);

struct SpecimenAOptions {
  std::size_t per_class = 200;  // split half/half
  std::size_t signal_length = 100;
  double noise_sigma = 0.01;
  bool airgap = false;
  std::uint64_t seed = 0;
  GeneratorParams generator;
};

// Unscaled train/test sets for the ten-class dual-depth task.
std::pair<Dataset, Dataset> specimen_a(const SpecimenAOptions& options);

struct SpecimenBOptions {
  std::size_t height = 48;
  std::size_t width = 80;
  std::size_t signal_length = 100;
  double noise_sigma = 0.01;
  double liftoff_sigma = 0.05;
  double nominal_thickness = 0.1;
  double max_thinning = 0.045;
  std::size_t rivet_spacing = 20;
  double rivet_radius = 2.0;
  double rivet_threshold = 0.05;
  int rivet_dilation = 12;
  std::uint64_t seed = 0;
};

// One lap-joint section: smooth thickness map with a row of rivet holes,
// already passed through remove_rivets. Labels are single thickness values.
ScanGrid specimen_b_section(const SpecimenBOptions& options, std::uint64_t section_seed);

// Train and test sections generated from independent sub-seeds.
std::pair<ScanGrid, ScanGrid> specimen_b(const SpecimenBOptions& options);

}  // namespace pecnet::scenarios
