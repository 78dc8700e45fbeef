#include "pecnet/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pecnet/errors.hpp"

namespace pecnet::scenarios {

namespace {

// splitmix64 step; derives independent sub-seeds from the run seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

std::vector<FlawSpec> specimen_a_classes(bool airgap) {
  std::vector<FlawSpec> specs;
  specs.push_back({FlawLayer::kNone, 0.0, airgap});
  for (double d : {0.4826, 0.2519, 0.1884, 0.1545, 0.0572}) specs.push_back({FlawLayer::kBot, d, airgap});
  for (double d : {0.1431, 0.1820, 0.2413, 0.4826}) specs.push_back({FlawLayer::kTob, d, airgap});
  return specs;
}

std::pair<Dataset, Dataset> specimen_a(const SpecimenAOptions& options) {
  if (options.per_class < 2 || options.per_class % 2 != 0) {
    throw ConfigError("specimen-a per_class must be a positive even number");
  }
  const std::vector<FlawSpec> specs = specimen_a_classes(options.airgap);
  const std::uint64_t stream = options.airgap ? 2 : 0;
  const ScanGrid grid = generate_synthetic(specs, options.per_class, options.signal_length, options.noise_sigma,
                                           mix_seed(options.seed, stream), options.generator);
  return split_specimen_a(to_dataset(grid), mix_seed(options.seed, stream + 1));
}

ScanGrid specimen_b_section(const SpecimenBOptions& o, std::uint64_t section_seed) {
  if (o.height == 0 || o.width == 0) throw ConfigError("specimen-b section must be non-empty");
  if (o.rivet_spacing == 0) throw ConfigError("rivet spacing must be positive");
  std::mt19937_64 rng(section_seed);

  // Thinning field in [0, 1]: a clamped sum of random Gaussian bumps.
  struct Bump {
    double row, col, sigma, amplitude;
  };
  std::uniform_real_distribution<double> urow(0.0, static_cast<double>(o.height));
  std::uniform_real_distribution<double> ucol(0.0, static_cast<double>(o.width));
  std::uniform_real_distribution<double> usigma(3.0, 9.0);
  std::uniform_real_distribution<double> uamp(0.3, 1.0);
  std::vector<Bump> bumps;
  const std::size_t n_bumps = 4 + (o.height * o.width) / 200;
  for (std::size_t i = 0; i < n_bumps; ++i) bumps.push_back({urow(rng), ucol(rng), usigma(rng), uamp(rng)});

  ScanGrid grid;
  grid.height = o.height;
  grid.width = o.width;
  grid.num_classes = 0;
  grid.truth_map = Tensor({o.height, o.width});
  grid.mask.assign(o.height * o.width, 1);
  grid.signals.reserve(o.height * o.width);

  GeneratorParams params;
  params.liftoff_sigma = o.liftoff_sigma;
  const double rivet_row = static_cast<double>(o.height) / 2.0;

  for (std::size_t r = 0; r < o.height; ++r) {
    for (std::size_t c = 0; c < o.width; ++c) {
      double thinning = 0.0;
      for (const Bump& b : bumps) {
        const double dr = static_cast<double>(r) - b.row, dc = static_cast<double>(c) - b.col;
        thinning += b.amplitude * std::exp(-(dr * dr + dc * dc) / (2.0 * b.sigma * b.sigma));
      }
      thinning = std::clamp(thinning, 0.0, 1.0);

      bool rivet = false;
      for (std::size_t k = o.rivet_spacing / 2; k < o.width; k += o.rivet_spacing) {
        const double dr = static_cast<double>(r) - rivet_row, dc = static_cast<double>(c) - static_cast<double>(k);
        if (dr * dr + dc * dc <= o.rivet_radius * o.rivet_radius) rivet = true;
      }

      Signal s;
      double thickness;
      if (rivet) {
        thickness = 0.0;
        Tensor clean = pec_response({FlawLayer::kBot, 0.5, false}, o.signal_length);
        for (double& x : clean.values()) x *= 1.5;
        s.values = noisy_signal(clean, o.noise_sigma, params, rng);
      } else {
        thickness = o.nominal_thickness - o.max_thinning * thinning;
        // Metal loss in mm drives the response; thickness is the label.
        const double loss_mm = (o.nominal_thickness - thickness) * 10.0;
        s.values = noisy_signal(pec_response({FlawLayer::kBot, loss_mm, false}, o.signal_length), o.noise_sigma,
                                params, rng);
      }
      s.depth_labels = Tensor::vector({thickness});
      grid.truth_map.at(r, c) = thickness;
      grid.signals.push_back(std::move(s));
    }
  }
  return remove_rivets(grid, o.rivet_threshold, o.rivet_dilation);
}

std::pair<ScanGrid, ScanGrid> specimen_b(const SpecimenBOptions& options) {
  return {specimen_b_section(options, mix_seed(options.seed, 10)), specimen_b_section(options, mix_seed(options.seed, 11))};
}

}  // namespace pecnet::scenarios
