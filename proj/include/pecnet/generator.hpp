#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "pecnet/dataset.hpp"
#include "pecnet/tensor.hpp"

namespace pecnet {

enum class FlawLayer { kBot, kTob, kNone };

std::string to_string(FlawLayer layer);
FlawLayer parse_flaw_layer(const std::string& name);

struct FlawSpec {
  FlawLayer layer = FlawLayer::kNone;
  double depth_mm = 0.0;
  bool airgap = false;

  void validate() const;
};

// Shape constants of the synthetic response
//   s(t) = A(d) * (exp(-t / tau_slow) - exp(-t / tau_fast(d)))
// with A(d) = 1 + amplitude_gain * d and tau_fast(d) = tau_fast0 * (1 - tau_gain * d).
struct GeneratorParams {
  double amplitude_gain = 0.5;     // per mm
  double tau_fast0 = 12.0;         // time steps
  double tau_gain = 0.6;           // per mm
  double tau_slow = 45.0;          // time steps
  double tob_attenuation = 0.5;    // scales the amplitude gain of far-layer flaws
  double airgap_scale = 0.8;
  std::size_t airgap_delay = 2;
  double liftoff_sigma = 0.0;      // per-signal relative amplitude jitter
};

// Noise-free response for one flaw, shape [1, T].
Tensor pec_response(const FlawSpec& flaw, std::size_t length, const GeneratorParams& params = {});

// Adds per-sample lift-off jitter and white noise to a clean response.
Tensor noisy_signal(const Tensor& clean, double noise_sigma, const GeneratorParams& params, std::mt19937_64& rng);

// One grid row per flaw spec, `per_class` columns. Class label = spec index,
// depth labels = (BOT depth, TOB depth), truth = flaw depth.
ScanGrid generate_synthetic(std::span<const FlawSpec> specs, std::size_t per_class, std::size_t length,
                            double noise_sigma, std::uint64_t seed, const GeneratorParams& params = {});

}  // namespace pecnet
