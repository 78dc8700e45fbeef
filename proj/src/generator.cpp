#include "pecnet/generator.hpp"

#include <cmath>

#include "pecnet/errors.hpp"

namespace pecnet {

std::string to_string(FlawLayer layer) {
  switch (layer) {
    case FlawLayer::kBot: return "BOT";
    case FlawLayer::kTob: return "TOB";
    case FlawLayer::kNone: return "NONE";
  }
  return "NONE";
}

FlawLayer parse_flaw_layer(const std::string& name) {
  if (name == "BOT" || name == "bot") return FlawLayer::kBot;
  if (name == "TOB" || name == "tob") return FlawLayer::kTob;
  if (name == "NONE" || name == "none") return FlawLayer::kNone;
  throw ConfigError("unknown flaw layer '" + name + "'");
}

void FlawSpec::validate() const {
  if (!(depth_mm >= 0.0) || !std::isfinite(depth_mm)) throw ConfigError("flaw depth must be finite and >= 0");
  if (layer == FlawLayer::kNone && depth_mm != 0.0) throw ConfigError("loss-free flaw spec must have depth 0");
}

Tensor pec_response(const FlawSpec& flaw, std::size_t length, const GeneratorParams& params) {
  flaw.validate();
  const double d = flaw.depth_mm;
  double gain = params.amplitude_gain * d;
  if (flaw.layer == FlawLayer::kTob) gain *= params.tob_attenuation;
  double amplitude = 1.0 + gain;
  const double tau_fast = params.tau_fast0 * (1.0 - params.tau_gain * d);
  if (!(tau_fast > 0.0) || !(tau_fast < params.tau_slow)) {
    throw ConfigError("flaw depth " + std::to_string(d) + " gives an invalid fast time constant");
  }
  std::size_t delay = 0;
  if (flaw.airgap) {
    amplitude *= params.airgap_scale;
    delay = params.airgap_delay;
  }
  Tensor out({1, length}, 0.0);
  for (std::size_t t = delay; t < length; ++t) {
    const double tt = static_cast<double>(t - delay);
    out[t] = amplitude * (std::exp(-tt / params.tau_slow) - std::exp(-tt / tau_fast));
  }
  return out;
}

Tensor noisy_signal(const Tensor& clean, double noise_sigma, const GeneratorParams& params, std::mt19937_64& rng) {
  Tensor out = clean;
  if (params.liftoff_sigma > 0.0) {
    std::normal_distribution<double> liftoff(1.0, params.liftoff_sigma);
    const double factor = liftoff(rng);
    for (double& x : out.values()) x *= factor;
  }
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double& x : out.values()) x += noise(rng);
  }
  return out;
}

ScanGrid generate_synthetic(std::span<const FlawSpec> specs, std::size_t per_class, std::size_t length,
                            double noise_sigma, std::uint64_t seed, const GeneratorParams& params) {
  if (specs.empty()) throw ConfigError("generator needs at least one flaw spec");
  if (per_class < 1) throw ConfigError("per_class must be >= 1");
  if (length < 8) throw ConfigError("signal length must be >= 8");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");

  ScanGrid grid;
  grid.height = specs.size();
  grid.width = per_class;
  grid.num_classes = specs.size();
  grid.truth_map = Tensor({grid.height, grid.width});
  grid.mask.assign(grid.height * grid.width, 1);
  grid.signals.reserve(grid.height * grid.width);

  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const FlawSpec& flaw = specs[k];
    const Tensor clean = pec_response(flaw, length, params);
    const double bot = flaw.layer == FlawLayer::kBot ? flaw.depth_mm : 0.0;
    const double tob = flaw.layer == FlawLayer::kTob ? flaw.depth_mm : 0.0;
    for (std::size_t i = 0; i < per_class; ++i) {
      Signal s;
      s.values = noisy_signal(clean, noise_sigma, params, rng);
      s.class_label = k;
      s.depth_labels = Tensor::vector({bot, tob});
      grid.signals.push_back(std::move(s));
      grid.truth_map.at(k, i) = flaw.depth_mm;
    }
  }
  return grid;
}

}  // namespace pecnet
