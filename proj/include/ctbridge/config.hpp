#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctbridge/bridge.hpp"
#include "ctbridge/geometry.hpp"
#include "ctbridge/phantom.hpp"
#include "ctbridge/sinoproc.hpp"

namespace ctbridge {

enum class PredictorKind { gaussian, identity, affine, external };

struct PredictorSpec {
  PredictorKind kind = PredictorKind::gaussian;
  double sigma_x2 = 0.01;     // normalized units
  double blur_sigma = 1.5;    // pixels
  std::filesystem::path table;
  std::filesystem::path offset;
  std::vector<std::string> command;
};

struct SweepSpec {
  std::string parameter;      // a whitelisted "section.key"
  std::vector<std::string> values;
};

/// Typed view of a sectioned key = value file. Every key must be listed in
/// config_keys(); values are validated when the typed view is rebuilt.
struct ExperimentConfig {
  FanBeamGeometry geometry = FanBeamGeometry::desk_simulation();
  PhantomSpec phantom;
  Incompleteness incompleteness = Incompleteness::sparse_view;
  ExtractionSpec extraction;
  std::optional<NoiseModel> noise;
  PreprocessSpec preprocess;
  PredictorSpec predictor;
  SamplerConfig sampler;
  double image_scale = kMuWater;  // images and data are divided by this
  std::optional<SweepSpec> sweep;
  std::size_t images = 1;          // phantoms per run, seeds offset by the image index
  std::filesystem::path output_dir = "out";
  std::size_t threads = 0;         // concurrent images or sweep points; 0 = all cores

  std::map<std::string, std::string> entries;  // "section.key" -> value

  // Throws ConfigError on unknown keys or malformed values.
  static ExperimentConfig from_entries(std::map<std::string, std::string> entries);
  static ExperimentConfig from_string(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  // Returns a copy with one whitelisted key replaced and the view rebuilt.
  ExperimentConfig with(const std::string& key, const std::string& value) const;
  std::string to_string() const;
};

const std::vector<std::string>& config_keys();

}  // namespace ctbridge
