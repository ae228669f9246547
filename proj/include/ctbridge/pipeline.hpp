#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ctbridge/bridge.hpp"
#include "ctbridge/config.hpp"
#include "ctbridge/image.hpp"

namespace ctbridge {

struct ImageMetrics {
  double rmse_hu = 0.0;
  double ssim = 0.0;
};

// RMSE in HU and SSIM with the reference's dynamic range.
ImageMetrics evaluate(const ImageGrid& x, const ImageGrid& ref);

struct PipelineResult {
  ImageGrid phantom;
  Sinogram full;
  Sinogram raw;           // incomplete, possibly noisy; used for consistency
  Sinogram preprocessed;  // used for FBP only
  ImageGrid fbp;
  ImageGrid pedb;
  ImageMetrics fbp_metrics;
  ImageMetrics pedb_metrics;
  SamplerReport sampler;
  double runtime_seconds = 0.0;
};

// Stages of run_pipeline, exposed for the CLI verbs.
ImageGrid stage_phantom(const ExperimentConfig& cfg);
Sinogram stage_project(const ExperimentConfig& cfg, const ImageGrid& phantom);
Sinogram stage_corrupt(const ExperimentConfig& cfg, const Sinogram& full);
Sinogram stage_preprocess(const ExperimentConfig& cfg, const Sinogram& raw);
ImageGrid stage_fbp(const ExperimentConfig& cfg, const Sinogram& preprocessed);
PredictorHandle make_predictor(const ExperimentConfig& cfg);
// Runs the sampler in units normalized by cfg.image_scale and returns the
// result in physical units.
ImageGrid stage_sample(const ExperimentConfig& cfg, const Sinogram& raw,
                       const ImageGrid& fbp, const Predictor& pred,
                       SamplerReport* report = nullptr);

// phantom -> projection -> extraction -> noise -> preprocessing -> FBP ->
// sampler -> metrics. Stage failures are rethrown with the stage name
// prefixed. With write_artifacts, images, sinograms, metrics.csv and
// timing.csv land in cfg.output_dir; artifacts written before a failure are
// kept.
PipelineResult run_pipeline(const ExperimentConfig& cfg, bool write_artifacts = true);

struct ImageReport {
  std::size_t index = 0;
  ExperimentConfig config;  // seeds offset by the image index
  ImageMetrics fbp;
  ImageMetrics pedb;
  double runtime_seconds = 0.0;
};

struct BatchReport {
  std::vector<ImageReport> images;
  ImageMetrics fbp_mean, fbp_std;    // std is the sample standard deviation
  ImageMetrics pedb_mean, pedb_std;  // (0 for a single image)
};

// cfg.images independent pipelines; image i adds i to the phantom, noise
// and sampler seeds. With one image the artifacts land in cfg.output_dir,
// otherwise in image_<i>/ below it, and metrics.csv there holds one row per
// image plus mean and std rows. Images run on up to cfg.threads threads;
// results do not depend on the thread count.
BatchReport run_batch(const ExperimentConfig& cfg, bool write_artifacts = true);
std::string batch_csv(const BatchReport& report);

struct SweepRow {
  std::string value;
  ImageMetrics fbp;   // batch means
  ImageMetrics pedb;
  std::vector<double> eta;  // per step, from t_N down to t_1
};

// One independent batch per sweep value, run concurrently like the images
// of a batch; point i writes to point_<i>/. Writes sweep.csv when
// write_artifacts.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, bool write_artifacts = true);

std::string metrics_csv(const PipelineResult& r);
std::string sweep_csv(const std::string& parameter, const std::vector<SweepRow>& rows);

}  // namespace ctbridge
