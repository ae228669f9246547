#include "ctbridge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <exception>
#include <sstream>
#include <thread>

#include "ctbridge/consistency.hpp"
#include "ctbridge/errors.hpp"
#include "ctbridge/external_predictor.hpp"
#include "ctbridge/io.hpp"
#include "ctbridge/metrics.hpp"
#include "ctbridge/projector.hpp"
#include "ctbridge/sinoproc.hpp"

namespace ctbridge {

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  const std::string prefix = std::string(name) + ": ";
  try {
    return fn();
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what(), e.step());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed on " + p.string());
}

// Runs fn(i) for i in [0, n) on up to `threads` workers (0: all cores) and
// rethrows the first failure by index once all workers have stopped.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::vector<std::exception_ptr> errors(n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string with_offset(const ExperimentConfig& cfg, const char* key, std::size_t i) {
  const auto it = cfg.entries.find(key);
  const std::uint64_t base = it == cfg.entries.end() ? 0 : std::stoull(it->second);
  return std::to_string(base + i);
}

ImageGrid scaled(const ImageGrid& x, double f) {
  ImageGrid out = x;
  for (double& v : out.values()) v *= f;
  return out;
}

}  // namespace

ImageMetrics evaluate(const ImageGrid& x, const ImageGrid& ref) {
  const auto [lo, hi] = std::minmax_element(ref.data().begin(), ref.data().end());
  const double range = *hi - *lo > 0.0 ? *hi - *lo : 1.0;
  return {rmse_hu(x, ref), ssim(x, ref, range)};
}

ImageGrid stage_phantom(const ExperimentConfig& cfg) { return make_phantom(cfg.phantom); }

Sinogram stage_project(const ExperimentConfig& cfg, const ImageGrid& phantom) {
  return forward_project(phantom, cfg.geometry, IncompletenessMask::full(cfg.geometry));
}

Sinogram stage_corrupt(const ExperimentConfig& cfg, const Sinogram& full) {
  Sinogram raw = extract_incomplete(full, cfg.geometry, cfg.incompleteness, cfg.extraction);
  if (cfg.noise) raw = add_noise(raw, *cfg.noise);
  return raw;
}

Sinogram stage_preprocess(const ExperimentConfig& cfg, const Sinogram& raw) {
  return preprocess(raw, cfg.geometry, cfg.preprocess);
}

ImageGrid stage_fbp(const ExperimentConfig& cfg, const Sinogram& preprocessed) {
  return fbp(preprocessed, cfg.geometry);
}

PredictorHandle make_predictor(const ExperimentConfig& cfg) {
  const PredictorSpec& p = cfg.predictor;
  switch (p.kind) {
    case PredictorKind::identity:
      return std::make_shared<IdentityPredictor>();
    case PredictorKind::gaussian: {
      const std::size_t n = cfg.geometry.image_size;
      return std::make_shared<GaussianPredictor>(cfg.sampler.schedule, p.sigma_x2,
                                                 blur_z_map(n, n, p.blur_sigma));
    }
    case PredictorKind::affine:
      return std::make_shared<AffinePredictor>(AffinePredictor::from_file(p.table, p.offset));
    case PredictorKind::external:
      return std::make_shared<ExternalPredictor>(p.command);
  }
  throw ConfigError("unknown predictor kind");
}

ImageGrid stage_sample(const ExperimentConfig& cfg, const Sinogram& raw,
                       const ImageGrid& fbp_image, const Predictor& pred,
                       SamplerReport* report) {
  const double s = cfg.image_scale;
  const ProjectionOperator A(cfg.geometry, raw.mask);
  std::vector<double> y = raw.values;
  for (double& v : y) v /= s;
  const ImageGrid out =
      run_sampler(y, A, scaled(fbp_image, 1.0 / s), pred, cfg.sampler, 0, {}, report);
  return scaled(out, s);
}

std::string metrics_csv(const PipelineResult& r) {
  std::ostringstream out;
  out << "method,rmse_hu,ssim\n";
  out << "fbp," << fmt(r.fbp_metrics.rmse_hu) << ',' << fmt(r.fbp_metrics.ssim) << '\n';
  out << "pedb," << fmt(r.pedb_metrics.rmse_hu) << ',' << fmt(r.pedb_metrics.ssim) << '\n';
  return out.str();
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, bool write_artifacts) {
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path dir = cfg.output_dir;
  if (write_artifacts) {
    stage("output", [&] {
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
      write_text(dir / "config.ini", cfg.to_string());
      return 0;
    });
  }
  auto keep = [&](auto&& write) {
    if (write_artifacts) stage("output", [&] { write(); return 0; });
  };

  PipelineResult r;
  r.phantom = stage("phantom", [&] { return stage_phantom(cfg); });
  keep([&] { write_image(dir / "phantom.ctbimg", r.phantom); });
  r.full = stage("project", [&] { return stage_project(cfg, r.phantom); });
  keep([&] { write_sinogram(dir / "full.ctbsin", r.full); });
  r.raw = stage("corrupt", [&] { return stage_corrupt(cfg, r.full); });
  keep([&] { write_sinogram(dir / "raw.ctbsin", r.raw); });
  r.preprocessed = stage("preprocess", [&] { return stage_preprocess(cfg, r.raw); });
  keep([&] { write_sinogram(dir / "preprocessed.ctbsin", r.preprocessed); });
  r.fbp = stage("fbp", [&] { return stage_fbp(cfg, r.preprocessed); });
  keep([&] { write_image(dir / "fbp.ctbimg", r.fbp); });
  const PredictorHandle pred = stage("predictor", [&] { return make_predictor(cfg); });
  r.pedb = stage("sample", [&] { return stage_sample(cfg, r.raw, r.fbp, *pred, &r.sampler); });
  keep([&] { write_image(dir / "pedb.ctbimg", r.pedb); });

  r.fbp_metrics = stage("evaluate", [&] { return evaluate(r.fbp, r.phantom); });
  r.pedb_metrics = stage("evaluate", [&] { return evaluate(r.pedb, r.phantom); });
  r.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  keep([&] {
    const double lo = 0.8 * kMuWater, hi = 1.2 * kMuWater;
    write_pgm(dir / "phantom.pgm", r.phantom, lo, hi);
    write_pgm(dir / "fbp.pgm", r.fbp, lo, hi);
    write_pgm(dir / "pedb.pgm", r.pedb, lo, hi);
    write_text(dir / "metrics.csv", metrics_csv(r));
    write_text(dir / "timing.csv", "runtime_seconds\n" + fmt(r.runtime_seconds) + "\n");
  });
  return r;
}

std::string sweep_csv(const std::string& parameter, const std::vector<SweepRow>& rows) {
  std::size_t steps = 0;
  for (const SweepRow& row : rows) steps = std::max(steps, row.eta.size());
  std::ostringstream out;
  out << "parameter,value,rmse_hu_fbp,ssim_fbp,rmse_hu_pedb,ssim_pedb";
  for (std::size_t i = 0; i < steps; ++i) out << ",eta_" << steps - i;
  out << '\n';
  for (const SweepRow& row : rows) {
    out << parameter << ',' << row.value << ',' << fmt(row.fbp.rmse_hu) << ','
        << fmt(row.fbp.ssim) << ',' << fmt(row.pedb.rmse_hu) << ',' << fmt(row.pedb.ssim);
    for (std::size_t i = 0; i < steps; ++i) {
      out << ',';
      if (i < row.eta.size()) out << fmt(row.eta[i]);
    }
    out << '\n';
  }
  return out.str();
}

BatchReport run_batch(const ExperimentConfig& cfg, bool write_artifacts) {
  BatchReport rep;
  rep.images.resize(cfg.images);
  for (std::size_t i = 0; i < cfg.images; ++i) {
    ExperimentConfig c = cfg;
    if (cfg.images > 1) {
      std::map<std::string, std::string> e = cfg.entries;
      e["phantom.seed"] = with_offset(cfg, "phantom.seed", i);
      e["sampler.seed"] = with_offset(cfg, "sampler.seed", i);
      if (cfg.noise) e["noise.seed"] = with_offset(cfg, "noise.seed", i);
      c = ExperimentConfig::from_entries(std::move(e));
      c.output_dir = cfg.output_dir / ("image_" + std::to_string(i));
    } else {
      c.output_dir = cfg.output_dir;
    }
    rep.images[i].index = i;
    rep.images[i].config = std::move(c);
  }
  parallel_for(cfg.images, cfg.threads, [&](std::size_t i) {
    ImageReport& im = rep.images[i];
    const PipelineResult r = run_pipeline(im.config, write_artifacts);
    im.fbp = r.fbp_metrics;
    im.pedb = r.pedb_metrics;
    im.runtime_seconds = r.runtime_seconds;
  });

  const double n = static_cast<double>(rep.images.size());
  auto mean_std = [&](auto field, ImageMetrics& mean, ImageMetrics& sd) {
    for (const ImageReport& im : rep.images) {
      mean.rmse_hu += field(im).rmse_hu / n;
      mean.ssim += field(im).ssim / n;
    }
    if (rep.images.size() < 2) return;
    for (const ImageReport& im : rep.images) {
      sd.rmse_hu += std::pow(field(im).rmse_hu - mean.rmse_hu, 2) / (n - 1.0);
      sd.ssim += std::pow(field(im).ssim - mean.ssim, 2) / (n - 1.0);
    }
    sd.rmse_hu = std::sqrt(sd.rmse_hu);
    sd.ssim = std::sqrt(sd.ssim);
  };
  mean_std([](const ImageReport& im) { return im.fbp; }, rep.fbp_mean, rep.fbp_std);
  mean_std([](const ImageReport& im) { return im.pedb; }, rep.pedb_mean, rep.pedb_std);
  if (write_artifacts && cfg.images > 1) {
    stage("output", [&] {
      write_text(cfg.output_dir / "metrics.csv", batch_csv(rep));
      return 0;
    });
  }
  return rep;
}

std::string batch_csv(const BatchReport& report) {
  std::ostringstream out;
  out << "image,phantom_seed,rmse_hu_fbp,ssim_fbp,rmse_hu_pedb,ssim_pedb,runtime_seconds\n";
  for (const ImageReport& im : report.images) {
    out << im.index << ',' << im.config.phantom.seed << ',' << fmt(im.fbp.rmse_hu) << ','
        << fmt(im.fbp.ssim) << ',' << fmt(im.pedb.rmse_hu) << ',' << fmt(im.pedb.ssim) << ','
        << fmt(im.runtime_seconds) << '\n';
  }
  auto row = [&](const char* label, const ImageMetrics& f, const ImageMetrics& p) {
    out << label << ",," << fmt(f.rmse_hu) << ',' << fmt(f.ssim) << ',' << fmt(p.rmse_hu) << ','
        << fmt(p.ssim) << ",\n";
  };
  row("mean", report.fbp_mean, report.pedb_mean);
  row("std", report.fbp_std, report.pedb_std);
  return out.str();
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, bool write_artifacts) {
  if (!cfg.sweep) throw ConfigError("run_sweep: config has no [sweep] section");
  const std::size_t n = cfg.sweep->values.size();
  std::vector<ExperimentConfig> points;
  for (std::size_t i = 0; i < n; ++i) {
    points.push_back(cfg.with(cfg.sweep->parameter, cfg.sweep->values[i]));
    points.back().output_dir = cfg.output_dir / ("point_" + std::to_string(i));
  }
  std::vector<SweepRow> rows(n);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    ExperimentConfig point = points[i];
    point.threads = 1;  // parallelism is across points
    const BatchReport b = run_batch(point, write_artifacts);
    SweepRow row{cfg.sweep->values[i], b.fbp_mean, b.pedb_mean, {}};
    const SamplerConfig& s = point.sampler;
    const TimeGrid grid = make_time_grid(s.schedule, s.steps);
    for (std::size_t k = s.steps; k >= 1; --k) {
      row.eta.push_back(step_coeffs(s.schedule, grid.time(k), grid.time(k - 1), s.noise).eta);
    }
    rows[i] = std::move(row);
  });
  if (write_artifacts) {
    std::filesystem::create_directories(cfg.output_dir);
    write_text(cfg.output_dir / "sweep.csv", sweep_csv(cfg.sweep->parameter, rows));
  }
  return rows;
}

}  // namespace ctbridge
