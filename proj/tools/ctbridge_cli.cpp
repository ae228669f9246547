// Command-line front end: one verb per pipeline stage plus sweep and verify.
// Exit codes: 0 success, 1 I/O or other failure, 2 configuration error,
// 3 numeric failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "ctbridge/config.hpp"
#include "ctbridge/errors.hpp"
#include "ctbridge/io.hpp"
#include "ctbridge/pipeline.hpp"
#include "ctbridge/verify.hpp"

namespace {

using namespace ctbridge;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--config", c.config, "Experiment config file");
  cmd->add_option("--set", c.overrides, "Override a config key: section.key=value");
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
  cmd->add_option("--seed", c.seed, "Seed for this stage's random stream");
}

ExperimentConfig load(const Common& c, const std::string& seed_key) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig::from_entries({})
                                          : ExperimentConfig::load(c.config);
  std::map<std::string, std::string> entries = cfg.entries;
  for (const std::string& o : c.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + o + "'");
    entries[o.substr(0, eq)] = o.substr(eq + 1);
  }
  if (c.seed && !seed_key.empty()) entries[seed_key] = std::to_string(*c.seed);
  return ExperimentConfig::from_entries(std::move(entries));
}

void print_metrics(const char* label, const ImageMetrics& m) {
  std::printf("%s,%.17g,%.17g\n", label, m.rmse_hu, m.ssim);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projection-embedded diffusion bridge CT toolkit"};
  app.require_subcommand(1);

  Common c;
  std::string in, ref, sino, fbp_path, pgm, preprocessed;

  auto* phantom = app.add_subcommand("phantom", "Generate a phantom image");
  add_common(phantom, c, true);
  phantom->add_option("--pgm", pgm, "Also write a PGM preview");

  auto* project = app.add_subcommand("project", "Forward project an image (full scan)");
  add_common(project, c, true);
  project->add_option("--in", in, "Phantom image")->required();

  auto* corrupt = app.add_subcommand("corrupt", "Extract incomplete data and add noise");
  add_common(corrupt, c, true);
  corrupt->add_option("--in", in, "Full sinogram")->required();

  auto* fbp_cmd = app.add_subcommand("fbp", "Preprocess and reconstruct by FBP");
  add_common(fbp_cmd, c, true);
  fbp_cmd->add_option("--in", in, "Raw incomplete sinogram")->required();
  fbp_cmd->add_option("--preprocessed", preprocessed, "Also write the preprocessed sinogram");

  auto* sample = app.add_subcommand("sample", "Run the bridge sampler");
  add_common(sample, c, true);
  sample->add_option("--sino", sino, "Raw incomplete sinogram")->required();
  sample->add_option("--fbp", fbp_path, "FBP image")->required();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "RMSE (HU) and SSIM against a reference");
  evaluate_cmd->add_option("--image", in, "Image to score")->required();
  evaluate_cmd->add_option("--ref", ref, "Reference image")->required();

  auto* run = app.add_subcommand("run", "Run the full pipeline and write artifacts");
  add_common(run, c, false);

  auto* sweep = app.add_subcommand("sweep", "Run one pipeline per sweep value");
  add_common(sweep, c, false);

  auto* verify = app.add_subcommand("verify", "Run the oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*phantom) {
      const ExperimentConfig cfg = load(c, "phantom.seed");
      const ImageGrid x = stage_phantom(cfg);
      write_image(c.out, x);
      if (!pgm.empty()) write_pgm(pgm, x, 0.8 * kMuWater, 1.2 * kMuWater);
    } else if (*project) {
      const ExperimentConfig cfg = load(c, "");
      write_sinogram(c.out, stage_project(cfg, read_image(in)));
    } else if (*corrupt) {
      const ExperimentConfig cfg = load(c, "noise.seed");
      write_sinogram(c.out, stage_corrupt(cfg, read_sinogram(in)));
    } else if (*fbp_cmd) {
      const ExperimentConfig cfg = load(c, "");
      const Sinogram pre = stage_preprocess(cfg, read_sinogram(in));
      if (!preprocessed.empty()) write_sinogram(preprocessed, pre);
      write_image(c.out, stage_fbp(cfg, pre));
    } else if (*sample) {
      const ExperimentConfig cfg = load(c, "sampler.seed");
      const PredictorHandle pred = make_predictor(cfg);
      SamplerReport rep;
      write_image(c.out, stage_sample(cfg, read_sinogram(sino), read_image(fbp_path), *pred, &rep));
      if (rep.cg_breakdowns > 0) {
        std::fprintf(stderr, "warning: %zu CG breakdowns\n", rep.cg_breakdowns);
      }
    } else if (*evaluate_cmd) {
      std::printf("rmse_hu,ssim\n");
      const ImageMetrics m = evaluate(read_image(in), read_image(ref));
      std::printf("%.17g,%.17g\n", m.rmse_hu, m.ssim);
    } else if (*run) {
      ExperimentConfig cfg = load(c, "sampler.seed");
      if (!c.out.empty()) cfg.output_dir = c.out;
      if (cfg.images > 1) {
        std::cout << batch_csv(run_batch(cfg, true));
      } else {
        const PipelineResult r = run_pipeline(cfg, true);
        std::printf("method,rmse_hu,ssim\n");
        print_metrics("fbp", r.fbp_metrics);
        print_metrics("pedb", r.pedb_metrics);
      }
    } else if (*sweep) {
      ExperimentConfig cfg = load(c, "sampler.seed");
      if (!c.out.empty()) cfg.output_dir = c.out;
      const auto rows = run_sweep(cfg, true);
      std::cout << sweep_csv(cfg.sweep->parameter, rows);
    } else if (*verify) {
      bool ok = true;
      for (const CheckResult& r : run_oracle_suite()) {
        std::printf("%s  %-52s %.3e (tol %.1e)\n", r.passed ? "PASS" : "FAIL",
                    r.name.c_str(), r.value, r.tolerance);
        ok = ok && r.passed;
      }
      return ok ? 0 : 3;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
