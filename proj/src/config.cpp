#include "ctbridge/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ctbridge/errors.hpp"

namespace ctbridge {

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "geometry.preset", "geometry.source_to_iso", "geometry.source_to_detector",
      "geometry.n_views", "geometry.angular_coverage_deg",
      "geometry.n_detector_pixels", "geometry.detector_pixel_size",
      "geometry.ray_spacing", "geometry.image_size", "geometry.image_pixel_size",
      "phantom.kind", "phantom.seed", "phantom.count", "phantom.oversample",
      "phantom.images",
      "data.incompleteness", "data.sparse_stride", "data.limited_arc_deg",
      "data.truncated_fraction", "data.truncated_pixels",
      "noise.n_air", "noise.seed",
      "preprocess.limited_angle_strength", "preprocess.limited_angle_taper_deg",
      "preprocess.truncation_margin",
      "predictor.kind", "predictor.sigma_x2", "predictor.blur_sigma",
      "predictor.table", "predictor.offset", "predictor.command",
      "sampler.schedule", "sampler.beta0", "sampler.beta1", "sampler.horizon",
      "sampler.steps", "sampler.gamma", "sampler.k_x", "sampler.kx_mode",
      "sampler.sigma_x2", "sampler.sigma_y2", "sampler.cg_iterations",
      "sampler.skip_dc_last_step", "sampler.cg_start", "sampler.seed",
      "sampler.image_scale",
      "sweep.parameter", "sweep.values",
      "output.directory", "output.threads",
  };
  return keys;
}

namespace {

using Entries = std::map<std::string, std::string>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const Entries& e) : e_(e) {}

  const std::string* find(const std::string& key) const {
    auto it = e_.find(key);
    return it == e_.end() ? nullptr : &it->second;
  }
  double real(const std::string& key, double fallback) const {
    const std::string* v = find(key);
    return v ? parse_real(key, *v) : fallback;
  }
  std::size_t count(const std::string& key, std::size_t fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    std::size_t pos = 0;
    unsigned long long r = 0;
    try {
      if (!v->empty() && (*v)[0] == '-') throw std::invalid_argument("negative");
      r = std::stoull(*v, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != v->size()) throw ConfigError(key + ": expected a nonnegative integer, got '" + *v + "'");
    return static_cast<std::size_t>(r);
  }
  bool flag(const std::string& key, bool fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(key + ": expected a boolean, got '" + *v + "'");
  }
  std::string text(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
  }

  static double parse_real(const std::string& key, const std::string& v) {
    if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    double r = 0.0;
    try {
      r = std::stod(v, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return r;
  }

 private:
  const Entries& e_;
};

void build(ExperimentConfig& c) {
  const Reader r(c.entries);
  for (const auto& [key, value] : c.entries) {
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  const std::string preset = r.text("geometry.preset", "desk");
  if (preset == "desk") c.geometry = FanBeamGeometry::desk_simulation();
  else if (preset == "simulation") c.geometry = FanBeamGeometry::simulation_scanner();
  else if (preset == "real") c.geometry = FanBeamGeometry::benchtop_scanner();
  else throw ConfigError("geometry.preset: unknown preset '" + preset + "'");
  FanBeamGeometry& g = c.geometry;
  g.source_to_iso = r.real("geometry.source_to_iso", g.source_to_iso);
  g.source_to_detector = r.real("geometry.source_to_detector", g.source_to_detector);
  g.n_views = r.count("geometry.n_views", g.n_views);
  g.angular_coverage_deg = r.real("geometry.angular_coverage_deg", g.angular_coverage_deg);
  g.n_detector_pixels = r.count("geometry.n_detector_pixels", g.n_detector_pixels);
  g.detector_pixel_size = r.real("geometry.detector_pixel_size", g.detector_pixel_size);
  const std::string spacing = r.text("geometry.ray_spacing",
      g.ray_spacing == RaySpacing::equispaced ? "equispaced" : "equiangular");
  if (spacing == "equispaced") g.ray_spacing = RaySpacing::equispaced;
  else if (spacing == "equiangular") g.ray_spacing = RaySpacing::equiangular;
  else throw ConfigError("geometry.ray_spacing: unknown value '" + spacing + "'");
  g.image_size = r.count("geometry.image_size", g.image_size);
  g.image_pixel_size = r.real("geometry.image_pixel_size", g.image_pixel_size);
  try {
    g.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }

  try {
    c.phantom.kind = phantom_kind_from_string(r.text("phantom.kind", "shepp_logan"));
    c.incompleteness = incompleteness_from_string(r.text("data.incompleteness", "sparse_view"));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  c.phantom.size = g.image_size;
  c.phantom.pixel_size = g.image_pixel_size;
  c.phantom.seed = r.count("phantom.seed", 0);
  c.phantom.count = r.count("phantom.count", c.phantom.count);
  c.phantom.oversample = r.count("phantom.oversample", c.phantom.oversample);
  c.images = r.count("phantom.images", 1);
  if (c.images == 0) throw ConfigError("phantom.images must be >= 1");

  c.extraction.sparse_stride = r.count("data.sparse_stride", c.extraction.sparse_stride);
  c.extraction.limited_arc_deg = r.real("data.limited_arc_deg", c.extraction.limited_arc_deg);
  c.extraction.truncated_fraction =
      r.real("data.truncated_fraction", c.extraction.truncated_fraction);
  if (r.find("data.truncated_pixels")) {
    c.extraction.truncated_pixels = r.count("data.truncated_pixels", 0);
  }

  c.noise.reset();
  if (r.find("noise.n_air")) {
    NoiseModel nm;
    nm.n_air = r.real("noise.n_air", 0.0);
    nm.seed = r.count("noise.seed", 0);
    if (!(nm.n_air > 0.0)) throw ConfigError("noise.n_air must be positive");
    c.noise = nm;
  }

  c.preprocess.kind = c.incompleteness;
  c.preprocess.limited_angle_strength =
      r.real("preprocess.limited_angle_strength", c.preprocess.limited_angle_strength);
  c.preprocess.limited_angle_taper_deg =
      r.real("preprocess.limited_angle_taper_deg", c.preprocess.limited_angle_taper_deg);
  if (r.find("preprocess.truncation_margin")) {
    c.preprocess.truncation_margin = r.count("preprocess.truncation_margin", 0);
  }

  const std::string pk = r.text("predictor.kind", "gaussian");
  if (pk == "gaussian") c.predictor.kind = PredictorKind::gaussian;
  else if (pk == "identity") c.predictor.kind = PredictorKind::identity;
  else if (pk == "affine") c.predictor.kind = PredictorKind::affine;
  else if (pk == "external") c.predictor.kind = PredictorKind::external;
  else throw ConfigError("predictor.kind: unknown value '" + pk + "'");
  c.predictor.sigma_x2 = r.real("predictor.sigma_x2", c.predictor.sigma_x2);
  c.predictor.blur_sigma = r.real("predictor.blur_sigma", c.predictor.blur_sigma);
  c.predictor.table = r.text("predictor.table", "");
  c.predictor.offset = r.text("predictor.offset", "");
  c.predictor.command = split(r.text("predictor.command", ""), ' ');
  if (c.predictor.kind == PredictorKind::affine && c.predictor.table.empty()) {
    throw ConfigError("predictor.table is required for the affine predictor");
  }
  for (const std::filesystem::path& f : {c.predictor.table, c.predictor.offset}) {
    if (!f.empty() && !std::filesystem::is_regular_file(f)) {
      throw ConfigError("predictor file " + f.string() + " does not exist");
    }
  }
  if (c.predictor.kind == PredictorKind::external && c.predictor.command.empty()) {
    throw ConfigError("predictor.command is required for the external predictor");
  }
  if (c.predictor.kind == PredictorKind::gaussian && !(c.predictor.sigma_x2 > 0.0)) {
    throw ConfigError("predictor.sigma_x2 must be positive");
  }

  SamplerConfig& s = c.sampler;
  const std::string sched = r.text("sampler.schedule", "i2sb");
  if (sched == "i2sb") {
    s.schedule = Schedule::i2sb(r.real("sampler.beta0", 0.1), r.real("sampler.beta1", 0.3));
  } else if (sched == "ddbm_ve") {
    s.schedule = Schedule::ddbm_ve(r.real("sampler.horizon", 2.5));
  } else {
    throw ConfigError("sampler.schedule: unknown value '" + sched + "'");
  }
  s.steps = r.count("sampler.steps", 10);
  const std::string gamma = r.text("sampler.gamma", "max");
  s.noise = gamma == "max" ? Stochasticity::eta_max()
                           : Stochasticity::from_gamma(Reader::parse_real("sampler.gamma", gamma));
  s.k_x = r.real("sampler.k_x", 0.0);
  const std::string mode = r.text("sampler.kx_mode", "constant");
  s.time_varying_kx.reset();
  if (mode == "time_varying") {
    s.time_varying_kx = TimeVaryingKx{r.real("sampler.sigma_x2", c.predictor.sigma_x2),
                                      r.real("sampler.sigma_y2", 0.0)};
  } else if (mode != "constant") {
    throw ConfigError("sampler.kx_mode: unknown value '" + mode + "'");
  }
  s.cg_iterations = r.count("sampler.cg_iterations", 20);
  s.skip_dc_last_step = r.flag("sampler.skip_dc_last_step", false);
  const std::string start = r.text("sampler.cg_start", "predicted_mean");
  if (start == "predicted_mean") s.cg_start = CgStart::predicted_mean;
  else if (start == "previous_solution") s.cg_start = CgStart::previous_solution;
  else throw ConfigError("sampler.cg_start: unknown value '" + start + "'");
  s.seed = r.count("sampler.seed", 0);
  c.image_scale = r.real("sampler.image_scale", kMuWater);
  if (!(c.image_scale > 0.0) || std::isinf(c.image_scale)) {
    throw ConfigError("sampler.image_scale must be positive and finite");
  }
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }

  c.sweep.reset();
  if (r.find("sweep.parameter")) {
    SweepSpec sw;
    sw.parameter = r.text("sweep.parameter", "");
    sw.values = split(r.text("sweep.values", ""), ',');
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), sw.parameter) == keys.end() ||
        sw.parameter.rfind("sweep.", 0) == 0 || sw.parameter.rfind("output.", 0) == 0) {
      throw ConfigError("sweep.parameter: '" + sw.parameter + "' cannot be swept");
    }
    if (sw.values.empty()) throw ConfigError("sweep.values is empty");
    c.sweep = sw;
  }
  c.output_dir = r.text("output.directory", "out");
  c.threads = r.count("output.threads", 0);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_entries(std::map<std::string, std::string> entries) {
  ExperimentConfig c;
  c.entries = std::move(entries);
  build(c);
  return c;
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Entries entries;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      if (!body.data().empty()) {
        throw ConfigError("config: key '" + section + "' outside a section");
      }
      continue;
    }
    for (const auto& [key, value] : body) {
      entries[section + "." + key] = trim(value.get_value<std::string>());
    }
  }
  return from_entries(std::move(entries));
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

ExperimentConfig ExperimentConfig::with(const std::string& key,
                                        const std::string& value) const {
  Entries e = entries;
  e[key] = value;
  return from_entries(std::move(e));
}

std::string ExperimentConfig::to_string() const {
  std::ostringstream out;
  std::string section;
  for (const auto& [key, value] : entries) {
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      out << (section.empty() ? "" : "\n") << '[' << s << "]\n";
      section = s;
    }
    out << key.substr(dot + 1) << " = " << value << '\n';
  }
  return out.str();
}

}  // namespace ctbridge
