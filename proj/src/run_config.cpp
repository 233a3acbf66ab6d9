#include "geokrig/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "geokrig/parallel.hpp"

namespace geokrig::cli {

namespace {

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

long long to_ll(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  const long long x = to_ll(key, v);
  if (x < 0) throw ConfigError("key '" + key + "': expected a nonnegative integer");
  return static_cast<std::size_t>(x);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(sep);
    out += v[i];
  }
  return out;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct Field {
  std::string key;
  std::string description;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    const auto add = [&](const std::string& key, const std::string& desc, auto get, auto set) {
      f.push_back(Field{key, desc, get, set});
    };

    add("seed", "root seed; per-run seeds derive from it",
        [](const RunConfig& c) { return std::to_string(c.seed); },
        [](RunConfig& c, const std::string& v) { c.seed = to_u64("seed", v); });
    add("threads", "worker threads; 0 = available parallelism",
        [](const RunConfig& c) { return std::to_string(c.threads); },
        [](RunConfig& c, const std::string& v) {
          c.threads = static_cast<unsigned>(to_size("threads", v));
        });
    add("out", "output directory", [](const RunConfig& c) { return c.out; },
        [](RunConfig& c, const std::string& v) { c.out = v; });
    add("kernel", "stat-iso | stat-aniso | nsgp | insgp",
        [](const RunConfig& c) { return c.kernel; },
        [](RunConfig& c, const std::string& v) { c.kernel = v; });
    add("metric.mode", "euclidean | equirectangular",
        [](const RunConfig& c) { return c.metric_mode; },
        [](RunConfig& c, const std::string& v) { c.metric_mode = v; });

    add("matern.nu", "Matern smoothness",
        [](const RunConfig& c) { return fmt_double(c.matern_nu); },
        [](RunConfig& c, const std::string& v) { c.matern_nu = to_double("matern.nu", v); });
    add("matern.sigma_f", "signal standard deviation",
        [](const RunConfig& c) { return fmt_double(c.matern_sigma_f); },
        [](RunConfig& c, const std::string& v) {
          c.matern_sigma_f = to_double("matern.sigma_f", v);
        });
    add("matern.sigma_n", "noise standard deviation",
        [](const RunConfig& c) { return fmt_double(c.matern_sigma_n); },
        [](RunConfig& c, const std::string& v) {
          c.matern_sigma_n = to_double("matern.sigma_n", v);
        });
    add("matern.ell", "isotropic length scale (stationary kinds, initial value)",
        [](const RunConfig& c) { return fmt_double(c.matern_ell); },
        [](RunConfig& c, const std::string& v) { c.matern_ell = to_double("matern.ell", v); });
    add("matern.prefactor", "normalized | literal (2^{d/2} factor of the NS prefactor)",
        [](const RunConfig& c) { return c.matern_prefactor; },
        [](RunConfig& c, const std::string& v) { c.matern_prefactor = v; });

    add("cls.k_local", "neighbors for the local ML initialization",
        [](const RunConfig& c) { return std::to_string(c.cls_k_local); },
        [](RunConfig& c, const std::string& v) { c.cls_k_local = to_size("cls.k_local", v); });
    add("cls.latent_input", "1d | 2d latent GP inputs",
        [](const RunConfig& c) { return c.cls_latent_input; },
        [](RunConfig& c, const std::string& v) { c.cls_latent_input = v; });
    add("cls.min_eigenvalue", "lower bound on CLS eigenvalues",
        [](const RunConfig& c) { return fmt_double(c.cls_min_eigenvalue); },
        [](RunConfig& c, const std::string& v) {
          c.cls_min_eigenvalue = to_double("cls.min_eigenvalue", v);
        });
    add("cls.max_eigenvalue", "upper bound on CLS eigenvalues",
        [](const RunConfig& c) { return fmt_double(c.cls_max_eigenvalue); },
        [](RunConfig& c, const std::string& v) {
          c.cls_max_eigenvalue = to_double("cls.max_eigenvalue", v);
        });
    add("cls.scale_floor", "lower init scale bound, x median neighbor distance",
        [](const RunConfig& c) { return fmt_double(c.cls_scale_floor); },
        [](RunConfig& c, const std::string& v) {
          c.cls_scale_floor = to_double("cls.scale_floor", v);
        });
    add("cls.scale_cap", "upper init scale bound, x median neighbor distance",
        [](const RunConfig& c) { return fmt_double(c.cls_scale_cap); },
        [](RunConfig& c, const std::string& v) {
          c.cls_scale_cap = to_double("cls.scale_cap", v);
        });
    add("cls.ratio_cap", "maximum axis-eigenvalue ratio of an initialized CLS",
        [](const RunConfig& c) { return fmt_double(c.cls_ratio_cap); },
        [](RunConfig& c, const std::string& v) {
          c.cls_ratio_cap = to_double("cls.ratio_cap", v);
        });
    add("cls.latent_noise", "latent GP noise sd as a multiple of the channel sd",
        [](const RunConfig& c) { return fmt_double(c.cls_latent_noise); },
        [](RunConfig& c, const std::string& v) {
          c.cls_latent_noise = to_double("cls.latent_noise", v);
        });
    add("cls.dump", "write raw/smoothed/regional CLS CSVs",
        [](const RunConfig& c) { return c.cls_dump ? "true" : "false"; },
        [](RunConfig& c, const std::string& v) { c.cls_dump = to_bool("cls.dump", v); });

    add("intrinsic.k_neighbors", "neighborhood size K",
        [](const RunConfig& c) { return std::to_string(c.intrinsic_k_neighbors); },
        [](RunConfig& c, const std::string& v) {
          c.intrinsic_k_neighbors = to_size("intrinsic.k_neighbors", v);
        });
    add("intrinsic.deviation_threshold", "tangent-deviation filter threshold",
        [](const RunConfig& c) { return fmt_double(c.intrinsic_deviation_threshold); },
        [](RunConfig& c, const std::string& v) {
          c.intrinsic_deviation_threshold = to_double("intrinsic.deviation_threshold", v);
        });
    add("intrinsic.filter_direction", "remove_above | remove_below",
        [](const RunConfig& c) { return c.intrinsic_filter_direction; },
        [](RunConfig& c, const std::string& v) { c.intrinsic_filter_direction = v; });
    add("intrinsic.min_survivors", "minimum elements kept by the filter",
        [](const RunConfig& c) { return std::to_string(c.intrinsic_min_survivors); },
        [](RunConfig& c, const std::string& v) {
          c.intrinsic_min_survivors = to_size("intrinsic.min_survivors", v);
        });

    add("cv.enabled", "run 5-fold CV over (K, threshold) for insgp",
        [](const RunConfig& c) { return c.cv_enabled ? "true" : "false"; },
        [](RunConfig& c, const std::string& v) { c.cv_enabled = to_bool("cv.enabled", v); });
    add("cv.k_candidates", "comma-separated K values",
        [](const RunConfig& c) {
          std::vector<std::string> s;
          for (auto k : c.cv_k_candidates) s.push_back(std::to_string(k));
          return join(s, ',');
        },
        [](RunConfig& c, const std::string& v) {
          c.cv_k_candidates.clear();
          for (const auto& item : split_list(v, ',')) {
            c.cv_k_candidates.push_back(to_size("cv.k_candidates", item));
          }
        });
    add("cv.threshold_candidates", "comma-separated thresholds",
        [](const RunConfig& c) {
          std::vector<std::string> s;
          for (auto t : c.cv_threshold_candidates) s.push_back(fmt_double(t));
          return join(s, ',');
        },
        [](RunConfig& c, const std::string& v) {
          c.cv_threshold_candidates.clear();
          for (const auto& item : split_list(v, ',')) {
            c.cv_threshold_candidates.push_back(to_double("cv.threshold_candidates", item));
          }
        });
    add("cv.n_folds", "number of CV folds",
        [](const RunConfig& c) { return std::to_string(c.cv_n_folds); },
        [](RunConfig& c, const std::string& v) { c.cv_n_folds = to_size("cv.n_folds", v); });

    add("mcmc.enabled", "sample hyperparameters (false = use configured values)",
        [](const RunConfig& c) { return c.mcmc_enabled ? "true" : "false"; },
        [](RunConfig& c, const std::string& v) { c.mcmc_enabled = to_bool("mcmc.enabled", v); });
    add("mcmc.n_samples", "chain length after burn-in",
        [](const RunConfig& c) { return std::to_string(c.mcmc_n_samples); },
        [](RunConfig& c, const std::string& v) {
          c.mcmc_n_samples = to_size("mcmc.n_samples", v);
        });
    add("mcmc.n_burnin", "burn-in steps",
        [](const RunConfig& c) { return std::to_string(c.mcmc_n_burnin); },
        [](RunConfig& c, const std::string& v) {
          c.mcmc_n_burnin = to_size("mcmc.n_burnin", v);
        });
    add("mcmc.proposal_sd", "random-walk proposal sd (log space)",
        [](const RunConfig& c) { return fmt_double(c.mcmc_proposal_sd); },
        [](RunConfig& c, const std::string& v) {
          c.mcmc_proposal_sd = to_double("mcmc.proposal_sd", v);
        });
    add("mcmc.latent_every", "propose the latent block every k-th step",
        [](const RunConfig& c) { return std::to_string(c.mcmc_latent_every); },
        [](RunConfig& c, const std::string& v) {
          c.mcmc_latent_every = to_size("mcmc.latent_every", v);
        });
    add("mcmc.sample_nu", "sample the smoothness parameter",
        [](const RunConfig& c) { return c.mcmc_sample_nu ? "true" : "false"; },
        [](RunConfig& c, const std::string& v) {
          c.mcmc_sample_nu = to_bool("mcmc.sample_nu", v);
        });
    add("mcmc.dump_chain", "write the chain to a CSV",
        [](const RunConfig& c) { return c.mcmc_dump_chain ? "true" : "false"; },
        [](RunConfig& c, const std::string& v) {
          c.mcmc_dump_chain = to_bool("mcmc.dump_chain", v);
        });

    add("synthetic.kind", "smooth2d | regional",
        [](const RunConfig& c) { return c.synthetic_kind; },
        [](RunConfig& c, const std::string& v) { c.synthetic_kind = v; });
    add("synthetic.n_train", "training points",
        [](const RunConfig& c) { return std::to_string(c.synthetic_n_train); },
        [](RunConfig& c, const std::string& v) {
          c.synthetic_n_train = to_size("synthetic.n_train", v);
        });
    add("synthetic.n_test", "test points",
        [](const RunConfig& c) { return std::to_string(c.synthetic_n_test); },
        [](RunConfig& c, const std::string& v) {
          c.synthetic_n_test = to_size("synthetic.n_test", v);
        });
    add("synthetic.noise_sd", "observation noise added to training values",
        [](const RunConfig& c) { return fmt_double(c.synthetic_noise_sd); },
        [](RunConfig& c, const std::string& v) {
          c.synthetic_noise_sd = to_double("synthetic.noise_sd", v);
        });
    add("synthetic.lat_min", "patch bounds",
        [](const RunConfig& c) { return fmt_double(c.synthetic_lat_min); },
        [](RunConfig& c, const std::string& v) {
          c.synthetic_lat_min = to_double("synthetic.lat_min", v);
        });
    add("synthetic.lat_max", "patch bounds",
        [](const RunConfig& c) { return fmt_double(c.synthetic_lat_max); },
        [](RunConfig& c, const std::string& v) {
          c.synthetic_lat_max = to_double("synthetic.lat_max", v);
        });
    add("synthetic.lon_min", "patch bounds",
        [](const RunConfig& c) { return fmt_double(c.synthetic_lon_min); },
        [](RunConfig& c, const std::string& v) {
          c.synthetic_lon_min = to_double("synthetic.lon_min", v);
        });
    add("synthetic.lon_max", "patch bounds",
        [](const RunConfig& c) { return fmt_double(c.synthetic_lon_max); },
        [](RunConfig& c, const std::string& v) {
          c.synthetic_lon_max = to_double("synthetic.lon_max", v);
        });
    add("synthetic.background_length_scale", "background field length scale",
        [](const RunConfig& c) { return fmt_double(c.synthetic_background_length_scale); },
        [](RunConfig& c, const std::string& v) {
          c.synthetic_background_length_scale =
              to_double("synthetic.background_length_scale", v);
        });
    add("synthetic.background_amplitude", "background field amplitude",
        [](const RunConfig& c) { return fmt_double(c.synthetic_background_amplitude); },
        [](RunConfig& c, const std::string& v) {
          c.synthetic_background_amplitude = to_double("synthetic.background_amplitude", v);
        });
    add("synthetic.regions", "disks lat:lon:radius:length_scale:amplitude;...",
        [](const RunConfig& c) { return c.synthetic_regions; },
        [](RunConfig& c, const std::string& v) { c.synthetic_regions = v; });

    add("run.methods", "comma-separated kernels for compare",
        [](const RunConfig& c) { return join(c.run_methods, ','); },
        [](RunConfig& c, const std::string& v) { c.run_methods = split_list(v, ','); });
    add("run.n_runs", "independent comparison runs",
        [](const RunConfig& c) { return std::to_string(c.run_n_runs); },
        [](RunConfig& c, const std::string& v) { c.run_n_runs = to_size("run.n_runs", v); });
    add("run.force_equal_cls", "pin every CLS matrix to the configured one",
        [](const RunConfig& c) { return c.run_force_equal_cls ? "true" : "false"; },
        [](RunConfig& c, const std::string& v) {
          c.run_force_equal_cls = to_bool("run.force_equal_cls", v);
        });

    add("split.n_train", "training size when re-splitting io.data per run",
        [](const RunConfig& c) { return std::to_string(c.split_n_train); },
        [](RunConfig& c, const std::string& v) {
          c.split_n_train = to_size("split.n_train", v);
        });

    add("io.train", "training rates CSV", [](const RunConfig& c) { return c.io_train; },
        [](RunConfig& c, const std::string& v) { c.io_train = v; });
    add("io.test", "test locations CSV (omit for self-prediction)",
        [](const RunConfig& c) { return c.io_test; },
        [](RunConfig& c, const std::string& v) { c.io_test = v; });
    add("io.data", "full dataset CSV re-split per run by compare",
        [](const RunConfig& c) { return c.io_data; },
        [](RunConfig& c, const std::string& v) { c.io_data = v; });
    add("io.predictions", "predictions CSV for evaluate",
        [](const RunConfig& c) { return c.io_predictions; },
        [](RunConfig& c, const std::string& v) { c.io_predictions = v; });
    add("io.truth", "truth rates CSV for evaluate",
        [](const RunConfig& c) { return c.io_truth; },
        [](RunConfig& c, const std::string& v) { c.io_truth = v; });

    add("station.first_year", "station window start",
        [](const RunConfig& c) { return std::to_string(c.station_first_year); },
        [](RunConfig& c, const std::string& v) {
          c.station_first_year = static_cast<int>(to_ll("station.first_year", v));
        });
    add("station.last_year", "station window end",
        [](const RunConfig& c) { return std::to_string(c.station_last_year); },
        [](RunConfig& c, const std::string& v) {
          c.station_last_year = static_cast<int>(to_ll("station.last_year", v));
        });
    return f;
  }();
  return table;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(*this, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string RunConfig::echo() const {
  std::ostringstream os;
  for (const auto& f : fields()) os << f.key << " = " << f.get(*this) << '\n';
  return os.str();
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::apply_overrides(const std::vector<std::string>& key_value_pairs) {
  for (const auto& kv : key_value_pairs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override '" + kv + "' must have the form key=value");
    }
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
}

const std::vector<RunConfig::KeyInfo>& RunConfig::schema() {
  static const std::vector<KeyInfo> infos = [] {
    std::vector<KeyInfo> out;
    const RunConfig defaults;
    for (const auto& f : fields()) {
      out.push_back(KeyInfo{f.key, f.get(defaults), f.description});
    }
    return out;
  }();
  return infos;
}

geo::MetricMode RunConfig::mode() const {
  if (metric_mode == "euclidean") return geo::MetricMode::euclidean;
  if (metric_mode == "equirectangular") return geo::MetricMode::equirectangular;
  throw ConfigError("metric.mode must be euclidean or equirectangular");
}

kernels::MaternParams RunConfig::matern_params() const {
  kernels::MaternParams p;
  p.nu = matern_nu;
  p.sigma_f = matern_sigma_f;
  p.sigma_n = matern_sigma_n;
  p.cls = matern_ell;
  if (matern_prefactor == "normalized") {
    p.prefactor = kernels::NsPrefactor::normalized;
  } else if (matern_prefactor == "literal") {
    p.prefactor = kernels::NsPrefactor::literal;
  } else {
    throw ConfigError("matern.prefactor must be normalized or literal");
  }
  return p;
}

cls::IntrinsicConfig RunConfig::intrinsic_config() const {
  cls::IntrinsicConfig c;
  c.k_neighbors = intrinsic_k_neighbors;
  c.deviation_threshold = intrinsic_deviation_threshold;
  c.min_survivors = intrinsic_min_survivors;
  if (intrinsic_filter_direction == "remove_above") {
    c.filter_direction = cls::FilterDirection::remove_above;
  } else if (intrinsic_filter_direction == "remove_below") {
    c.filter_direction = cls::FilterDirection::remove_below;
  } else {
    throw ConfigError("intrinsic.filter_direction must be remove_above or remove_below");
  }
  return c;
}

inference::CvGrid RunConfig::cv_grid() const {
  inference::CvGrid g;
  if (!cv_enabled) return g;  // empty candidates skip CV
  g.k_candidates = cv_k_candidates;
  g.threshold_candidates = cv_threshold_candidates;
  g.n_folds = cv_n_folds;
  return g;
}

inference::McmcConfig RunConfig::mcmc_config() const {
  inference::McmcConfig m;
  m.n_samples = mcmc_n_samples;
  m.n_burnin = mcmc_n_burnin;
  m.default_proposal_sd = mcmc_proposal_sd;
  m.latent_every = mcmc_latent_every;
  return m;
}

experiments::SyntheticSpec RunConfig::synthetic_spec() const {
  experiments::SyntheticSpec s;
  if (synthetic_kind == "smooth2d") {
    s.kind = experiments::SyntheticSpec::Kind::smooth2d;
  } else if (synthetic_kind == "regional") {
    s.kind = experiments::SyntheticSpec::Kind::regional;
  } else {
    throw ConfigError("synthetic.kind must be smooth2d or regional");
  }
  s.n_train = synthetic_n_train;
  s.n_test = synthetic_n_test;
  s.noise_sd = synthetic_noise_sd;
  s.seed = seed;
  s.lat_min = synthetic_lat_min;
  s.lat_max = synthetic_lat_max;
  s.lon_min = synthetic_lon_min;
  s.lon_max = synthetic_lon_max;
  s.background_length_scale = synthetic_background_length_scale;
  s.background_amplitude = synthetic_background_amplitude;
  for (const auto& item : split_list(synthetic_regions, ';')) {
    if (trim(item).empty()) continue;
    const auto parts = split_list(item, ':');
    if (parts.size() != 5) {
      throw ConfigError("synthetic.regions entries need lat:lon:radius:length_scale:amplitude");
    }
    experiments::Region r;
    r.center = geo::Location(to_double("synthetic.regions", trim(parts[0])),
                             to_double("synthetic.regions", trim(parts[1])));
    r.radius = to_double("synthetic.regions", trim(parts[2]));
    r.length_scale = to_double("synthetic.regions", trim(parts[3]));
    r.amplitude = to_double("synthetic.regions", trim(parts[4]));
    s.region_layout.push_back(r);
  }
  return s;
}

experiments::PipelineConfig RunConfig::pipeline_config() const {
  experiments::PipelineConfig p;
  p.params = matern_params();
  p.mode = mode();
  p.k_local = cls_k_local;
  if (cls_latent_input == "1d") {
    p.latent_input = cls::LatentInput::one_d;
  } else if (cls_latent_input == "2d") {
    p.latent_input = cls::LatentInput::two_d;
  } else {
    throw ConfigError("cls.latent_input must be 1d or 2d");
  }
  p.bounds.min_eigenvalue = cls_min_eigenvalue;
  p.bounds.max_eigenvalue = cls_max_eigenvalue;
  p.init_scale_floor = cls_scale_floor;
  p.init_scale_cap = cls_scale_cap;
  p.init_ratio_cap = cls_ratio_cap;
  p.latent_noise = cls_latent_noise;
  p.icfg = intrinsic_config();
  p.cv = cv_grid();
  p.mcmc = mcmc_config();
  p.mcmc_enabled = mcmc_enabled && mcmc_n_samples > 0;
  p.sample_nu = mcmc_sample_nu;
  p.force_equal_cls = run_force_equal_cls;
  return p;
}

unsigned RunConfig::effective_threads() const {
  return threads == 0 ? default_threads() : threads;
}

void RunConfig::validate() const {
  kernels::kernel_from_name(kernel);
  mode();
  matern_params().validate();
  if (cls_k_local < 4) throw ConfigError("cls.k_local must be at least 4");
  if (!(cls_scale_floor > 0.0) || !(cls_scale_cap > cls_scale_floor)) {
    throw ConfigError("cls scale bounds must satisfy 0 < floor < cap");
  }
  if (!(cls_ratio_cap >= 1.0)) throw ConfigError("cls.ratio_cap must be >= 1");
  if (!(cls_latent_noise > 0.0)) throw ConfigError("cls.latent_noise must be positive");
  if (!(cls_min_eigenvalue > 0.0) || !(cls_max_eigenvalue > cls_min_eigenvalue)) {
    throw ConfigError("cls eigenvalue bounds must satisfy 0 < min < max");
  }
  const auto ic = intrinsic_config();
  if (ic.k_neighbors < 2) throw ConfigError("intrinsic.k_neighbors must be >= 2");
  if (!(ic.deviation_threshold > 0.0)) {
    throw ConfigError("intrinsic.deviation_threshold must be positive");
  }
  if (ic.min_survivors < 1 || ic.min_survivors > ic.k_neighbors) {
    throw ConfigError("intrinsic.min_survivors must lie in [1, k_neighbors]");
  }
  if (cv_enabled) {
    if (cv_k_candidates.empty() || cv_threshold_candidates.empty()) {
      throw ConfigError("enabled CV requires nonempty candidate lists");
    }
    if (cv_n_folds < 2) throw ConfigError("cv.n_folds must be >= 2");
    for (double t : cv_threshold_candidates) {
      if (!(t > 0.0)) throw ConfigError("cv.threshold_candidates must be positive");
    }
  }
  if (mcmc_enabled && mcmc_n_samples > 0) mcmc_config().validate();
  synthetic_spec();
  if (synthetic_n_train < 1 || synthetic_n_test < 1) {
    throw ConfigError("synthetic sizes must be >= 1");
  }
  if (synthetic_noise_sd < 0.0) throw ConfigError("synthetic.noise_sd must be nonnegative");
  if (run_methods.empty()) throw ConfigError("run.methods must be nonempty");
  for (const auto& m : run_methods) kernels::kernel_from_name(m);
  if (run_n_runs < 1) throw ConfigError("run.n_runs must be >= 1");
  if (station_first_year > station_last_year) {
    throw ConfigError("station.first_year must not exceed station.last_year");
  }
  pipeline_config();
}

}  // namespace geokrig::cli
