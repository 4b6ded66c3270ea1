#include "zomax/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace zomax {

namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

// --- Config -------------------------------------------------------------------

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::stringstream ss(text);
  std::string line;
  std::string current;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": unterminated section header");
      }
      current = trim(line.substr(1, line.size() - 2));
      if (current.empty()) {
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": empty section name");
      }
      cfg.sections_[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    if (current.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": entry outside of any [section]");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    cfg.sections_[current][key] = value;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_string(buf.str(), path);
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

std::string Config::get(const std::string& section, const std::string& key) const {
  const auto it = sections_.find(section);
  if (it == sections_.end() || !it->second.count(key)) {
    throw ConfigError(origin_ + ": missing required key '" + key +
                      "' in section [" + section + "]");
  }
  return it->second.at(key);
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

double Config::get_double(const std::string& section,
                          const std::string& key) const {
  const std::string raw = get(section, key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' in [" + section +
                      "] is not a number: '" + raw + "'");
  }
}

double Config::get_double_or(const std::string& section, const std::string& key,
                             double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long long Config::get_int(const std::string& section,
                          const std::string& key) const {
  const std::string raw = get(section, key);
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' in [" + section +
                      "] is not an integer: '" + raw + "'");
  }
}

long long Config::get_int_or(const std::string& section, const std::string& key,
                             long long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : sections_) out.push_back(name);
  return out;
}

const std::map<std::string, std::string>& Config::section(
    const std::string& name) const {
  const auto it = sections_.find(name);
  if (it == sections_.end()) {
    throw ConfigError(origin_ + ": missing section [" + name + "]");
  }
  return it->second;
}

Config Config::with_variant_overrides(const std::string& variant_name) const {
  const std::string section_name = "variant " + variant_name;
  const auto it = sections_.find(section_name);
  if (it == sections_.end()) {
    throw ConfigError(origin_ + ": missing section [" + section_name + "]");
  }
  Config out = *this;
  for (const auto& [dotted, value] : it->second) {
    const auto dotpos = dotted.find('.');
    if (dotpos == std::string::npos) {
      throw ConfigError(origin_ + ": variant override '" + dotted +
                        "' must be of the form section.key");
    }
    out.sections_[dotted.substr(0, dotpos)][dotted.substr(dotpos + 1)] = value;
  }
  return out;
}

// --- problem / solver assembly -------------------------------------------------

MinMaxProblem build_problem(const Config& cfg) {
  const std::string kind = cfg.get("problem", "kind");
  if (kind == "toy_f1") return toy_f1();
  if (kind == "toy_f2") return toy_f2();
  if (kind == "toy_f3") {
    return toy_f3(cfg.get_double_or("problem", "probe_half_width", 10.0));
  }
  if (kind == "bilinear") return bilinear_problem();
  if (kind == "orthant_prox_mvi") return orthant_prox_mvi_problem();
  if (kind == "abs_diff") {
    return abs_diff_problem(cfg.get_double_or("problem", "sigma", 1.0)).problem;
  }
  if (kind == "rls") {
    return random_rls_problem(cfg.get_int("problem", "rows"),
                              cfg.get_int("problem", "cols"),
                              cfg.get_double("problem", "radius"),
                              static_cast<std::uint64_t>(
                                  cfg.get_int_or("problem", "data_seed", 0)));
  }
  if (kind == "rls_file") {
    const std::string path = cfg.get("problem", "path");
    if (!fs::exists(path)) {
      throw ConfigError("problem file '" + path + "' does not exist");
    }
    const auto [A, y0] = load_rls_instance(path);
    return rls_problem(A, y0, cfg.get_double("problem", "radius"));
  }
  if (kind == "poisoning") {
    return poisoning_problem(static_cast<std::uint64_t>(
                                 cfg.get_int_or("problem", "data_seed", 0)))
        .problem;
  }
  if (kind == "poisoning_file") {
    const std::string path = cfg.get("problem", "path");
    if (!fs::exists(path)) {
      throw ConfigError("problem file '" + path + "' does not exist");
    }
    return poisoning_problem_from_dataset(load_poisoning_dataset(path)).problem;
  }
  if (kind == "lane_merging") {
    LaneMergingSpec spec;
    spec.control_points =
        static_cast<int>(cfg.get_int_or("problem", "phi", spec.control_points));
    spec.dt = cfg.get_double_or("problem", "dt", spec.dt);
    spec.y_target = cfg.get_double_or("problem", "y_target", spec.y_target);
    spec.accel_min = cfg.get_double_or("problem", "accel_min", spec.accel_min);
    spec.accel_max = cfg.get_double_or("problem", "accel_max", spec.accel_max);
    spec.steer_min = cfg.get_double_or("problem", "steer_min", spec.steer_min);
    spec.steer_max = cfg.get_double_or("problem", "steer_max", spec.steer_max);
    spec.wheelbase = cfg.get_double_or("problem", "wheelbase", spec.wheelbase);
    return lane_merging_problem(spec);
  }
  throw ConfigError("unknown problem kind '" + kind + "'");
}

namespace {

MetricMatrix build_metric(const Config& cfg, Eigen::Index n, Eigen::Index m) {
  const std::string spec = cfg.get_or("oracle", "metric", "identity");
  const auto parts = split(spec, ':');
  if (parts[0] == "identity") return MetricMatrix::identity(n, m);
  if (parts[0] == "scaled") {
    if (parts.size() != 2) throw ConfigError("metric scaled:<lambda>");
    return MetricMatrix::scaled_identity(std::stod(parts[1]), n, m);
  }
  if (parts[0] == "diag_uniform") {
    if (parts.size() != 4) {
      throw ConfigError("metric diag_uniform:<lo>:<hi>:<seed>");
    }
    const double lo = std::stod(parts[1]), hi = std::stod(parts[2]);
    RngStream s = Rng(std::stoull(parts[3])).generic_stream(0x77);
    Eigen::VectorXd d1(n), d2(m);
    for (Eigen::Index i = 0; i < n; ++i) d1[i] = lo + s.next_uniform() * (hi - lo);
    for (Eigen::Index i = 0; i < m; ++i) d2[i] = lo + s.next_uniform() * (hi - lo);
    return MetricMatrix::diagonal(d1, d2);
  }
  if (parts[0] == "diag_half") {
    if (parts.size() != 4) {
      throw ConfigError("metric diag_half:<v1>:<v2>:<seed>");
    }
    const double v1 = std::stod(parts[1]), v2 = std::stod(parts[2]);
    RngStream s = Rng(std::stoull(parts[3])).generic_stream(0x78);
    const Eigen::Index d = n + m;
    std::vector<double> vals(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
      vals[static_cast<std::size_t>(i)] = (i < d / 2) ? v1 : v2;
    }
    for (Eigen::Index i = d - 1; i > 0; --i) {
      const Eigen::Index j = static_cast<Eigen::Index>(s.next_u64() % (i + 1));
      std::swap(vals[static_cast<std::size_t>(i)],
                vals[static_cast<std::size_t>(j)]);
    }
    Eigen::VectorXd d1(n), d2(m);
    for (Eigen::Index i = 0; i < n; ++i) d1[i] = vals[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < m; ++i) {
      d2[i] = vals[static_cast<std::size_t>(n + i)];
    }
    return MetricMatrix::diagonal(d1, d2);
  }
  throw ConfigError("unknown metric spec '" + spec + "'");
}

}  // namespace

SolverConfig build_solver_config(const Config& cfg,
                                 const MinMaxProblem& problem,
                                 std::uint64_t seed) {
  SolverConfig sc;
  const std::string variant = cfg.get_or("solver", "variant", "zoeg");
  if (variant == "zoeg") sc.variant = SolverVariant::ZOEG;
  else if (variant == "vr_zoeg") sc.variant = SolverVariant::VRZOEG;
  else if (variant == "modified_vr_zoeg") sc.variant = SolverVariant::ModifiedVRZOEG;
  else if (variant == "eg") sc.variant = SolverVariant::FirstOrderEG;
  else if (variant == "gda") sc.variant = SolverVariant::GDA;
  else throw ConfigError("unknown solver variant '" + variant + "'");

  sc.h1 = StepSchedule::constant(cfg.get_double("solver", "h1"));
  sc.h2 = StepSchedule::constant(
      cfg.get_double_or("solver", "h2", cfg.get_double("solver", "h1")));
  sc.iterations = cfg.get_int("solver", "iterations");
  if (sc.iterations < 0) throw ConfigError("iterations must be >= 0");
  sc.record_every = cfg.get_int_or("solver", "record_every", 1);
  if (sc.record_every < 1) throw ConfigError("record_every must be >= 1");
  sc.seed = seed;

  const std::string start_mode = cfg.get_or("solver", "start_mode", "project");
  if (start_mode == "project") sc.start_mode = SolverConfig::StartMode::Project;
  else if (start_mode == "reject") sc.start_mode = SolverConfig::StartMode::Reject;
  else throw ConfigError("start_mode must be 'project' or 'reject'");

  if (cfg.has("solver", "start")) {
    const auto cells = split(cfg.get("solver", "start"), ',');
    if (static_cast<Eigen::Index>(cells.size()) != problem.dim()) {
      throw ConfigError("start must list n+m coordinates");
    }
    Eigen::VectorXd v(problem.dim());
    for (std::size_t i = 0; i < cells.size(); ++i) v[static_cast<Eigen::Index>(i)] = std::stod(cells[i]);
    sc.start = JointPoint::from_flat(v, problem.n());
  } else {
    sc.start = JointPoint::Zero(problem.n(), problem.m());
  }

  OracleConfig oc;
  oc.metric = build_metric(cfg, problem.n(), problem.m());
  if (cfg.has("oracle", "mu_harmonic")) {
    oc.mu = MuSchedule::harmonic(cfg.get_double("oracle", "mu_harmonic"));
  } else {
    oc.mu = MuSchedule::constant(cfg.get_double_or("oracle", "mu", 1e-6));
  }
  const std::string scheme = cfg.get_or("oracle", "scheme", "forward");
  if (scheme == "forward") oc.scheme = SmoothingScheme::Forward;
  else if (scheme == "backward") oc.scheme = SmoothingScheme::Backward;
  else if (scheme == "central") oc.scheme = SmoothingScheme::Central;
  else throw ConfigError("unknown oracle scheme '" + scheme + "'");

  const std::string samples = cfg.get_or("oracle", "samples", "1");
  if (samples == "k_plus_one") {
    oc.samples_per_call = SampleSchedule::k_plus_one();
  } else {
    oc.samples_per_call = SampleSchedule::constant(std::stoll(samples));
  }

  const std::string noise = cfg.get_or("oracle", "noise", "none");
  if (noise == "none") {
    oc.noise = NoiseModel::noiseless();
  } else {
    const auto parts = split(noise, ':');
    if (parts.size() == 2 && parts[0] == "gaussian") {
      oc.noise = NoiseModel::additive_gaussian(std::stod(parts[1]));
    } else {
      throw ConfigError("noise must be 'none' or 'gaussian:<variance>'");
    }
  }

  const std::string cache = cfg.get_or("oracle", "cache_base", "auto");
  if (cache == "on") oc.cache_base_eval = true;
  else if (cache == "off") oc.cache_base_eval = false;
  else if (cache != "auto") throw ConfigError("cache_base must be auto|on|off");

  sc.oracle = std::move(oc);
  return sc;
}

std::vector<std::uint64_t> parse_seeds(const Config& cfg) {
  const auto cells = split(cfg.get_or("solver", "seeds", "0"), ',');
  std::vector<std::uint64_t> seeds;
  for (const auto& c : cells) {
    if (!c.empty()) seeds.push_back(std::stoull(c));
  }
  if (seeds.empty()) throw ConfigError("seeds list must be non-empty");
  return seeds;
}

std::string resolve_output_dir(const std::string& dir) {
  fs::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("ZOMAX_OUTPUT_ROOT")) {
      p = fs::path(root) / p;
    }
  }
  return p.string();
}

void write_trace_csv(const std::string& path, const RunTrace& trace,
                     Eigen::Index n, bool write_coords) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << "k,f_value,diag_norm,cum_evals";
  if (write_coords && !trace.records.empty()) {
    const Eigen::Index d = trace.records.front().z.dim();
    for (Eigen::Index i = 0; i < d; ++i) os << ",z_" << i;
  }
  os << "\n";
  for (const TraceRecord& rec : trace.records) {
    os << rec.k << "," << fmt_double(rec.f_value) << ","
       << fmt_double(rec.diag_norm) << "," << rec.cum_evals;
    if (write_coords) {
      const Eigen::VectorXd flat = rec.z.flat();
      for (Eigen::Index i = 0; i < flat.size(); ++i) {
        os << "," << fmt_double(flat[i]);
      }
    }
    os << "\n";
  }
  (void)n;
}

void write_histogram_csv(const std::string& path, const MviReport& report) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << "bin_left,bin_right,count\n";
  for (const auto& bin : report.histogram) {
    os << fmt_double(bin.left) << "," << fmt_double(bin.right) << ","
       << bin.count << "\n";
  }
}

namespace {

struct SummaryRow {
  std::string experiment;
  std::uint64_t seed = 0;
  double initial_objective = 0;
  double final_objective = 0;
  double final_diag_norm = 0;
  long long iterations = 0;
  long long function_evals = 0;
  double wall_time_s = 0;
};

void write_summary(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << "experiment,seed,initial_objective,final_objective,final_diag_norm,"
        "iterations,function_evals,wall_time_s\n";
  for (const auto& r : rows) {
    os << r.experiment << "," << r.seed << "," << fmt_double(r.initial_objective)
       << "," << fmt_double(r.final_objective) << ","
       << fmt_double(r.final_diag_norm) << "," << r.iterations << ","
       << r.function_evals << "," << fmt_double(r.wall_time_s) << "\n";
  }
}

void write_aggregate(const std::string& path,
                     const std::vector<SummaryRow>& rows) {
  auto mean_std = [&](auto getter) {
    double mean = 0;
    for (const auto& r : rows) mean += getter(r);
    mean /= static_cast<double>(rows.size());
    double var = 0;
    for (const auto& r : rows) {
      var += (getter(r) - mean) * (getter(r) - mean);
    }
    var = rows.size() > 1 ? var / static_cast<double>(rows.size() - 1) : 0.0;
    return std::make_pair(mean, std::sqrt(var));
  };
  const auto [f_mean, f_std] =
      mean_std([](const SummaryRow& r) { return r.final_objective; });
  const auto [d_mean, d_std] =
      mean_std([](const SummaryRow& r) { return r.final_diag_norm; });
  const auto [w_mean, w_std] =
      mean_std([](const SummaryRow& r) { return r.wall_time_s; });
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << "metric,mean,std\n";
  os << "final_objective," << fmt_double(f_mean) << "," << fmt_double(f_std)
     << "\n";
  os << "final_diag_norm," << fmt_double(d_mean) << "," << fmt_double(d_std)
     << "\n";
  os << "wall_time_s," << fmt_double(w_mean) << "," << fmt_double(w_std) << "\n";
}

double initial_objective(const MinMaxProblem& problem, const SolverConfig& sc) {
  JointPoint z0 = sc.start;
  if (!problem.set().is_unconstrained() &&
      !problem.set().contains(z0.flat(), 1e-12)) {
    z0 = project(problem.set(), z0, sc.oracle.metric);
  }
  return problem.evaluate(z0);
}

bool coords_enabled(const Config& cfg, Eigen::Index dim) {
  const std::string mode = cfg.get_or("experiment", "write_coords", "auto");
  if (mode == "always") return true;
  if (mode == "never") return false;
  if (mode == "auto") return dim <= 8;
  throw ConfigError("write_coords must be auto|always|never");
}

}  // namespace

int run_experiment(const std::string& config_path) {
  try {
    const Config cfg = Config::parse_file(config_path);
    const std::string name = cfg.get("experiment", "name");
    const MinMaxProblem problem = build_problem(cfg);
    const auto seeds = parse_seeds(cfg);
    const std::string out_dir =
        resolve_output_dir(cfg.get_or("experiment", "output_dir", "."));
    fs::create_directories(out_dir);
    const bool coords = coords_enabled(cfg, problem.dim());

    std::vector<SummaryRow> rows;
    for (const std::uint64_t seed : seeds) {
      const SolverConfig sc = build_solver_config(cfg, problem, seed);
      const RunTrace trace = run_solver(problem, sc);
      for (const auto& w : trace.warnings) {
        std::cerr << "[" << name << " seed " << seed << "] warning: " << w
                  << "\n";
      }
      if (trace.status != RunTrace::Status::Completed) {
        std::cerr << "[" << name << " seed " << seed
                  << "] run did not complete: " << trace.status_detail << "\n";
      }
      const std::string trace_path =
          (fs::path(out_dir) / (name + "_seed" + std::to_string(seed) + ".csv"))
              .string();
      write_trace_csv(trace_path, trace, problem.n(), coords);

      SummaryRow row;
      row.experiment = name;
      row.seed = seed;
      row.initial_objective = initial_objective(problem, sc);
      row.final_objective = trace.final_f;
      row.final_diag_norm =
          trace.records.empty() ? 0.0 : trace.records.back().diag_norm;
      row.iterations = trace.iterations_run;
      row.function_evals = trace.total_evals;
      row.wall_time_s = trace.wall_time_s;
      rows.push_back(row);

      if (trace.status != RunTrace::Status::Completed) {
        write_summary(
            (fs::path(out_dir) / (name + "_summary.csv")).string(), rows);
        return 1;
      }
    }
    // Merge order is by seed so reruns with reordered seed lists agree.
    std::sort(rows.begin(), rows.end(),
              [](const SummaryRow& a, const SummaryRow& b) {
                return a.seed < b.seed;
              });
    write_summary((fs::path(out_dir) / (name + "_summary.csv")).string(), rows);
    write_aggregate((fs::path(out_dir) / (name + "_aggregate.csv")).string(),
                    rows);
    return 0;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}

int compare_study(const std::string& config_path) {
  try {
    const Config base = Config::parse_file(config_path);
    const std::string name = base.get("experiment", "name");
    std::vector<std::string> variant_names;
    for (const std::string& section : base.sections()) {
      if (section.rfind("variant ", 0) == 0) {
        variant_names.push_back(section.substr(8));
      }
    }
    if (variant_names.size() < 2) {
      throw ConfigError("a compare study needs at least two [variant *] sections");
    }
    for (const std::string& vn : variant_names) {
      for (const auto& [key, _] : base.section("variant " + vn)) {
        if (key.rfind("problem.", 0) == 0) {
          throw ConfigError(
              "variants must share the problem; override '" + key +
              "' is not allowed");
        }
      }
    }

    const MinMaxProblem problem = build_problem(base);
    const auto seeds = parse_seeds(base);
    const std::string out_dir =
        resolve_output_dir(base.get_or("experiment", "output_dir", "."));
    fs::create_directories(out_dir);

    struct VariantResult {
      std::string name;
      std::vector<long long> ks;
      std::vector<double> f_mean, f_std, evals_mean;
      double final_mean = 0;
    };
    std::vector<VariantResult> results;
    std::optional<std::pair<long long, long long>> grid;  // (iterations, every)

    for (const std::string& vn : variant_names) {
      const Config cfg = base.with_variant_overrides(vn);
      const long long iters = cfg.get_int("solver", "iterations");
      const long long every = cfg.get_int_or("solver", "record_every", 1);
      if (!grid) {
        grid = {iters, every};
      } else if (grid->first != iters || grid->second != every) {
        throw ConfigError(
            "variants must share iterations and record_every so trajectories "
            "align");
      }
      std::vector<RunTrace> traces;
      for (const std::uint64_t seed : seeds) {
        const SolverConfig sc = build_solver_config(cfg, problem, seed);
        traces.push_back(run_solver(problem, sc));
      }
      VariantResult vr;
      vr.name = vn;
      const std::size_t n_rec = traces.front().records.size();
      for (const auto& t : traces) {
        if (t.records.size() != n_rec) {
          throw std::runtime_error("variant '" + vn +
                                   "' produced ragged trajectories");
        }
      }
      for (std::size_t i = 0; i < n_rec; ++i) {
        double mean = 0, evals = 0;
        for (const auto& t : traces) {
          mean += t.records[i].f_value;
          evals += static_cast<double>(t.records[i].cum_evals);
        }
        mean /= static_cast<double>(traces.size());
        evals /= static_cast<double>(traces.size());
        double var = 0;
        for (const auto& t : traces) {
          var += (t.records[i].f_value - mean) * (t.records[i].f_value - mean);
        }
        var = traces.size() > 1 ? var / static_cast<double>(traces.size() - 1)
                                : 0.0;
        vr.ks.push_back(traces.front().records[i].k);
        vr.f_mean.push_back(mean);
        vr.f_std.push_back(std::sqrt(var));
        vr.evals_mean.push_back(evals);
      }
      double fm = 0;
      for (const auto& t : traces) fm += t.final_f;
      vr.final_mean = fm / static_cast<double>(traces.size());
      results.push_back(std::move(vr));
    }

    const std::string out_path =
        (fs::path(out_dir) / (name + "_compare.csv")).string();
    std::ofstream os(out_path);
    if (!os) throw std::runtime_error("cannot open '" + out_path + "'");
    os << "k";
    for (const auto& vr : results) {
      os << "," << vr.name << "_f_mean," << vr.name << "_f_std," << vr.name
         << "_cum_evals_mean";
    }
    os << "\n";
    for (std::size_t i = 0; i < results.front().ks.size(); ++i) {
      os << results.front().ks[i];
      for (const auto& vr : results) {
        os << "," << fmt_double(vr.f_mean[i]) << "," << fmt_double(vr.f_std[i])
           << "," << fmt_double(vr.evals_mean[i]);
      }
      os << "\n";
    }
    for (const auto& vr : results) {
      std::cout << vr.name << ": mean final objective "
                << fmt_double(vr.final_mean) << "\n";
    }
    return 0;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}

int mvi_study(const std::string& config_path) {
  try {
    const Config cfg = Config::parse_file(config_path);
    const std::string name = cfg.get("experiment", "name");
    const MinMaxProblem problem = build_problem(cfg);
    const auto seeds = parse_seeds(cfg);
    const std::string out_dir =
        resolve_output_dir(cfg.get_or("experiment", "output_dir", "."));

    const long long count = cfg.get_int_or("mvi", "count", 1000);
    if (count < 1) throw ConfigError("mvi count must be >= 1");
    const double h = cfg.get_double_or("mvi", "h", 1e-9);
    const double rho = cfg.get_double_or("mvi", "rho", 0.0);
    const int bins = static_cast<int>(cfg.get_int_or("mvi", "bins", 40));

    const std::string cand_spec = cfg.get_or("mvi", "candidate", "zeros");
    JointPoint candidate;
    if (cand_spec == "zeros") {
      candidate = JointPoint::Zero(problem.n(), problem.m());
      if (!problem.set().is_unconstrained()) {
        candidate = JointPoint::from_flat(
            problem.set().project(candidate.flat()), problem.n());
      }
    } else if (cand_spec == "run") {
      const SolverConfig sc = build_solver_config(cfg, problem, seeds.front());
      const RunTrace trace = run_solver(problem, sc);
      if (trace.status != RunTrace::Status::Completed) {
        throw std::runtime_error("candidate run failed: " + trace.status_detail);
      }
      candidate = trace.final_point;
    } else if (cand_spec.rfind("file:", 0) == 0) {
      const std::string path = cand_spec.substr(5);
      std::ifstream is(path);
      if (!is) throw ConfigError("candidate file '" + path + "' is missing");
      std::string line;
      std::getline(is, line);
      const auto cells = split(line, ',');
      if (static_cast<Eigen::Index>(cells.size()) != problem.dim()) {
        throw ConfigError("candidate file must hold n+m coordinates");
      }
      Eigen::VectorXd v(problem.dim());
      for (std::size_t i = 0; i < cells.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = std::stod(cells[i]);
      }
      candidate = JointPoint::from_flat(v, problem.n());
    } else {
      throw ConfigError("mvi candidate must be zeros|run|file:<path>");
    }

    Eigen::VectorXd variances(problem.dim());
    variances.setConstant(cfg.get_double_or("mvi", "variance", 1.0));
    if (cfg.get("problem", "kind") == "lane_merging") {
      LaneMergingSpec spec;
      spec.control_points = static_cast<int>(
          cfg.get_int_or("problem", "phi", spec.control_points));
      const auto mask = lane_merging_accel_mask(spec);
      const double av = cfg.get_double_or("mvi", "accel_variance", 0.1);
      const double sv = cfg.get_double_or("mvi", "steer_variance", 0.01);
      for (Eigen::Index i = 0; i < problem.dim(); ++i) {
        variances[i] = mask[static_cast<std::size_t>(i)] ? av : sv;
      }
    }

    const MetricMatrix metric = MetricMatrix::identity(problem.n(), problem.m());
    RngStream stream = Rng(seeds.front()).generic_stream(0x3);
    const MviReport report = prox_mvi_sampler(problem, candidate, h, count,
                                              variances, rho, metric, stream,
                                              bins);

    fs::create_directories(out_dir);
    write_histogram_csv(
        (fs::path(out_dir) / (name + "_mvi_hist.csv")).string(), report);
    std::cout << "samples: " << report.samples
              << "  min: " << fmt_double(report.min_value)
              << "  violating_fraction: "
              << fmt_double(report.violating_fraction) << "\n";
    return 0;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}

}  // namespace zomax
