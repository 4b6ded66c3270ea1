#ifndef ZOMAX_HARNESS_HPP
#define ZOMAX_HARNESS_HPP

#include <map>
#include <string>
#include <vector>

#include "zomax/diagnostics.hpp"
#include "zomax/solvers.hpp"

namespace zomax {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parsed sectioned key/value configuration (grammar documented in the
// project README): '[section]' headers, 'key = value' entries, '#' comments.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text,
                             const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key,
                       double fallback) const;
  long long get_int(const std::string& section, const std::string& key) const;
  long long get_int_or(const std::string& section, const std::string& key,
                       long long fallback) const;
  std::vector<std::string> sections() const;
  const std::map<std::string, std::string>& section(
      const std::string& name) const;

  // Copy with the entries of [variant <name>] applied as dotted overrides
  // (e.g. 'oracle.scheme = central' rewrites [oracle] scheme).
  Config with_variant_overrides(const std::string& variant_name) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string origin_;
};

// Experiment assembly from a parsed config.
MinMaxProblem build_problem(const Config& cfg);
SolverConfig build_solver_config(const Config& cfg, const MinMaxProblem& problem,
                                 std::uint64_t seed);
std::vector<std::uint64_t> parse_seeds(const Config& cfg);

// Runs the configured solver once per seed; writes one trace CSV per seed
// (schema: k,f_value,diag_norm,cum_evals[,z_0..z_{d-1}]), a per-seed summary
// CSV and a mean/std aggregate CSV. Returns a process exit status.
int run_experiment(const std::string& config_path);

// Runs every [variant *] section over the shared problem and seed list and
// writes one wide CSV of per-variant objective trajectories (mean and std
// over seeds, aligned by recorded iteration, with mean cumulative
// evaluations for eval-count alignment).
int compare_study(const std::string& config_path);

// Evaluates the proximal inequality sampler around a candidate point (from
// a file, the origin, or a fresh solver run) and writes the histogram CSV
// (bin_left,bin_right,count).
int mvi_study(const std::string& config_path);

// Output directory resolution: relative directories are placed under
// $ZOMAX_OUTPUT_ROOT when that variable is set.
std::string resolve_output_dir(const std::string& dir);

void write_trace_csv(const std::string& path, const RunTrace& trace,
                     Eigen::Index n, bool write_coords);
void write_histogram_csv(const std::string& path, const MviReport& report);

}  // namespace zomax

#endif  // ZOMAX_HARNESS_HPP
