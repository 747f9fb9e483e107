#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfg/ergodic_mfg.hpp"
#include "mfg/finite_mfg.hpp"

namespace mfg {

/// Tolerances and iteration caps shared by the pipelines. Nonpositive time
/// steps select the defaults: the grid spacing for the evolution solves and
/// 2 sqrt(spacing) for the stationary value solve inside the equilibrium
/// iteration.
struct SolverConfig {
  double dt = -1;
  double speed_cap = 5.0;
  double ergodic_tol = 1e-8;
  int ergodic_max_iter = 200000;
  double damping = 0.5;
  double mfg_tol = 1e-3;
  int mfg_max_iter = 200;
  int tail_window = 32;
  double support_cut = 1e-4;
  double mfg_value_dt = -1;
  double exploitability_tol = 1e-3;
  int fp_max_outer = 2000;
};

struct MeasureSpec {
  enum class Kind { dirac, uniform, stationary };
  Kind kind = Kind::dirac;
  Vec2 at{0, 0};
};

struct TerminalSpec {
  enum class Kind { zero, stationary_value };
  Kind kind = Kind::zero;
};

/// One experiment, as described by a single JSON document. Unknown fields
/// anywhere in the document are rejected at parse time with the offending
/// field path, as are out-of-range tolerances and unsorted horizon lists.
struct ExperimentConfig {
  Domain domain = Domain::interval(-1, 1);
  int nodes_per_axis = 161;
  PotentialSpec potential;
  double quartic = 0;
  Coupling coupling = Coupling::none();
  SolverConfig solver;
  std::vector<double> horizons;
  MeasureSpec initial_measure;
  TerminalSpec terminal;
  bool write_paths = false;
  std::string output_dir = ".";
  std::uint64_t seed = 0;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

Grid build_grid(const ExperimentConfig& config);
TonelliModel build_model(const ExperimentConfig& config);

/// Initial measure for the evolution runs. `stationary` resolves the
/// stationary kind and may be null when the config does not use it.
GridMeasure build_initial_measure(const ExperimentConfig& config,
                                  const Grid& grid,
                                  const GridMeasure* stationary);

/// One line of the convergence table. value_error is the sup over time
/// slices of |u(t, .)/T + lambda (1 - t/T)| over nodes; coupling_error is
/// the time average of the sup gap between the running coupling field and
/// the stationary one.
struct HorizonRow {
  double T = 0;
  double value_error = 0;
  double coupling_error = 0;
  double lambda_bar = 0;
  double exploitability = 0;
  double energy_integral = 0;
  bool solved = false;     // a path was produced
  bool converged = false;  // fictitious play met its tolerance
  std::string error;
};

struct ConvergenceReport {
  std::vector<HorizonRow> rows;
  double slope_value = 0;     // least-squares slope of log value_error vs log T
  double slope_coupling = 0;  // same for coupling_error
  double theoretical_exponent = 0;  // -1/(d+2)
  double lambda_bar = 0;
  std::optional<ErgodicMfgSolution> stationary;
  bool all_ok = false;
};

/// Solves the stationary equilibrium once, then one finite-horizon
/// equilibrium per configured horizon, and writes convergence.csv plus
/// report.json (and per-horizon path tables when enabled) into the output
/// directory. Per-horizon failures are recorded in their row and do not
/// abort the sweep.
ConvergenceReport run_longtime_experiment(const ExperimentConfig& config,
                                          int threads = 1);

/// Exact byte contract of convergence.csv: fixed header, one row per
/// horizon, 12 significant digits, LF line endings.
std::string convergence_csv(const ConvergenceReport& report);

std::string report_json(const ConvergenceReport& report,
                        const ExperimentConfig& config);

/// Sup-versus-L2 comparison for a family of uniformly bounded Lipschitz
/// fields. Each ratio |f|_inf / max(|f|_2, |f|_2^{2/(2+d)}) is checked
/// against a constant computed once from the dimension, the Lipschitz
/// bound and the domain through its inner cone property. Samples that
/// break the stated sup or Lipschitz bound raise RegimeViolation.
struct InterpolationCheckResult {
  double worst_ratio = 0;
  double constant = 0;
  std::vector<double> ratios;
};

InterpolationCheckResult interpolation_inequality_check(
    const std::vector<ValueField>& samples, double sup_bound,
    double lipschitz_bound);

/// Writes stem.bin (node marginals, time-major, little-endian 64-bit reals)
/// and stem.json (horizon, step, grid shape, exploitability trace).
void write_path_table(const std::string& stem, const MildSolutionPath& path,
                      const Grid& grid);

/// Entry point behind the mfglab binary, exposed so the command paths are
/// testable in-process. Returns the process exit code: 0 on success, 1 on
/// configuration errors, 2 when a solver failed to converge (partial
/// results are still written).
int cli_main(int argc, const char* const* argv);

}  // namespace mfg
