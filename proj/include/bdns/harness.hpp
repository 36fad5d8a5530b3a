/// Initial-data presets, run configuration, stability studies and the CLI.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bdns/diagnostics.hpp"
#include "bdns/solver.hpp"
#include "json.hpp"

namespace bdns {

/// Density and velocity before momentum is formed.
struct Profile {
  ScalarField rho;
  VectorField u;
};

/// Presets: "constant", "smooth_bump", "vacuum_bump", "saint_venant_demo",
/// "random_band_limited". Parameters are read from the JSON object with
/// defaults for anything missing; see README for the keys.
Profile make_profile(const std::string& preset, const nlohmann::json& params, const PeriodicGrid& grid);
std::vector<std::string> preset_names();

State state_from_profile(const Profile& p, const PeriodicGrid& grid);

struct InitialDataSpec {
  std::string preset = "smooth_bump";
  nlohmann::json params = nlohmann::json::object();
  double sigma0 = 0.02;  ///< mollifier width of member 0
  int n_max = 4;         ///< members n = 0 .. n_max with sigma_n = sigma0 2^-n

  double sigma(int n) const;
};

/// The finiteness functionals required of each generated initial state.
struct HypothesisRow {
  double energy = 0;       ///< int rho|u|^2/2 + rho^gamma/(gamma-1)
  double bd_gradient = 0;  ///< int |grad h(rho)|^2/rho = 4 int h'^2 |grad sqrt(rho)|^2
  double moment = 0;       ///< int rho|u|^{2+delta}/2
  double l1_to_base = 0;   ///< || rho_n - rho_base ||_{L1}
};

struct GeneratedSequence {
  std::vector<State> states;
  std::vector<HypothesisRow> hypotheses;
  /// Names of functionals exceeding 10x their n = 0 value (flagged, not fatal).
  std::vector<std::string> flags;
};

/// Mollify sqrt(rho_base) and u_base with Gaussians of width sigma_n, square the
/// density back, zero momentum where rho_n < eps_vac. Throws GenerationError on
/// a non-finite hypothesis functional.
GeneratedSequence generate_sequence(const InitialDataSpec& spec, const PeriodicGrid& grid, const ViscosityLaw& law,
                                    double gamma, double delta, double eps_vac);

using DistanceMatrix = std::vector<std::vector<double>>;

struct StudyMember {
  int n = 0;
  bool completed = false;
  std::string error;
  Trajectory trajectory;
  EntropyLedger ledger;
  double vacuum = 0;        ///< max over checkpoints of || m 1_{rho < eps_vac} ||_{L1}
  double vacuum_ratio = 0;  ///< max over checkpoints of that norm over || m ||_{L1}
};

struct StabilityStudy {
  std::vector<StudyMember> members;
  std::vector<int> surviving;  ///< member indices that completed
  DistanceMatrix d_rho, d_u, d_m;
  std::vector<double> common_times;
  /// Per bound name: supremum over time, per surviving member.
  std::map<std::string, std::vector<double>> bound_suprema;
  std::vector<std::string> hypothesis_flags;
  double hypothesis_delta = 0;  ///< moment exponent used for the initial-velocity hypothesis
  bool partial = false;
  bool metric_axioms = true;
};

/// Run one solver per member (concurrently, capped by BDNS_THREADS) and
/// compare surviving trajectories on the checkpoint times of the member with
/// the fewest steps, linearly interpolating the others in time.
StabilityStudy run_study(const InitialDataSpec& spec, const SolverConfig& config);

/// Symmetry, zero diagonal and triangle inequality to an absolute tolerance.
bool metric_axioms_hold(const DistanceMatrix& d, double tol = 1e-12);

/// Linear interpolation in time between the bracketing checkpoints.
State interpolate_state(const std::vector<State>& checkpoints, double t);

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  SolverConfig solver;
  InitialDataSpec initial;
  std::optional<std::string> initial_checkpoint;
};

ViscosityLaw parse_law(const nlohmann::json& j);
nlohmann::json law_to_json(const ViscosityLaw& law);
/// Throws ArgumentError on a malformed configuration.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
/// Initial state described by the config (preset or checkpoint).
State initial_state(const RunConfig& config);

nlohmann::ordered_json to_json(const ValidationReport& report, const ViscosityLaw& law,
                               const AdmissibilityParams& params);
nlohmann::ordered_json to_json(const StabilityStudy& study, const std::vector<std::string>& ledger_paths);

/// Subcommands: validate-law, simulate, verify-identities, stability-study.
/// Returns 0 on success, 1 on a failed verdict, 2 on a usage error.
int cli_main(int argc, const char* const* argv);

}  // namespace bdns
