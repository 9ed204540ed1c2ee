// Scenario files, the bundled scenario library and run output.
//
// A scenario is a JSON document (comments allowed) naming one system, its
// parameters, initial conditions, time span and integrator settings. `run`
// writes three files into <out>/<name>/:
//   <name>.csv        sampled state, 17 significant digits
//   <name>_diag.csv   energy, constraint residuals, mass and CM positions
//   <name>_meta.json  scenario hash, tool version, integrator statistics
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "rollball/ball.hpp"
#include "rollball/classic.hpp"
#include "rollball/disk.hpp"
#include "rollball/integrators.hpp"

namespace rollball {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::string_view kOutputDirEnv = "ROLLBALL_OUTPUT_DIR";

struct BallSpec {
  BallParams params;
  BallState initial;

  friend bool operator==(const BallSpec&, const BallSpec&) = default;
};

struct DiskSpec {
  DiskParams params;
  DiskState initial;
  double z0 = 0.0;  // GC position at t = a

  friend bool operator==(const DiskSpec&, const DiskSpec&) = default;
};

struct RigidBodySpec {
  Vec3 inertia{1.0, 1.0, 1.0};
  Vec3 omega;
  Quat q = Quat::identity();

  friend bool operator==(const RigidBodySpec&, const RigidBodySpec&) = default;
};

struct HeavyTopSpec {
  HeavyTopParams params;
  Vec3 omega;
  Vec3 gamma = Vec3::unit_z();

  friend bool operator==(const HeavyTopSpec&, const HeavyTopSpec&) = default;
};

struct SuslovSpec {
  SuslovParams params;
  Vec3 omega;

  friend bool operator==(const SuslovSpec&, const SuslovSpec&) = default;
};

using SystemSpec = std::variant<BallSpec, DiskSpec, RigidBodySpec, HeavyTopSpec, SuslovSpec>;

struct Scenario {
  std::string name;
  std::string description;
  SystemSpec system;
  double t0 = 0.0;
  double t1 = 20.0;
  IntegratorConfig integrator;

  /// "ball", "disk", "rigid_body", "heavy_top" or "suslov".
  std::string_view system_name() const;
  /// Throws ValidationError naming the violated invariant.
  void validate() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses and validates. Throws ParseError (with line) for malformed JSON
/// and ValidationError naming the offending field otherwise.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical JSON with every field written out; parse_scenario inverts it.
std::string dump_scenario(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

/// FNV-1a 64 over the canonical JSON without name and description, as hex.
std::string scenario_hash(const Scenario& scenario);

/// Names of the bundled scenarios, in a fixed order.
std::vector<std::string> bundled_scenario_names();
/// Throws ValidationError for an unknown name.
Scenario bundled_scenario(std::string_view name);

/// A bundled name or a path to a scenario file.
Scenario resolve_scenario(std::string_view name_or_path);

/// The scenario's ODE with projection hook and profile breakpoints. The
/// returned system refers to `scenario`, which must outlive it.
OdeSystem make_system(const Scenario& scenario);
Eigen::VectorXd initial_state(const Scenario& scenario);
Trajectory simulate(const Scenario& scenario);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

Table state_table(const Scenario& scenario, const Trajectory& trajectory);
Table diagnostics(const Scenario& scenario, const Trajectory& trajectory);

/// %.17g, comma separated, header line first.
void write_csv(const Table& table, const std::filesystem::path& path);
void write_csv(const Table& table, std::ostream& out);

struct RunRecord {
  std::string scenario_hash;
  std::string version;
  IntegrationStats stats;
  double wall_seconds = 0.0;
  std::filesystem::path csv;
  std::filesystem::path diag;
  std::filesystem::path meta;
  /// max | |q| - 1 | over samples for systems with an attitude quaternion.
  std::optional<double> max_versor_norm_error;
};

/// Output root: `out` if non-empty, else $ROLLBALL_OUTPUT_DIR, else "runs".
std::filesystem::path output_root(const std::filesystem::path& out);

RunRecord run(const Scenario& scenario, const std::filesystem::path& out_root);

/// One row per sample of a single-mass concentric disk: the variational
/// phi_ddot, the Newtonian one and their difference. Throws ValidationError
/// for scenarios outside the oracle's domain.
Table disk_oracle_table(const Scenario& scenario);

}  // namespace rollball
