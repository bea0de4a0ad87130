#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "pstitch/energy.hpp"
#include "pstitch/features.hpp"
#include "pstitch/line_ops.hpp"
#include "pstitch/plane.hpp"

namespace pstitch {

/// Every tunable of a run. Plane spacing, minimum leg length and extension
/// padding follow the grid size unless set explicitly.
struct RunConfig {
  double grid_size = 40.0;
  EnergyWeights weights;
  ConnectionParams connection{0.05, 20.0};
  PlanePolicy plane;
  DetectorConfig detector;
  RansacParams ransac;
  ExtensionParams extension;
  /// Lines at least this fraction of the mean detected length are global.
  double global_line_ratio = 2.0 / 3.0;
  /// Take each line's normal from its pre-warp image; false keeps the
  /// original target-frame normal.
  bool prewarp_normals = true;
  bool d_dir_raw = false;
  SolverOptions solver;
  std::uint64_t seed = 42;
};

/// Values given on the command line; unset fields fall through to the file.
struct ConfigOverrides {
  std::optional<double> grid_size;
  std::optional<double> lambda_sd, lambda_sa, lambda_l, lambda_gh, lambda_ov, lambda_nv, lambda_ll, lambda_gl;
  std::optional<double> slope_tol;
  std::optional<double> dist_tol;
  std::optional<std::uint64_t> seed;
  std::optional<bool> d_dir_raw;
};

/// Applies a JSON object mirroring RunConfig on top of cfg. Unknown keys are
/// rejected. Returns the keys of grid-derived values that were set.
struct FileSettings {
  bool plane_spacing = false;
  bool min_leg_length = false;
  bool extension_padding = false;
  bool dist_tol = false;
};
FileSettings apply_config_json(RunConfig& cfg, const std::string& text, const std::string& source);

/// Defaults, then the config file (if any), then the overrides. Throws
/// invalid-argument for out-of-range values.
RunConfig resolve_config(const std::optional<std::filesystem::path>& file, const ConfigOverrides& overrides);

void validate(const RunConfig& cfg);

/// JSON mirror of cfg, accepted back by apply_config_json.
std::string config_to_json(const RunConfig& cfg);

}  // namespace pstitch
