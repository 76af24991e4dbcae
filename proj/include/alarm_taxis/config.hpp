#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "alarm_taxis/grid.hpp"
#include "alarm_taxis/model.hpp"
#include "alarm_taxis/solver.hpp"

namespace alarm_taxis {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Initial profile of one species.
struct InitSpec {
  enum class Kind { constant, cosine, bump, file };
  Kind kind = Kind::constant;
  /// constant: {c}; cosine: {base, amp, kx, ky}; bump: {base, amp, cx, cy, r}.
  std::vector<double> args{0.0};
  std::filesystem::path file;
  /// Original text, kept for serialisation.
  std::string text = "const:0";
};

enum class StudyType { single, eps_ladder, grid_ladder, mms, ode_compare };
std::string to_string(StudyType s);

struct AuditToggles {
  bool l1 = true;
  bool sup = true;
  bool mass = true;
  bool eps_uniformity = true;
  bool residuals = false;
};

struct RunConfig {
  GridSpec grid;
  Params params;
  SolverConfig solver;
  std::size_t presmooth_steps = 0;
  std::array<InitSpec, 3> init;
  StudyType study = StudyType::single;
  std::vector<double> eps_ladder{0.2, 0.1, 0.05};
  std::vector<std::size_t> grid_ladder{16, 32, 64};
  /// "diffusion" or "full".
  std::string mms_kind = "full";
  std::size_t test_family_size = 27;
  std::filesystem::path output_dir = "alarm_taxis_out";
  AuditToggles audits;
};

/// Strict key = value parser; `source` names the input in messages, `base_dir` resolves file: paths.
RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>",
                            const std::filesystem::path& base_dir = ".");
RunConfig parse_config(const std::filesystem::path& path);

/// Canonical key = value form; parse_config_text(serialize_config(c)) reproduces c.
std::string serialize_config(const RunConfig& cfg);

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
std::string preset_text(const std::string& name);

/// Evaluates the init specs on `grid` (cfg.grid by default), then applies pre-smoothing.
StateTriple build_initial_state(const RunConfig& cfg, std::optional<GridSpec> grid = std::nullopt);

}  // namespace alarm_taxis
