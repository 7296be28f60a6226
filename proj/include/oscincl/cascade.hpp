#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "oscincl/discretization.hpp"
#include "oscincl/energy.hpp"
#include "oscincl/function_model.hpp"
#include "oscincl/oscillation.hpp"

namespace oscincl {

/// Effective (k, A) for one theorem case.
struct EffectiveModelCase {
  std::string case_id;  // origin_p1, origin_p_gt_1, origin_p_lt_1, infinity_p1, ...
  double k = 0.0;
  double shift = 0.0;  // λ̃ (p = 1) or λ₀ / λ_∞ (other cases)
  double c_bar = 0.0;
  LimitValue l;
  FunctionModel A = zero_model();
  bool threshold_mode = false;  // origin p < 1, infinity p > 1
};

/// Builds the case from the limit estimates of F and G. `shift` nullopt means
/// auto. Throws PreconditionError naming the violated hypothesis.
EffectiveModelCase build_effective_model(const FunctionModel& F, const FunctionModel& G, double p,
                                         double lambda, Regime regime, std::optional<double> shift,
                                         const LimitEstimates& limits);
EffectiveModelCase build_effective_model(const FunctionModel& F, const FunctionModel& G, double p,
                                         double lambda, Regime regime, std::optional<double> shift = {},
                                         const GridSpec& grid = {});

struct CascadeConfig {
  FunctionModel F = builtin("F0");
  FunctionModel G = zero_model();
  double p = 1.0;
  double lambda = 0.0;
  std::optional<double> lambda_fraction;  // threshold mode: λ = fraction·λ_k
  Regime regime = Regime::Origin;
  int target_count = 4;

  int dim = 1;
  std::array<double, 2> domain_lo{0.0, 0.0};
  std::array<double, 2> domain_hi{1.0, 1.0};
  int resolution = 2048;
  std::optional<std::array<double, 2>> bump_center;  // default: domain centre
  std::optional<double> bump_radius;                 // default: 0.45 of the shortest side

  std::optional<double> shift;  // nullopt = auto
  GridSpec limit_grid;

  // Interval scan window; defaults [1e-6, 1] (origin) and [1, 1e3] (infinity).
  std::optional<double> scan_lo;
  std::optional<double> scan_hi;
  double margin_req = 1e-12;
  double rel_margin = 1e-3;
  int points_per_decade = 200000;

  std::optional<double> rho;  // amplitude search (ρδ, δ]; default 1e-3 origin, 0.5 infinity
  int amplitude_points = 400;

  MinimizeOptions minimize;  // restarts are filled in per level
  double distinct_linf_tol = 1e-8;
  double distinct_energy_tol = 1e-10;  // relative to max |T|
  int max_level_attempts = 40;
  int workers = 1;
};

/// Per-level data behind a record.
struct LevelInfo {
  StabilityInterval interval;
  double s_tilde = 0.0;
  bool s_tilde_qualified = true;  // false: fell back to a negative-energy bump below L₀s²
  double bump_energy = 0.0;
  double lambda_cap = 1.0;
};

struct RecordCheck {
  bool residual_ok = false;
  bool localization_ok = false;
  bool energy_negative = false;
};

struct VerificationReport {
  std::vector<RecordCheck> records;
  bool target_met = true;
  bool distinct = true;
  bool linf_monotone = true;
  bool h01_monotone = true;  // asserted for the origin only
  std::vector<double> common_level_energies;
  bool common_level_ordered = true;
  bool common_level_strict = true;
  bool common_level_negative = true;
  std::optional<bool> bounds_ok;         // ‖uᵢ‖ < 1/i (origin p < 1) or ‖uᵢ‖∞ > i − 1 (infinity p > 1)
  std::optional<bool> theta_window_ok;   // θᵢ < Tᵢ < θᵢ₊₁ in threshold mode
  std::vector<std::string> failures;
  bool verdict = true;
};

struct SolutionFamily {
  EffectiveModelCase model;
  double lambda = 0.0;
  double p = 1.0;
  Regime regime = Regime::Origin;
  double L0 = 0.0;
  double zeta = 0.0;
  std::vector<SolutionRecord> records;
  std::vector<LevelInfo> levels;
  std::optional<ThresholdReport> thresholds;
  bool shortfall = false;
  std::vector<std::string> flags;
  VerificationReport verification;
};

Mesh cascade_mesh(const CascadeConfig& cfg);
BumpGeometry cascade_bump(const CascadeConfig& cfg, const Mesh& mesh);

/// Checks every precondition reachable from the config before any work.
void validate_cascade_config(const CascadeConfig& cfg);

SolutionFamily run_cascade(const CascadeConfig& cfg);

/// Threshold report only (the λ = 0 pass of the threshold pipeline).
ThresholdReport compute_thresholds(const CascadeConfig& cfg);

VerificationReport verify_theorem_predictions(const SolutionFamily& family, const CascadeConfig& cfg);

}  // namespace oscincl
