#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oscincl/cascade.hpp"
#include "oscincl/function_model.hpp"

namespace oscincl {

enum class Subcommand { Solve, Cascade, Intervals, LambdaThreshold, CalculusCheck };

const char* subcommand_name(Subcommand s);
std::optional<Subcommand> parse_subcommand(std::string_view name);

/// Single localized minimization. Without `A` and `k` the effective model is
/// built from the model section.
struct SolveConfig {
  std::optional<FunctionModel> A;
  std::optional<double> k;
  double eta = 0.0;
  std::optional<double> delta;    // γ level; defaults to η
  std::vector<double> amplitudes;  // bump restarts; default {δ}
  bool zero_start = true;
};

struct NamedModel {
  std::string name;
  FunctionModel model;
};

struct CalculusConfig {
  std::vector<NamedModel> models;  // default: the four built-ins
  int checks = 1000;
  int samples = 64;
  std::uint64_t seed = 1;
  double window_lo = 1e-3;
  double window_hi = 10.0;
};

struct RunConfig {
  std::optional<Subcommand> subcommand;
  CascadeConfig cascade;
  SolveConfig solve;
  bool has_solve = false;
  CalculusConfig calculus;
  bool nodal_dumps = false;
  std::string canonical;  // normalized JSON of the input, hashed into manifests
};

/// Parses the JSON config. Unknown keys and type mismatches throw ConfigError
/// with the key path; bad values throw PreconditionError.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Model spec as JSON text: "F0", "G0(2)", {"sum": [...]}, {"scale": {...}}, ...
/// Bare "G0"/"Ginf" take `default_p`.
FunctionModel parse_model_spec(std::string_view json_text, double default_p = 1.0);

/// Pre-execution checks for one subcommand, including the theorem hypotheses
/// of the effective model.
void validate_run_config(const RunConfig& cfg, Subcommand sub);

std::string sha256_hex(std::string_view data);

std::string family_csv(const SolutionFamily& family);
std::string intervals_csv(const std::vector<StabilityInterval>& intervals);
std::string thresholds_csv(const ThresholdReport& report);

/// Writes family.csv, manifest.json and, when enabled, record_<i>.csv.
void emit_family(const SolutionFamily& family, const RunConfig& cfg, const std::filesystem::path& dir);

/// Writes `content` to `path`, creating parent directories. Throws Error with
/// the system message on failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Runs one subcommand and writes its outputs under `out_dir`. Returns the
/// exit code for a completed run: 0 pass, 2 verification failure. Errors
/// propagate as exceptions; see exit_code_for.
int run_subcommand(Subcommand sub, const RunConfig& cfg, const std::filesystem::path& out_dir,
                   std::ostream& log, bool verbose);

/// 3 for PreconditionError (config errors included), 4 for NumericalError, 1 otherwise.
int exit_code_for(const std::exception& e);

}  // namespace oscincl
