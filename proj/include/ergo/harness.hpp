#pragma once

// Experiment configuration, execution and result files.
//
// Config grammar (one item per line):
//   [section]        starts a section
//   key = value      assigns within the current section
//   # ... or ; ...   comment; blank lines are ignored
// Lists are comma separated. Unknown sections and keys are schema errors.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ergo/ergodicity.hpp"
#include "ergo/error.hpp"
#include "ergo/model.hpp"
#include "ergo/simulate.hpp"
#include "ergo/transport.hpp"

namespace ergo::harness {

/// Raw sections as written, before schema checks.
struct ConfigFile {
  std::map<std::string, std::map<std::string, std::string>> sections;
  /// Line of each "section.key", for diagnostics.
  std::map<std::string, std::size_t> lines;
};

ConfigFile parse_config(std::istream& in);
ConfigFile load_config(const std::filesystem::path& path);

enum class ExperimentKind { simulate, decay, c1, c2, support, wasserstein, report };

const char* to_string(ExperimentKind k) noexcept;

struct ExperimentConfig {
  BuiltinKind model_kind = BuiltinKind::ou_jump;
  BuiltinParams model;
  SimConfig sim;
  std::size_t n_paths = 1;

  double alpha = 0.5;
  std::optional<double> lambda;  // nullopt: adaptive
  double lambda_max = 1024.0;

  ExperimentKind kind = ExperimentKind::simulate;
  std::vector<double> times;
  std::vector<double> probes;
  Segment xi = Segment::constant(1.0, 1.0);
  Segment eta = Segment::constant(1.0, 0.0);
  bool track_kl = false;
  std::size_t sampled_pairs = 0;
  std::size_t reweight_paths = 0;

  double support_R = 2.0;
  double support_delta = 0.5;
  double support_t = 2.0;

  double c2_M = 1.0;
  double c2_epsilon = 2.0;
  double c2_t0 = 2.0;
  C2Options c2;

  std::string policy_f = "linear";
  LyapunovV policy_V = LyapunovV::current_sq;
  double policy_delta = 0.5;
  std::optional<double> policy_K;
  std::vector<double> drift_times;
  std::size_t drift_outer = 20;
  std::size_t drift_inner = 100;

  std::size_t w_samples = 128;
  MarginalOptions w;

  std::filesystem::path output_dir;
  bool write_csv = true;
  bool write_json = true;

  /// SHA-256 over the canonical effective configuration.
  std::string digest;
  std::string canonical;
};

/// Applies the schema and defaults. Relative paths resolve against base_dir.
ExperimentConfig validate_config(const ConfigFile& file, const std::filesystem::path& base_dir);

ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Settings of the full report; `times` serve both the decay and the
/// Wasserstein grids.
ReportConfig report_config(const ExperimentConfig& cfg);

std::string sha256_hex(const std::string& data);

int exit_code_for(ErrorKind kind) noexcept;

struct RunResult {
  int exit_code = 0;
  std::string status;   // ok, schema_error, divergence, error
  std::string verdict;  // empty for kinds without one
  std::vector<std::string> outputs;
  std::string message;
};

/// Dispatches on experiment.kind and writes the artifacts plus
/// manifest.json; the manifest is written on every exit path that knows
/// an output directory.
RunResult run_experiment(const std::filesystem::path& config_path, std::ostream& log);

struct PlotResult {
  std::vector<std::string> written;
  std::vector<std::string> missing;
};

/// Flat CSVs next to the report: plot_decay.csv, plot_wasserstein.csv and
/// plot_support.csv, for the sections present.
PlotResult emit_plotdata(const std::filesystem::path& report_path);

}  // namespace ergo::harness
