#include <iostream>

#include <CLI11.hpp>

#include "ergo/harness.hpp"

namespace {

int cmd_run(const std::string& path) {
  const auto res = ergo::harness::run_experiment(path, std::cerr);
  if (!res.verdict.empty()) std::cout << "verdict: " << res.verdict << "\n";
  return res.exit_code;
}

int cmd_validate(const std::string& path) {
  try {
    const auto cfg = ergo::harness::load_experiment(path);
    std::cout << "ok " << ergo::harness::to_string(cfg.kind) << " " << cfg.digest << "\n";
    return 0;
  } catch (const ergo::Error& e) {
    std::cerr << "error: " << ergo::to_string(e.kind()) << ": " << e.what() << "\n";
    return ergo::harness::exit_code_for(e.kind());
  }
}

int cmd_plotdata(const std::string& path) {
  try {
    const auto res = ergo::harness::emit_plotdata(path);
    for (const auto& w : res.written) std::cout << "wrote " << w << "\n";
    if (!res.missing.empty()) {
      std::cerr << "warning: sections absent from report:";
      for (const auto& m : res.missing) std::cerr << " " << m;
      std::cerr << "\n";
    }
    return 0;
  } catch (const ergo::Error& e) {
    std::cerr << "error: " << ergo::to_string(e.kind()) << ": " << e.what() << "\n";
    return ergo::harness::exit_code_for(e.kind());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo ergodicity checks for delay equations with jumps"};
  app.require_subcommand(1);

  std::string run_path, plot_path, validate_path;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", run_path)->required()->check(CLI::ExistingFile);
  auto* plot = app.add_subcommand("plotdata", "Write plot-ready CSVs next to a report JSON");
  plot->add_option("report", plot_path)->required()->check(CLI::ExistingFile);
  auto* validate = app.add_subcommand("validate", "Check a config against the schema");
  validate->add_option("config", validate_path)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (*run) return cmd_run(run_path);
  if (*plot) return cmd_plotdata(plot_path);
  return cmd_validate(validate_path);
}
