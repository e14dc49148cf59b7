#include "pqft/cli.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  using namespace pqft::cli;
  RunConfig cfg;
  CLI::App app{"pqft: renormalization group tools for perturbative scalar field theory"};
  app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--out", cfg.out, "Output file (default stdout); relative paths honour PQFT_OUTPUT_DIR");
  app.add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--jobs", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--h-max", cfg.hMax, "Truncation order in hbar");
  app.add_option("--g-max", cfg.gMax, "Truncation order in the coupling");
  app.add_option("--tol", cfg.tol, "Numerical tolerance");
  app.add_flag("!--no-timestamp", cfg.timestamp, "Omit the timestamp field");

  auto* beta = app.add_subcommand("beta", "Compute beta function data for a model");
  beta->add_option("model", cfg.model, "phi3_d6, phi4_d4 or phi2_d4_example")->required();

  auto* extend = app.add_subcommand("extend", "Extend (x^2 - i0)^-p across the origin");
  extend->add_option("--dim", cfg.dim, "Spacetime dimension")->required();
  extend->add_option("--sig", cfg.sig, "Number of minus signs in the metric (default d - 1)");
  extend->add_option("--power", cfg.power, "Power p")->required();
  extend->add_flag("--oracle", cfg.oracle, "Compare the Euclidean scaling anomaly numerically");

  auto* check = app.add_subcommand("check", "Run a verification suite");
  check->add_option("suite", cfg.suite, "products, flow, cocycle, hadamard or feynmanI")->required();
  check->add_option("--order", cfg.order, "Perturbative order");
  check->add_option("--dim", cfg.dim, "Spacetime dimension");
  check->add_option("--m2", cfg.m2, "Mass squared");
  check->add_option("--mu", cfg.mu, "Scale mu");
  check->add_option("--x2", cfg.x2, "Point x^2 (spacelike: negative)");

  auto* flow = app.add_subcommand("flow", "Extract the phi^2 counterterm from the cutoff flow");
  flow->add_option("--sigma", cfg.sigma, "Width of the Gaussian test function")->check(CLI::PositiveNumber);
  flow->add_option("--lambda", cfg.lambdaGrid, "Cutoff grid")->expected(2, -1);

  auto* hadamard = app.add_subcommand("hadamard", "Evaluate the Hadamard parametrix at a point");
  hadamard->add_option("--dim", cfg.dim, "Spacetime dimension")->required();
  hadamard->add_option("--m2", cfg.m2, "Mass squared");
  hadamard->add_option("--mu", cfg.mu, "Scale mu");
  hadamard->add_option("--x2", cfg.x2, "Point x^2 (spacelike: negative)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    RunResult r = dispatch(cfg);
    write_output(cfg, render(cfg, r), std::cout);
    for (auto& m : r.mismatches) std::cerr << "mismatch: " << m << "\n";
    return r.exit_code();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMismatch;
  }
}
