#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "lagrangeforge/parallel.hpp"

int main(int argc, char** argv) {
  using namespace lagrangeforge::cli;
  CLI::App app{"lagrangeforge: Lagrangians for dissipative second-order equations"};
  app.require_subcommand(1);
  CommandOptions options;
  double tol = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  const char* descriptions[][2] = {
      {"classify", "list the constructor families that apply, with residuals"},
      {"build", "construct the requested Lagrangians"},
      {"verify", "construct and check the Euler-Lagrange residual field"},
      {"integrate", "integrate the equation and monitor L, E and p"},
      {"compare", "pairwise equivalence of the Lagrangians"},
      {"demo", "run a bundled preset (or a spec file) end to end"}};
  for (const auto& [name, text] : descriptions) {
    CLI::App* sub = app.add_subcommand(name, text);
    sub->add_option("--spec", options.spec,
                    std::string(name) == "demo" ? "preset name or spec file" : "problem spec (JSON)")
        ->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--tol", tol, "verification tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "seed of the random sample points");
    sub->callback([&options, name = std::string(name)] { options.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInputError;
  }
  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--out")) options.out_dir = out;
    if (sub->count("--tol")) options.tol = tol;
    if (sub->count("--seed")) options.seed = seed;
  }
  lagrangeforge::configure_threads_from_env();
  return run_command(options);
}
