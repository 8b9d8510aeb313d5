// subphase <propagate|twolevel|perturb|scan|validate> --scenario <path> --out <path>

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "subphase/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sub-geometric phase simulator and analysis toolkit"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out;
  const auto add = [&](const char* name, const char* help, bool needs_out) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--scenario", scenario, "scenario JSON file")->required();
    if (needs_out) sub->add_option("--out", out, "output CSV path")->required();
    return sub;
  };
  add("propagate", "integrate the coefficients and extract sub-phases", true);
  add("twolevel", "two-level closed-form and quadrature sub-phases", true);
  add("perturb", "first-order coefficient, exact and Markov forms", true);
  add("scan", "carrier-frequency resonance scan", true);
  add("validate", "schema and physics checks", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  subphase::cli::CommandContext ctx;
  ctx.threads = subphase::cli::threads_from_env();
  const std::string command = app.get_subcommands().front()->get_name();
  std::optional<std::filesystem::path> out_path;
  if (!out.empty()) out_path = out;
  return subphase::cli::run(command, scenario, out_path, ctx);
}
