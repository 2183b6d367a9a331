#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "shaperate: shape derivatives and energy release rates of minimized elliptic energies.\n"
      "Exit codes: 0 ok, 1 config, 2 mesh, 3 solver, 4 derivative-check failure.\n"
      "Environment: SHAPERATE_THREADS caps parallel refinement levels (default 1)."};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  const std::string descriptions[] = {
      "assemble and solve; writes solution.csv and solution.vtk",
      "domain shape derivative per velocity and refinement level; writes deriv.csv",
      "J-integral on circular contours; writes jint.csv",
      "energy release rate and Griffith verdict; writes grate.csv and griffith.csv",
      "domain formula against the finite-difference oracle; writes verify.csv",
      "finite-dimensional formula checks on random quadratic families; writes abstract.csv",
      "generate a mesh file; writes mesh.txt"};
  std::size_t i = 0;
  for (const auto& name : shaperate::cli::command_names()) {
    auto* sub = app.add_subcommand(name, descriptions[i++]);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (created if missing)");
  }
  app.get_subcommand("abstract")->alias("abstract-check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : shaperate::cli::kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return shaperate::cli::run_command(command, config_path, out_dir, std::cout, std::cerr);
}
