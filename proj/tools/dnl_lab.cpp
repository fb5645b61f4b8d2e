// Command-line front end: validates and runs JSON experiment configurations.

#include <iostream>

#include "CLI11.hpp"
#include "dnl/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"dnl-lab: nonlinear diffusion laboratory experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  dnl::RunOptions opts;

  CLI::App* run = app.add_subcommand("run", "execute an experiment configuration");
  run->add_option("config", config_path, "JSON configuration file")->required();
  run->add_option("--out", opts.out_dir, "output directory (default: current)");
  run->add_option("--seed", opts.seed, "seed for randomized checks");
  run->add_flag("--sanity-p2", opts.sanity_p2, "allow p = 2 sanity-mode configurations");

  CLI::App* validate = app.add_subcommand("validate", "schema-check a configuration without running");
  validate->add_option("config", config_path, "JSON configuration file")->required();
  validate->add_flag("--sanity-p2", opts.sanity_p2, "allow p = 2 sanity-mode configurations");

  CLI11_PARSE(app, argc, argv);

  nlohmann::json config;
  try {
    config = dnl::load_config_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  if (validate->parsed()) {
    const dnl::ValidationReport rep = dnl::validate_config(config, opts.sanity_p2);
    if (rep.ok()) {
      std::cout << "ok: " << config_path << " is a valid "
                << config.value("kind", std::string("?")) << " configuration\n";
      return 0;
    }
    std::cerr << "config error: " << rep.errors.size() << " problem(s) in " << config_path << "\n";
    for (const auto& e : rep.errors) std::cerr << "  " << e << "\n";
    return 2;
  }

  const dnl::ExperimentResult res = dnl::run_experiment(config, opts);
  if (!res.message.empty()) (res.exit_code == 0 ? std::cout : std::cerr) << res.message << "\n";
  for (const auto& f : res.files) std::cout << "wrote " << f << "\n";
  return res.exit_code;
}
