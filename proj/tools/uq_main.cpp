#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "uq/error.hpp"
#include "uq/harness.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilevel and continuous level Monte Carlo experiments"};
  app.require_subcommand(1);

  std::string config_file;
  std::string out_dir;
  bool full_scale = false;
  const char* commands[] = {"converge", "rates", "lds", "reference", "compare"};
  const char* help[] = {"single-sample convergence on uniform, adaptive and aligned meshes",
                        "rate calibration for MLMC and CLMC",
                        "pseudo vs low-discrepancy moment MSE",
                        "reference value of E[Q - Q_0]",
                        "MLMC, CLMC and QCLMC over the tolerance ladder"};
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(commands[i], help[i]);
    sub->add_option("--config", config_file, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_flag("--full-scale", full_scale, "use full-scale defaults");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto config = uq::harness::load_config(config_file, full_scale);
    const std::filesystem::path out(out_dir);
    uq::harness::Json summary;
    if (command == "converge") summary = uq::harness::cmd_converge(config, out);
    else if (command == "rates") summary = uq::harness::cmd_rates(config, out);
    else if (command == "lds") summary = uq::harness::cmd_lds(config, out);
    else if (command == "reference") summary = uq::harness::cmd_reference(config, out);
    else summary = uq::harness::cmd_compare(config, out);
    std::printf("%s\n", summary.dump(2).c_str());
    return 0;
  } catch (const uq::ConfigError& e) {
    std::fprintf(stderr, "uq %s: %s\n", command.c_str(), e.what());
    return kConfigError;
  } catch (const uq::NumericalError& e) {
    std::fprintf(stderr, "uq %s: numerical failure: %s\n", command.c_str(), e.what());
    return kNumericalError;
  } catch (const uq::DomainError& e) {
    std::fprintf(stderr, "uq %s: numerical failure: %s\n", command.c_str(), e.what());
    return kNumericalError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "uq %s: %s\n", command.c_str(), e.what());
    return 1;
  }
}
