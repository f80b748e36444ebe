// Command-line front end. Each subcommand maps onto one library entry point.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cfmimo/experiment.hpp"
#include "cfmimo/validation.hpp"

namespace {

// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> realizations;
  std::string out;
  unsigned threads = 0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--seed", seed, "Override the scenario seed");
    cmd.add_option("--realizations", realizations, "Override the number of realizations")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--threads", threads, "Worker threads (0: hardware concurrency)");
  }

  void apply(cfmimo::SystemConfig& cfg) const {
    if (seed) cfg.seed = *seed;
    if (realizations) cfg.realizations = *realizations;
    cfg.validate();
  }
};

void emit_json(const cfmimo::Json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw cfmimo::ConfigError("--out", "cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell-free massive MIMO downlink simulator and analytic SINR engine"};
  app.require_subcommand(1);

  Overrides sim_opt, rep_opt, val_opt;
  std::string sim_scenario, val_scenario, rep_scenario, figure, out_dir;
  std::string criteria;

  auto* simulate = app.add_subcommand("simulate", "Run one scenario and print its JSON report");
  simulate->add_option("scenario", sim_scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  sim_opt.add_to(*simulate);
  simulate->add_option("--out", sim_opt.out, "Write the report here instead of stdout");

  auto* reproduce = app.add_subcommand("reproduce", "Write the CSV data of one figure");
  reproduce->add_option("figure", figure, "Figure id, fig1 .. fig11")->required();
  reproduce->add_option("out_dir", out_dir, "Output directory");
  reproduce->add_option("--scenario", rep_scenario, "Base scenario (defaults: reference MRT setup)")
      ->check(CLI::ExistingFile);
  rep_opt.add_to(*reproduce);
  reproduce->add_option("--out", rep_opt.out, "Output directory (alternative to out_dir)");

  auto* validate = app.add_subcommand("validate", "Run the acceptance checks on a scenario");
  validate->add_option("scenario", val_scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  val_opt.add_to(*validate);
  validate->add_option("--out", val_opt.out, "Write the summary here instead of stdout");
  validate->add_option("--criteria", criteria, "Subset to run, e.g. 1,3,9");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      cfmimo::SystemConfig cfg = cfmimo::load_scenario(sim_scenario);
      sim_opt.apply(cfg);
      emit_json(cfmimo::run_scenario(cfg, sim_opt.threads).to_json(), sim_opt.out);
    } else if (*reproduce) {
      const std::string dir = !rep_opt.out.empty() ? rep_opt.out : out_dir;
      if (dir.empty()) throw cfmimo::ConfigError("out_dir", "an output directory is required");
      cfmimo::ReproduceOptions opt;
      if (!rep_scenario.empty()) opt.base = cfmimo::load_scenario(rep_scenario);
      rep_opt.apply(opt.base);
      opt.threads = rep_opt.threads;
      const auto id = cfmimo::parse_figure_id(figure);
      std::cerr << cfmimo::figure_description(id) << '\n';
      for (const auto& path : cfmimo::reproduce(id, dir, opt)) std::cout << path.string() << '\n';
    } else if (*validate) {
      cfmimo::SystemConfig cfg = cfmimo::load_scenario(val_scenario);
      val_opt.apply(cfg);
      std::vector<int> ids;
      for (char ch : criteria) {
        if (ch >= '1' && ch <= '9') ids.push_back(ch - '0');
        else if (ch != ',' && ch != ' ') throw cfmimo::ConfigError("--criteria", "expected digits 1-9");
      }
      const auto opt = cfmimo::ValidationOptions::for_scenario(cfg, val_opt.threads);
      emit_json(cfmimo::validate(opt, ids).to_json(), val_opt.out);
    }
  } catch (const cfmimo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const cfmimo::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const cfmimo::ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const cfmimo::ToleranceError& e) {
    std::cerr << "quadrature error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
