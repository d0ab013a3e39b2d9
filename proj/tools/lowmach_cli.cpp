#include <iostream>

#include "CLI11.hpp"
#include "lowmach/field_io.hpp"
#include "lowmach/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Low-Mach experiment harness"};
  app.require_subcommand(1);

  std::string config, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  for (const std::string& id : lowmach::suite_ids()) {
    CLI::App* sub = app.add_subcommand(id, "run the " + id + " suite");
    sub->add_option("--config", config, "JSON config file")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out, "output directory (default: config 'out' or results/<suite>)");
    sub->add_option("--workers", workers, "parallel workers")->check(CLI::PositiveNumber);
  }
  std::string report_dir = "results";
  CLI::App* rep = app.add_subcommand("report", "collect summaries into report.md");
  rep->add_option("dir", report_dir, "results directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? lowmach::kExitPass : lowmach::kExitConfig;
  }

  if (rep->parsed()) return lowmach::emit_report(report_dir, std::cout);
  const std::string suite = app.get_subcommands().front()->get_name();
  nlohmann::json cfg;
  try {
    cfg = lowmach::load_config_file(config);
  } catch (const lowmach::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return lowmach::kExitConfig;
  } catch (const lowmach::IoError& e) {
    std::cerr << e.what() << "\n";
    return lowmach::kExitIo;
  }
  return lowmach::run_suite(cfg, suite, out, seed, workers, std::cout);
}
