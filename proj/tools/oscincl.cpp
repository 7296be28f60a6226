#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "oscincl/cli_io.hpp"
#include "oscincl/errors.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out = "out";
  int workers = 0;  // 0 keeps the config value
  bool verbose = false;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file (defaults apply when omitted)");
  sub->add_option("--out", f.out, "output directory")->capture_default_str();
  sub->add_option("--workers", f.workers, "concurrent restarts per level")->check(CLI::PositiveNumber);
  sub->add_flag("--verbose", f.verbose, "per-record and per-interval detail");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solution families for oscillatory elliptic inclusions"};
  app.require_subcommand(1);
  Flags flags;
  const std::pair<const char*, const char*> subs[] = {
      {"solve", "minimize one truncated energy over a ball"},
      {"cascade", "build and verify a solution family"},
      {"intervals", "list stability intervals of the effective model"},
      {"lambda-threshold", "compute the lambda thresholds of a threshold-mode case"},
      {"calculus-check", "run Lebourg checks on model gradients"},
  };
  for (const auto& [name, help] : subs) add_flags(app.add_subcommand(name, help), flags);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  const auto sub = oscincl::parse_subcommand(app.get_subcommands().front()->get_name());
  try {
    oscincl::RunConfig cfg = flags.config.empty() ? oscincl::parse_config("{}") : oscincl::load_config(flags.config);
    if (flags.workers > 0) cfg.cascade.workers = flags.workers;
    return oscincl::run_subcommand(*sub, cfg, flags.out, std::cout, flags.verbose);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return oscincl::exit_code_for(e);
  }
}
