// gqfn command-line driver.
#include <CLI11.hpp>

#include "gqfn/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gqfn: Gaussian quantum feedback networks"};
  app.require_subcommand(1);

  gqfn::cli::Options opt;
  std::string path;
  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("spec", path, "network spec (JSON)")->required();
    sub->add_option("-o,--output", opt.output, "write the result here instead of stdout");
    sub->add_option("--tol", opt.tol, "validation tolerance")->capture_default_str();
    sub->add_flag("--print-order", opt.print_order, "echo the series-product order to stderr");
    return sub;
  };
  CLI::App* validate = add("validate", "check a spec and every invariant it implies");
  CLI::App* compose = add("compose", "print the composite SLH model as JSON");
  CLI::App* evolve = add("evolve", "run an evolve or steady experiment and print CSV");
  CLI::App* dpa = add("dpa-limit", "run the amplifier-limit convergence experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return gqfn::cli::kValidationFailure;
  }

  auto& out = std::cout;
  auto& err = std::cerr;
  if (*validate) return gqfn::cli::cmd_validate(path, opt, out, err);
  if (*compose) return gqfn::cli::cmd_compose(path, opt, out, err);
  if (*evolve) return gqfn::cli::cmd_evolve(path, opt, out, err);
  if (*dpa) return gqfn::cli::cmd_dpa_limit(path, opt, out, err);
  return gqfn::cli::kValidationFailure;
}
