#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "common.hpp"
#include "ssf/error.hpp"
#include "ssf/runtime.hpp"
#include "ssf/version.hpp"

int main(int argc, char** argv) {
  ssf::configure_allocator();
  CLI::App app{"Step-selection functions with neural networks: simulate, fit, explain, bench.", "ssfkit"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(ssf::build_id()));
  app.require_subcommand(1);

  ssfcli::add_simulate(app);
  ssfcli::add_fit(app);
  ssfcli::add_explain(app);
  ssfcli::add_bench(app);
  ssfcli::add_summarize(app);
  ssfcli::add_config(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ssfcli::kOk : ssfcli::kConfig;
  } catch (const ssfcli::ExitStatus& e) {
    std::cerr << "ssfkit: " << e.what() << "\n";
    return e.code;
  } catch (const ssf::ConfigError& e) {
    std::cerr << "ssfkit: configuration error: " << e.what() << "\n";
    return ssfcli::kConfig;
  } catch (const ssf::DataError& e) {
    std::cerr << "ssfkit: data error: " << e.what() << "\n";
    return ssfcli::kValidation;
  } catch (const ssf::ConvergenceError& e) {
    std::cerr << "ssfkit: did not converge: " << e.what() << "\n";
    return ssfcli::kConvergence;
  } catch (const ssf::CapabilityError& e) {
    std::cerr << "ssfkit: not supported: " << e.what() << "\n";
    return ssfcli::kCapability;
  } catch (const std::exception& e) {
    std::cerr << "ssfkit: " << e.what() << "\n";
    return ssfcli::kFailure;
  }
  return ssfcli::kOk;
}
