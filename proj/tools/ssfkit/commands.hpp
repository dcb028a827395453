#pragma once

#include <CLI11.hpp>

namespace ssfcli {

void add_simulate(CLI::App& app);
void add_fit(CLI::App& app);
void add_explain(CLI::App& app);
void add_bench(CLI::App& app);
void add_summarize(CLI::App& app);
void add_config(CLI::App& app);

}  // namespace ssfcli
