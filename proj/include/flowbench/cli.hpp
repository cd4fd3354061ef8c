#pragma once

#include <json.hpp>

#include <string>

#include "flowbench/dataio.hpp"

namespace flowbench {

// Command implementations behind the `flowbench` binary. Each takes a fully
// explicit JSON parameter set (presets already expanded, flag overrides
// applied); the set is echoed verbatim into output provenance so every run is
// reproducible from its artifacts alone.

// Known preset names and their parameter expansions:
//   cavity-70-30    dmd,   70 input snapshots, 30-step horizon, rank 25
//   airfoil-70-130  dmdc,  70 input snapshots, 130-step horizon, POD rank 20
//   jet-sensing-200 causal Wiener, history 200, Welch 400 / 0.9 overlap /
//                   sine-6 window, noise level 0.001
nlohmann::json expand_preset(const std::string& name);

// Overlays `overrides` onto `base` (top-level keys; overrides win).
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overrides);

// generate: writes a synthetic dataset container to config["out"].
void cmd_generate(const nlohmann::json& config);

// fit-apply: trains/applies the method in config["method"] and writes a
// results file to config["out"]. Returns the results for in-process use.
ResultsFile cmd_fit_apply(const nlohmann::json& config);

// evaluate: reads results + truth, writes a metrics container to
// config["out"] and a plot-ready CSV to config["csv"] (when given).
MetricsFile cmd_evaluate(const nlohmann::json& config);

// inspect: renders a container's header (arrays + meta) as text.
std::string cmd_inspect(const std::string& path);

}  // namespace flowbench
