// Command-line harness: generate synthetic datasets, fit and apply the
// baseline methods, evaluate results against withheld truth, and inspect
// container files. See README.md for the file formats and presets.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "flowbench/cli.hpp"
#include "flowbench/errors.hpp"
#include "flowbench/threading.hpp"

namespace {

using nlohmann::json;

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) flowbench::fail(flowbench::errk::io, "cannot open config file '" + path + "'");
  try {
    json parsed;
    in >> parsed;
    if (!parsed.is_object())
      flowbench::fail(flowbench::errk::config, "config file must hold a JSON object");
    return parsed;
  } catch (const json::parse_error& e) {
    flowbench::fail(flowbench::errk::config,
                    std::string("config file is not valid JSON: ") + e.what());
  }
}

// --set key=value overrides; the value is parsed as JSON when possible so
// numbers, booleans, and arrays work, otherwise it is taken as a string.
json overrides_from_sets(const std::vector<std::string>& sets) {
  json out = json::object();
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      flowbench::fail(flowbench::errk::config, "--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;
    }
    out[key] = value;
  }
  return out;
}

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::vector<std::string> sets;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON parameter file");
  cmd->add_option("--set", args.sets, "override parameter, key=value (repeatable)");
  cmd->add_option("--threads", args.threads, "worker thread count");
}

// preset < config file < --set/flag overrides; the merged set is what runs.
json finalize(const CommonArgs& args, const json& flag_values) {
  json config = json::object();
  json file_config = load_config_file(args.config_path);
  std::string preset = args.preset;
  if (preset.empty() && file_config.contains("preset"))
    preset = file_config.at("preset").get<std::string>();
  if (!preset.empty()) {
    config = flowbench::expand_preset(preset);
    config["preset"] = preset;
  }
  config = flowbench::merge_config(config, file_config);
  config = flowbench::merge_config(config, flag_values);
  config = flowbench::merge_config(config, overrides_from_sets(args.sets));
  const int threads =
      args.threads > 0 ? args.threads : flowbench::threads_from_env(1);
  config["threads"] = threads;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowbench: classical compression / forecasting / sensing baselines"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "write a synthetic dataset container");
  CommonArgs gen_common;
  std::string gen_kind, gen_out;
  std::uint64_t gen_seed = 0;
  bool gen_seed_set = false;
  add_common(generate, gen_common);
  generate->add_option("--kind", gen_kind, "generator kind");
  generate->add_option("--out", gen_out, "output .fbf path");
  generate->add_option("--seed", gen_seed, "generator seed")->each([&](const std::string&) {
    gen_seed_set = true;
  });

  // fit-apply
  auto* fit = app.add_subcommand("fit-apply", "fit a method and write a results file");
  CommonArgs fit_common;
  std::string fit_method, fit_train, fit_test, fit_out;
  add_common(fit, fit_common);
  fit->add_option("--preset", fit_common.preset, "named protocol preset");
  fit->add_option("--method", fit_method, "pod | dmd | dmdc | lse | wiener_causal | wiener_noncausal");
  fit->add_option("--train", fit_train, "training dataset container");
  fit->add_option("--test-input", fit_test, "test input container");
  fit->add_option("--out", fit_out, "output results .fbf path");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score a results file against truth");
  CommonArgs eval_common;
  std::string eval_results, eval_truth, eval_out, eval_csv, eval_baseline;
  add_common(evaluate, eval_common);
  evaluate->add_option("--results", eval_results, "results .fbf path");
  evaluate->add_option("--truth", eval_truth, "withheld truth container");
  evaluate->add_option("--out", eval_out, "output metrics .fbf path");
  evaluate->add_option("--csv", eval_csv, "plot-ready CSV path");
  evaluate->add_option("--baseline-results", eval_baseline,
                       "results file whose timings normalize the time ratios");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "print a container header");
  std::string inspect_path;
  inspect->add_option("path", inspect_path, "container path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      json flags = json::object();
      if (!gen_kind.empty()) flags["kind"] = gen_kind;
      if (!gen_out.empty()) flags["out"] = gen_out;
      if (gen_seed_set) flags["seed"] = gen_seed;
      flowbench::cmd_generate(finalize(gen_common, flags));
    } else if (fit->parsed()) {
      json flags = json::object();
      if (!fit_method.empty()) flags["method"] = fit_method;
      if (!fit_train.empty()) flags["train"] = fit_train;
      if (!fit_test.empty()) flags["test_input"] = fit_test;
      if (!fit_out.empty()) flags["out"] = fit_out;
      flowbench::cmd_fit_apply(finalize(fit_common, flags));
    } else if (evaluate->parsed()) {
      json flags = json::object();
      if (!eval_results.empty()) flags["results"] = eval_results;
      if (!eval_truth.empty()) flags["truth"] = eval_truth;
      if (!eval_out.empty()) flags["out"] = eval_out;
      if (!eval_csv.empty()) flags["csv"] = eval_csv;
      if (!eval_baseline.empty()) flags["baseline_results"] = eval_baseline;
      flowbench::cmd_evaluate(finalize(eval_common, flags));
    } else if (inspect->parsed()) {
      std::cout << flowbench::cmd_inspect(inspect_path);
    }
  } catch (const flowbench::Error& e) {
    std::cerr << "error[" << e.kind() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
