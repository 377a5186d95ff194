#include <CLI11.hpp>

#include <iostream>

#include "incad/commands.hpp"

int main(int argc, char** argv) {
  incad::configure_logging();

  CLI::App app{"Simultaneous clustering and anomaly detection (batch and streaming)"};
  app.require_subcommand(1, 1);

  incad::CommandOptions opt;
  std::string config, input, out = ".";
  std::uint64_t seed = 0;
  double batch_fraction = 0.0;
  std::vector<double> fractions;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"batch", "Gibbs sampling over the whole input"},
      {"stream", "batch-initialise on a prefix, then stream the rest"},
      {"sensitivity", "stream once per batch fraction and tabulate metrics"},
      {"simulate", "write the labelled synthetic dataset"},
      {"eval", "score <out>/results.jsonl against the labels in --input"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "flat JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--input", input, "input CSV with header");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--batch-fraction", batch_fraction, "override stream.batch_fraction");
    sub->add_option("--fractions", fractions, "comma-separated batch fractions")->delimiter(',');
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : incad::kExitConfig;
  }

  auto* sub = app.get_subcommands().front();
  opt.command = sub->get_name();
  if (!config.empty()) opt.config = config;
  if (!input.empty()) opt.input = input;
  opt.out = out;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--batch-fraction")) opt.batch_fraction = batch_fraction;
  if (sub->count("--fractions")) opt.fractions = fractions;
  return incad::run_command(opt);
}
