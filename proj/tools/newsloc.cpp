// Command-line front end: `newsloc <stage> --config FILE [--seed N] [--out DIR]`.

#include <iostream>

#include <CLI11.hpp>
#include <omp.h>
#include <spdlog/spdlog.h>

#include "newsloc/config.hpp"
#include "newsloc/log.hpp"
#include "newsloc/pipeline.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kStageExit = 3;

}  // namespace

int main(int argc, char** argv) {
  newsloc::init_logging();

  CLI::App app{"Location-aware topic profiles from local news"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool single_thread = false;
  bool svg = false;
  app.add_option("--config", config_path, "Pipeline config (TOML subset)")->required();
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", out_dir, "Override the output directory");
  app.add_flag("--single-thread", single_thread, "Run every kernel on one thread");
  app.add_flag("--svg", svg, "Also write SVG pie charts of location profiles");

  const char* descriptions[] = {
      "Write a synthetic corpus, gazetteer, zones and annotations",
      "Validate and load the corpus",
      "Remove near-duplicate articles",
      "Find, resolve and zone place mentions",
      "Mask places, filter tokens and build tf-idf vectors",
      "UMAP reduction, HDBSCAN clustering and soft memberships",
      "Location and neighbourhood topic profiles",
      "Pair macro-F1, error partition and zone correlations",
      "Hyperparameter grid over vocabulary size and UMAP settings",
      "Bundle the report artifacts"};
  for (std::size_t i = 0; i < 10; ++i) {
    const auto stage = static_cast<newsloc::Stage>(i);
    app.add_subcommand(std::string(newsloc::to_string(stage)), descriptions[i])
        ->fallthrough();
  }
  CLI11_PARSE(app, argc, argv);

  newsloc::PipelineConfig config;
  try {
    config = newsloc::load_config(config_path);
  } catch (const newsloc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  }
  if (seed) {
    config.seed = *seed;
    config.umap.seed = *seed;
    config.synth.seed = *seed;
  }
  if (!out_dir.empty()) config.paths.output_dir = out_dir;
  if (single_thread) omp_set_num_threads(1);

  newsloc::PipelineOptions options;
  options.exec = single_thread ? newsloc::kernels::Exec::serial : newsloc::kernels::Exec::parallel;
  options.svg = svg;

  const auto stage = *newsloc::parse_stage(app.get_subcommands().front()->get_name());
  try {
    newsloc::Pipeline pipeline(std::move(config), options);
    pipeline.run(stage);
  } catch (const newsloc::StageError& e) {
    std::cerr << "stage " << newsloc::to_string(e.stage()) << " failed: " << e.what() << "\n";
    return kStageExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStageExit;
  }
  return 0;
}
