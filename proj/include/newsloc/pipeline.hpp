#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "newsloc/config.hpp"
#include "newsloc/error.hpp"
#include "newsloc/kernels.hpp"

namespace newsloc {

enum class Stage { synth, ingest, dedup, geoparse, vectorize, cluster, profile, evaluate, grid, report };

std::optional<Stage> parse_stage(std::string_view name);
std::string_view to_string(Stage stage);

// Failure inside a stage; the CLI prints the stage name and exits nonzero.
class StageError : public Error {
 public:
  StageError(Stage stage, const std::string& what)
      : Error(std::string(to_string(stage)) + ": " + what), stage_(stage) {}
  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

struct PipelineOptions {
  kernels::Exec exec = kernels::Exec::parallel;
  bool svg = false;
};

// FNV-1a 64-bit.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 14695981039346656037ULL);
std::uint64_t hash_file(const std::filesystem::path& path);

// Runs stages against an output directory. Each stage first brings its
// upstream stages up to date, then compares a content hash of its inputs and
// parameters with the stamp left by the previous run; a match with all
// outputs present is a cache hit.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, PipelineOptions options = {});

  void run(Stage stage);

  struct Stats {
    std::size_t computed = 0;
    std::size_t cache_hits = 0;
  };
  const Stats& stats(Stage stage) const { return stats_[static_cast<std::size_t>(stage)]; }

  const PipelineConfig& config() const noexcept { return config_; }
  std::filesystem::path out(std::string_view name) const;

 private:
  std::string ensure(Stage stage);
  std::string stage_key(Stage stage, const std::vector<std::string>& upstream) const;
  std::vector<std::string> outputs(Stage stage) const;
  void compute(Stage stage);

  void run_synth();
  void run_ingest();
  void run_dedup();
  void run_geoparse();
  void run_vectorize();
  void run_cluster();
  void run_profile();
  void run_evaluate();
  void run_grid();
  void run_report();

  PipelineConfig config_;
  PipelineOptions options_;
  std::map<Stage, std::string> keys_;  // stages already brought up to date in this run
  Stats stats_[10];
};

}  // namespace newsloc
