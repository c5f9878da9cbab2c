#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "newsloc/corpus.hpp"
#include "newsloc/error.hpp"
#include "newsloc/evaluate.hpp"
#include "newsloc/hdbscan.hpp"
#include "newsloc/synthgen.hpp"
#include "newsloc/umap.hpp"
#include "newsloc/vectorize.hpp"

namespace newsloc {

// Raised for unknown keys, bad values and missing required settings.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Minimal TOML subset: [section] headers, key = value, '#' comments. Values
// are integers, floats, booleans, "strings" or flat [arrays] of those.
using ConfigScalar = std::variant<std::int64_t, double, bool, std::string>;
using ConfigValue = std::variant<ConfigScalar, std::vector<ConfigScalar>>;
using ConfigTable = std::map<std::string, ConfigValue>;  // "section.key"

ConfigTable parse_config_text(std::string_view text);

struct PipelineConfig {
  struct Paths {
    std::filesystem::path corpus;
    CorpusFormat corpus_format = CorpusFormat::jsonl;
    std::filesystem::path gazetteer;
    std::filesystem::path zones;
    std::optional<std::filesystem::path> lexicon;
    std::optional<std::filesystem::path> blocklist;
    std::optional<std::filesystem::path> annotations;
    std::optional<std::filesystem::path> ground_truth;
    std::optional<std::filesystem::path> theme_map;
    std::filesystem::path output_dir = "out";
  } paths;

  std::uint64_t seed = 0;
  DedupOptions dedup;
  std::size_t max_distinct_mentions = 40;
  std::vector<std::string> broad_mentions{"Edinburgh"};
  VocabularyOptions vocabulary;
  UmapParams umap;
  HdbscanParams hdbscan;
  OutlierPolicy outlier_policy = OutlierPolicy::treat_as_cluster;
  std::size_t top_terms = 30;
  std::vector<std::size_t> grid_vocab_sizes{5000, 10000, 20000};
  std::vector<std::size_t> grid_umap_dims{2, 10, 20};
  std::vector<std::size_t> grid_umap_neighbors{5, 15, 30};
  SynthSpec synth;
};

// Relative paths resolve against `base_dir`. Every key is checked against
// the schema before any value is used; the seed is required.
PipelineConfig config_from_table(const ConfigTable& table,
                                 const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

// Canonical form used for stage cache keys.
nlohmann::json to_json(const PipelineConfig& config);

}  // namespace newsloc
