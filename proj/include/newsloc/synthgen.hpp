#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "newsloc/corpus.hpp"
#include "newsloc/evaluate.hpp"
#include "newsloc/geoparse.hpp"
#include "newsloc/matrix.hpp"

namespace newsloc {

struct SynthSpec {
  std::size_t n_articles = 1000;
  std::size_t n_topics = 8;
  std::size_t core_words_per_topic = 40;
  std::size_t filler_words = 60;
  std::size_t grid_cols = 5;  // zones per neighbourhood
  std::size_t grid_rows = 5;  // neighbourhoods
  double origin_lat = 55.90;
  double origin_lon = -3.30;
  double zone_size_deg = 0.01;
  std::size_t streets_per_zone = 4;
  std::size_t min_sentences = 6;
  std::size_t max_sentences = 10;
  std::size_t min_sentence_words = 10;
  std::size_t max_sentence_words = 16;
  double topic_word_fraction = 0.55;
  double broad_mention_rate = 0.3;
  double title_mention_rate = 0.1;
  double keyword_accuracy = 0.8;
  // Gaussian falloff (in zone widths) of each topic's affinity around its home.
  double affinity_bandwidth = 1.5;
  double affinity_floor = 0.02;
  std::size_t crime_topic = 0;
  double crime_scale = 250.0;
  std::size_t n_republished = 20;
  std::size_t n_annotation_pairs = 700;
  double annotation_bias = 10.0;
  std::uint64_t seed = 7;

  std::size_t n_zones() const noexcept { return grid_cols * grid_rows; }
};

// Throws Error naming the offending field.
void validate(const SynthSpec& spec);

struct PlantedMention {
  std::string article_id;
  TextField field = TextField::body;
  Span span;
  std::string surface;
  std::string entry_id;
  std::string zone_id;
};

struct SynthCorpus {
  SynthSpec spec;
  std::vector<Article> articles;  // originals then republished copies
  std::vector<GazetteerRecord> gazetteer;
  std::vector<DataZone> zones;
  std::vector<AnnotatedPair> annotations;

  std::map<std::string, std::size_t> topic_of;       // every article id
  std::map<std::string, std::string> zone_of;        // every article id
  std::vector<PlantedMention> mentions;              // excludes broad mentions
  std::vector<std::vector<std::string>> topic_terms;  // core vocabulary per topic
  Matrix affinity;                                   // zones x topics, rows sum to 1
  std::vector<DuplicateGroup> duplicate_groups;
  std::string broad_name;

  nlohmann::json ground_truth() const;
};

SynthCorpus generate(const SynthSpec& spec);

// Per zone, the topic shares of the articles with a planted mention there.
std::map<std::string, std::vector<double>> zone_topic_distribution(
    const std::map<std::string, std::size_t>& topic_of, const std::vector<PlantedMention>& mentions,
    std::size_t n_topics);

struct SynthPaths {
  std::filesystem::path corpus;
  std::filesystem::path gazetteer;
  std::filesystem::path zones;
  std::filesystem::path annotations;
  std::filesystem::path ground_truth;
};

void write_synth(const SynthCorpus& synth, const SynthPaths& paths);

SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& spec);

}  // namespace newsloc
