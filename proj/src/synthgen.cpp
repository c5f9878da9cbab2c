#include "newsloc/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "newsloc/csv.hpp"
#include "newsloc/error.hpp"
#include "newsloc/preprocess.hpp"
#include "newsloc/text.hpp"

namespace newsloc {

using nlohmann::json;

namespace {

constexpr const char* kBaseNames[] = {"Blockton", "Ashgrove", "Millbank", "Harbourside",
                                      "Eastfield"};
constexpr const char* kFunctionWords[] = {"the", "of",   "and",  "a",    "in",    "to",
                                          "with", "for", "on",   "at",   "by",    "from",
                                          "that", "it",  "they", "this", "their", "also"};
constexpr const char* kStreetSuffixes[] = {"Street", "Lane", "Avenue", "Place", "Terrace",
                                           "Crescent", "Gardens", "Row"};
constexpr const char* kHighStreet = "High Street";
constexpr const char* kBroadName = "Edinburgh";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
  bool chance(double p) { return uniform() < p; }
  std::size_t weighted(const std::vector<double>& w) {
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    double u = uniform() * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (u < w[i]) return i;
      u -= w[i];
    }
    return w.size() - 1;
  }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

std::string capitalise(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

// Pronounceable pseudo-words, unique across the whole generator.
class WordForge {
 public:
  explicit WordForge(Rng& rng) : rng_(rng) {
    for (const char* w : kFunctionWords) used_.insert(w);
    for (const char* w : kBaseNames) used_.insert(text::to_lower(w));
    used_.insert("high");
    used_.insert("road");
    used_.insert(text::to_lower(kBroadName));
    for (const char* s : kStreetSuffixes) used_.insert(text::to_lower(s));
  }

  std::string next() {
    static constexpr std::string_view consonants = "bdfgklmnprstvz";
    static constexpr std::string_view vowels = "aeiou";
    const auto& lexicon = FunctionWordLexicon::builtin();
    while (true) {
      std::string w;
      const std::size_t syllables = rng_.between(2, 3);
      for (std::size_t s = 0; s < syllables; ++s) {
        w += consonants[rng_.below(consonants.size())];
        w += vowels[rng_.below(vowels.size())];
      }
      if (rng_.chance(0.5)) w += consonants[rng_.below(consonants.size())];
      if (lexicon.removable(w) || !used_.insert(w).second) continue;
      return w;
    }
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

std::string zone_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "DZ%03zu", index + 1);
  return buf;
}

std::string numbered(char prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%04zu", prefix, index + 1);
  return buf;
}

// A sentence is a word list; place names are single entries tagged with the
// gazetteer entry they came from.
struct Word {
  std::string text;
  const GazetteerRecord* place = nullptr;
};

}  // namespace

void validate(const SynthSpec& s) {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw Error(std::string("synth spec: ") + field + " " + what);
  };
  require(s.n_articles >= 2, "n_articles", "must be at least 2");
  require(s.n_topics >= 1, "n_topics", "must be at least 1");
  require(s.grid_rows >= 1, "grid_rows", "must be at least 1");
  require(s.grid_cols >= 3, "grid_cols", "must be at least 3");
  require(s.n_topics <= s.n_zones(), "n_topics", "must not exceed the number of zones");
  require(s.core_words_per_topic >= 1, "core_words_per_topic", "must be at least 1");
  require(s.filler_words >= 1, "filler_words", "must be at least 1");
  require(s.zone_size_deg > 0.0, "zone_size_deg", "must be positive");
  require(s.streets_per_zone >= 1, "streets_per_zone", "must be at least 1");
  require(s.min_sentences >= 1 && s.min_sentences <= s.max_sentences, "min_sentences",
          "must be in [1, max_sentences]");
  require(s.min_sentence_words >= 1 && s.min_sentence_words <= s.max_sentence_words,
          "min_sentence_words", "must be in [1, max_sentence_words]");
  for (auto [v, name] : {std::pair{s.topic_word_fraction, "topic_word_fraction"},
                         std::pair{s.broad_mention_rate, "broad_mention_rate"},
                         std::pair{s.title_mention_rate, "title_mention_rate"},
                         std::pair{s.keyword_accuracy, "keyword_accuracy"}}) {
    require(v >= 0.0 && v <= 1.0, name, "must be in [0, 1]");
  }
  require(s.affinity_bandwidth > 0.0, "affinity_bandwidth", "must be positive");
  require(s.affinity_floor >= 0.0, "affinity_floor", "must be non-negative");
  require(s.crime_topic < s.n_topics, "crime_topic", "must name a topic");
  require(s.crime_scale > 0.0, "crime_scale", "must be positive");
  require(s.n_republished <= s.n_articles, "n_republished", "must not exceed n_articles");
  require(s.n_annotation_pairs <= s.n_articles * (s.n_articles - 1) / 2, "n_annotation_pairs",
          "exceeds the number of article pairs");
  require(s.annotation_bias >= 0.0, "annotation_bias", "must be non-negative");
}

std::map<std::string, std::vector<double>> zone_topic_distribution(
    const std::map<std::string, std::size_t>& topic_of, const std::vector<PlantedMention>& mentions,
    std::size_t n_topics) {
  std::map<std::string, std::set<std::string>> articles;
  for (const auto& m : mentions) articles[m.zone_id].insert(m.article_id);
  std::map<std::string, std::vector<double>> out;
  for (const auto& [zone, ids] : articles) {
    std::vector<double> dist(n_topics, 0.0);
    for (const auto& id : ids) dist.at(topic_of.at(id)) += 1.0;
    for (double& d : dist) d /= static_cast<double>(ids.size());
    out[zone] = std::move(dist);
  }
  return out;
}

SynthCorpus generate(const SynthSpec& spec) {
  validate(spec);
  SynthCorpus out;
  out.spec = spec;
  out.broad_name = kBroadName;
  Rng rng(spec.seed);
  WordForge forge(rng);
  const std::size_t rows = spec.grid_rows, cols = spec.grid_cols, nz = spec.n_zones();
  const double s = spec.zone_size_deg;

  // Vocabulary.
  out.topic_terms.resize(spec.n_topics);
  for (auto& terms : out.topic_terms) {
    for (std::size_t i = 0; i < spec.core_words_per_topic; ++i) terms.push_back(forge.next());
  }
  std::vector<std::string> filler;
  for (std::size_t i = 0; i < spec.filler_words; ++i) filler.push_back(forge.next());

  // Zones and neighbourhoods.
  std::vector<std::string> base_names;
  for (std::size_t r = 0; r < rows; ++r) {
    base_names.push_back(r < std::size(kBaseNames) ? kBaseNames[r] : capitalise(forge.next()));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      DataZone z;
      z.id = zone_id(r * cols + c);
      char suffix[8];
      std::snprintf(suffix, sizeof suffix, "%02zu", c + 1);
      z.name = base_names[r] + " - " + suffix;
      const double lat0 = spec.origin_lat + static_cast<double>(r) * s;
      const double lon0 = spec.origin_lon + static_cast<double>(c) * s;
      z.ring = {{lat0, lon0}, {lat0, lon0 + s}, {lat0 + s, lon0 + s}, {lat0 + s, lon0}, {lat0, lon0}};
      out.zones.push_back(std::move(z));
    }
  }
  auto zone_point = [&](std::size_t z, double fy, double fx) {
    const std::size_t r = z / cols, c = z % cols;
    return GeoPoint{spec.origin_lat + (static_cast<double>(r) + fy) * s,
                    spec.origin_lon + (static_cast<double>(c) + fx) * s};
  };
  auto district = [&](std::size_t z) { return "EH" + std::to_string(z / cols + 1); };

  // Gazetteer.
  std::size_t next_entry = 0;
  auto add_place = [&](const std::string& name, GeoPoint p, const std::string& dist, PlaceKind kind) {
    out.gazetteer.push_back({numbered('g', next_entry++), name, p.lat, p.lon, dist, kind, {}});
  };
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t i = 0; i < spec.streets_per_zone; ++i) {
      const std::string name = capitalise(forge.next()) + " " +
                               kStreetSuffixes[rng.below(std::size(kStreetSuffixes))];
      add_place(name, zone_point(z, 0.25 + 0.5 * rng.uniform(), 0.25 + 0.5 * rng.uniform()),
                district(z), PlaceKind::street);
    }
  }
  const std::size_t anchor_col = cols / 2, high_col = 0, road_col = cols - 1;
  for (std::size_t r = 0; r < rows; ++r) {
    add_place(base_names[r], zone_point(r * cols + anchor_col, 0.5, 0.5), district(r * cols),
              PlaceKind::settlement);
    add_place(base_names[r] + " Road", zone_point(r * cols + road_col, 0.5, 0.5),
              district(r * cols), PlaceKind::street);
    add_place(kHighStreet, zone_point(r * cols + high_col, 0.5, 0.5), district(r * cols),
              PlaceKind::street);
  }
  add_place(kBroadName,
            {spec.origin_lat + static_cast<double>(rows) * s / 2,
             spec.origin_lon + static_cast<double>(cols) * s / 2},
            "EH1", PlaceKind::settlement);

  std::vector<std::vector<const GazetteerRecord*>> streets(nz);
  std::vector<const GazetteerRecord*> anchor(rows), road(rows), high(rows);
  const GazetteerRecord* broad = &out.gazetteer.back();
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t i = 0; i < spec.streets_per_zone; ++i) {
      streets[z].push_back(&out.gazetteer[z * spec.streets_per_zone + i]);
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = nz * spec.streets_per_zone + 3 * r;
    anchor[r] = &out.gazetteer[base];
    road[r] = &out.gazetteer[base + 1];
    high[r] = &out.gazetteer[base + 2];
  }
  std::map<std::string, std::string> zone_of_entry;
  {
    const ZoneIndex index(out.zones);
    for (const auto& g : out.gazetteer) {
      if (auto z = index.assign({g.lat, g.lon})) zone_of_entry[g.id] = *z;
    }
  }

  // Planted zone-topic affinity.
  std::vector<std::size_t> cells(nz);
  std::iota(cells.begin(), cells.end(), 0);
  rng.shuffle(cells);
  out.affinity = Matrix(nz, spec.n_topics, 0.0);
  for (std::size_t z = 0; z < nz; ++z) {
    double total = 0.0;
    for (std::size_t t = 0; t < spec.n_topics; ++t) {
      const double dr = static_cast<double>(z / cols) - static_cast<double>(cells[t] / cols);
      const double dc = static_cast<double>(z % cols) - static_cast<double>(cells[t] % cols);
      const double bw = spec.affinity_bandwidth;
      out.affinity(z, t) = std::exp(-(dr * dr + dc * dc) / (2 * bw * bw)) + spec.affinity_floor;
      total += out.affinity(z, t);
    }
    for (std::size_t t = 0; t < spec.n_topics; ++t) out.affinity(z, t) /= total;
  }
  for (std::size_t z = 0; z < nz; ++z) {
    const double rate = std::round(spec.crime_scale * out.affinity(z, spec.crime_topic));
    if (rate >= 3.0) out.zones[z].crime_rate = static_cast<std::int64_t>(rate);
  }

  auto content_word = [&](std::size_t topic) {
    if (rng.chance(spec.topic_word_fraction)) {
      return out.topic_terms[topic][rng.below(out.topic_terms[topic].size())];
    }
    if (rng.chance(0.5)) return filler[rng.below(filler.size())];
    return std::string(kFunctionWords[rng.below(std::size(kFunctionWords))]);
  };
  auto make_sentence = [&](std::size_t topic) {
    std::vector<Word> words;
    const std::size_t n = rng.between(spec.min_sentence_words, spec.max_sentence_words);
    for (std::size_t i = 0; i < n; ++i) words.push_back({content_word(topic)});
    return words;
  };
  auto render = [&](const std::vector<std::vector<Word>>& sentences, const std::string& article_id,
                    TextField field, bool terminate) {
    std::string text;
    for (std::size_t si = 0; si < sentences.size(); ++si) {
      if (si > 0) text += ' ';
      for (std::size_t wi = 0; wi < sentences[si].size(); ++wi) {
        const Word& w = sentences[si][wi];
        if (wi > 0) text += ' ';
        const std::size_t begin = text.size();
        text += wi == 0 ? capitalise(w.text) : w.text;
        if (w.place != nullptr && w.place != broad) {
          out.mentions.push_back({article_id, field, {begin, text.size()}, w.text, w.place->id,
                                  zone_of_entry.at(w.place->id)});
        }
      }
      if (terminate) text += '.';
    }
    return text;
  };
  auto insert_place = [&](std::vector<std::vector<Word>>& sentences, const GazetteerRecord* place) {
    auto& sentence = sentences[rng.below(sentences.size())];
    const std::size_t pos = 1 + rng.below(sentence.size());
    sentence.insert(sentence.begin() + static_cast<std::ptrdiff_t>(pos), Word{place->name, place});
  };
  auto topic_tag = [](std::size_t t) { return "topic-" + std::to_string(t + 1); };

  // Articles.
  std::vector<std::vector<std::vector<Word>>> bodies;
  for (std::size_t a = 0; a < spec.n_articles; ++a) {
    const std::string id = numbered('a', a);
    const std::size_t z = rng.below(nz);
    std::vector<double> weights(out.affinity.row(z).begin(), out.affinity.row(z).end());
    const std::size_t topic = rng.weighted(weights);
    const std::size_t row = z / cols;

    std::vector<std::vector<Word>> title{make_sentence(topic)};
    title[0].resize(std::min<std::size_t>(title[0].size(), rng.between(4, 7)));
    if (rng.chance(spec.title_mention_rate)) {
      const auto* place = streets[z][rng.below(streets[z].size())];
      title[0].push_back({place->name, place});
    }

    std::vector<std::vector<Word>> body;
    const std::size_t n_sent = rng.between(spec.min_sentences, spec.max_sentences);
    for (std::size_t i = 0; i < n_sent; ++i) body.push_back(make_sentence(topic));
    const std::size_t first = rng.below(streets[z].size());
    insert_place(body, streets[z][first]);
    if (streets[z].size() > 1 && rng.chance(0.5)) {
      insert_place(body, streets[z][(first + 1 + rng.below(streets[z].size() - 1)) % streets[z].size()]);
    }
    if (z % cols == high_col && rng.chance(0.3)) insert_place(body, high[row]);
    if (rng.chance(0.1)) insert_place(body, anchor[row]);
    if (rng.chance(0.05)) insert_place(body, road[row]);
    if (rng.chance(spec.broad_mention_rate)) insert_place(body, broad);

    Article art;
    art.id = id;
    art.title = render(title, id, TextField::title, false);
    art.body = render(body, id, TextField::body, true);
    char date[16];
    std::snprintf(date, sizeof date, "2023-%02zu-%02zu", rng.between(1, 12), rng.between(1, 28));
    art.published = date;
    std::size_t tagged = topic;
    if (spec.n_topics > 1 && !rng.chance(spec.keyword_accuracy)) {
      tagged = (topic + 1 + rng.below(spec.n_topics - 1)) % spec.n_topics;
    }
    art.keywords = {topic_tag(tagged), text::to_lower(base_names[row])};
    segment(art);
    out.articles.push_back(std::move(art));
    out.topic_of[id] = topic;
    out.zone_of[id] = out.zones[z].id;
    bodies.push_back(std::move(body));
  }

  // Republished copies: the same story plus one sentence, so the copy wins.
  std::vector<std::size_t> originals(spec.n_articles);
  std::iota(originals.begin(), originals.end(), 0);
  rng.shuffle(originals);
  originals.resize(spec.n_republished);
  std::sort(originals.begin(), originals.end());
  std::set<std::string> dropped;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    const Article& src = out.articles[originals[i]];
    const std::string id = numbered('r', i);
    auto body = bodies[originals[i]];
    const std::size_t topic = out.topic_of.at(src.id);
    body.push_back(make_sentence(topic));
    Article copy = src;
    copy.id = id;
    copy.body = render(body, id, TextField::body, true);
    auto title_mention = std::find_if(out.mentions.begin(), out.mentions.end(), [&](const auto& m) {
      return m.article_id == src.id && m.field == TextField::title;
    });
    if (title_mention != out.mentions.end()) {
      auto dup = *title_mention;
      dup.article_id = id;
      out.mentions.push_back(std::move(dup));
    }
    segment(copy);
    out.articles.push_back(std::move(copy));
    out.topic_of[id] = topic;
    out.zone_of[id] = out.zone_of.at(src.id);
    out.duplicate_groups.push_back({id, {src.id}});
    dropped.insert(src.id);
  }
  std::sort(out.mentions.begin(), out.mentions.end(), [](const auto& a, const auto& b) {
    return std::tie(a.article_id, a.field, a.span.begin) < std::tie(b.article_id, b.field, b.span.begin);
  });

  // Annotations over the deduplicated collection.
  std::vector<Article> kept;
  for (const auto& a : out.articles) {
    if (!dropped.count(a.id)) kept.push_back(a);
  }
  const auto pairs = sample_annotation_pairs(kept, spec.n_annotation_pairs, spec.annotation_bias,
                                             spec.seed ^ 0xA5A5A5A5ULL);
  for (const auto& p : pairs) {
    const auto& a = kept[p.a].id;
    const auto& b = kept[p.b].id;
    const bool same = out.topic_of.at(a) == out.topic_of.at(b);
    const auto stratum = same ? Stratum::very : static_cast<Stratum>(rng.below(3));
    out.annotations.push_back({a, b, stratum});
  }
  return out;
}

json SynthCorpus::ground_truth() const {
  std::set<std::string> dropped;
  json duplicates = json::array();
  for (const auto& g : duplicate_groups) {
    dropped.insert(g.dropped_ids.begin(), g.dropped_ids.end());
    duplicates.push_back({{"kept", g.kept_id}, {"dropped", g.dropped_ids}});
  }
  json articles_json = json::object();
  for (const auto& [id, topic] : topic_of) {
    articles_json[id] = {{"topic", topic}, {"zone", zone_of.at(id)}, {"dropped", dropped.count(id) > 0}};
  }
  json mentions_json = json::array();
  std::vector<PlantedMention> kept_mentions;
  for (const auto& m : mentions) {
    mentions_json.push_back({{"article_id", m.article_id},
                             {"field", m.field == TextField::title ? "title" : "body"},
                             {"begin", m.span.begin},
                             {"end", m.span.end},
                             {"surface", m.surface},
                             {"entry_id", m.entry_id},
                             {"zone_id", m.zone_id}});
    if (!dropped.count(m.article_id)) kept_mentions.push_back(m);
  }
  json affinity_json = json::object();
  json crime = json::object();
  for (std::size_t z = 0; z < zones.size(); ++z) {
    affinity_json[zones[z].id] =
        std::vector<double>(affinity.row(z).begin(), affinity.row(z).end());
    crime[zones[z].id] = zones[z].crime_rate ? json(*zones[z].crime_rate) : json(nullptr);
  }
  json topics = json::array();
  for (std::size_t t = 0; t < topic_terms.size(); ++t) {
    std::size_t home = 0;
    for (std::size_t z = 1; z < zones.size(); ++z) {
      if (affinity(z, t) > affinity(home, t)) home = z;
    }
    topics.push_back({{"id", t}, {"home_zone", zones[home].id}, {"terms", topic_terms[t]}});
  }
  return {{"spec", to_json(spec)},
          {"topics", topics},
          {"crime_topic", spec.crime_topic},
          {"broad_name", broad_name},
          {"articles", articles_json},
          {"mentions", mentions_json},
          {"affinity", affinity_json},
          {"zone_topic_distribution", zone_topic_distribution(topic_of, kept_mentions, spec.n_topics)},
          {"crime_rate", crime},
          {"duplicates", duplicates}};
}

void write_synth(const SynthCorpus& synth, const SynthPaths& paths) {
  for (const auto* p : {&paths.corpus, &paths.gazetteer, &paths.zones, &paths.annotations,
                        &paths.ground_truth}) {
    if (p->has_parent_path()) std::filesystem::create_directories(p->parent_path());
  }
  {
    std::ofstream out(paths.corpus, std::ios::binary);
    write_corpus_jsonl(out, synth.articles);
  }
  {
    std::ofstream out(paths.gazetteer, std::ios::binary);
    csv::write_row(out, {"id", "name", "lat", "lon", "postcode_district", "kind", "priority"});
    for (const auto& g : synth.gazetteer) {
      csv::write_row(out, {g.id, g.name, csv::format_double(g.lat), csv::format_double(g.lon),
                           g.postcode_district, std::string(to_string(g.kind)),
                           g.priority ? std::to_string(*g.priority) : ""});
    }
  }
  {
    std::ofstream out(paths.zones, std::ios::binary);
    out << zones_to_geojson(synth.zones).dump(1) << "\n";
  }
  {
    std::ofstream out(paths.annotations, std::ios::binary);
    write_annotations_csv(out, synth.annotations);
  }
  {
    std::ofstream out(paths.ground_truth, std::ios::binary);
    out << synth.ground_truth().dump(1) << "\n";
  }
}

#define NEWSLOC_SYNTH_FIELDS(X)                                                              \
  X(n_articles) X(n_topics) X(core_words_per_topic) X(filler_words) X(grid_cols) X(grid_rows) \
  X(origin_lat) X(origin_lon) X(zone_size_deg) X(streets_per_zone) X(min_sentences)           \
  X(max_sentences) X(min_sentence_words) X(max_sentence_words) X(topic_word_fraction)         \
  X(broad_mention_rate) X(title_mention_rate) X(keyword_accuracy) X(affinity_bandwidth)       \
  X(affinity_floor) X(crime_topic) X(crime_scale) X(n_republished) X(n_annotation_pairs)      \
  X(annotation_bias) X(seed)

SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec s;
  static const std::set<std::string> known = {
#define X(f) #f,
      NEWSLOC_SYNTH_FIELDS(X)
#undef X
  };
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error("synth spec: unknown field '" + key + "'");
  }
#define X(f)                                                                 \
  if (j.contains(#f)) {                                                      \
    try {                                                                    \
      j.at(#f).get_to(s.f);                                                  \
    } catch (const json::exception&) {                                       \
      throw Error("synth spec: field '" #f "' has the wrong type");          \
    }                                                                        \
  }
  NEWSLOC_SYNTH_FIELDS(X)
#undef X
  validate(s);
  return s;
}

json to_json(const SynthSpec& s) {
  json j;
#define X(f) j[#f] = s.f;
  NEWSLOC_SYNTH_FIELDS(X)
#undef X
  return j;
}

}  // namespace newsloc
