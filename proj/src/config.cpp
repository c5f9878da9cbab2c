#include "newsloc/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "newsloc/text.hpp"

namespace newsloc {

using nlohmann::json;

namespace {

struct Cursor {
  std::string_view s;
  std::size_t pos = 0;
  std::size_t line = 0;

  void skip_space() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }
  bool done() const { return pos >= s.size() || s[pos] == '#'; }
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("", "line " + std::to_string(line) + ": " + what);
  }
};

std::string parse_string(Cursor& c) {
  ++c.pos;  // opening quote
  std::string out;
  while (c.pos < c.s.size() && c.s[c.pos] != '"') {
    char ch = c.s[c.pos++];
    if (ch == '\\') {
      if (c.pos >= c.s.size()) c.fail("unterminated escape");
      const char e = c.s[c.pos++];
      switch (e) {
        case 'n': ch = '\n'; break;
        case 't': ch = '\t'; break;
        case '"': ch = '"'; break;
        case '\\': ch = '\\'; break;
        default: c.fail(std::string("unknown escape \\") + e);
      }
    }
    out += ch;
  }
  if (c.pos >= c.s.size()) c.fail("unterminated string");
  ++c.pos;
  return out;
}

ConfigScalar parse_scalar(Cursor& c) {
  c.skip_space();
  if (c.pos >= c.s.size()) c.fail("missing value");
  if (c.s[c.pos] == '"') return parse_string(c);
  std::size_t end = c.pos;
  while (end < c.s.size() && c.s[end] != ',' && c.s[end] != ']' && c.s[end] != '#' &&
         !text::is_space(c.s[end])) {
    ++end;
  }
  std::string token(c.s.substr(c.pos, end - c.pos));
  c.pos = end;
  if (token == "true") return true;
  if (token == "false") return false;
  std::string digits;
  for (char ch : token) {
    if (ch != '_') digits += ch;
  }
  std::int64_t i = 0;
  auto [ip, iec] = std::from_chars(digits.data(), digits.data() + digits.size(), i);
  if (iec == std::errc() && ip == digits.data() + digits.size() && !digits.empty()) return i;
  double d = 0.0;
  auto [dp, dec] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
  if (dec == std::errc() && dp == digits.data() + digits.size() && !digits.empty()) return d;
  c.fail("cannot parse value '" + token + "'");
}

bool is_key_char(char ch) { return text::is_alnum(ch) || ch == '_' || ch == '-'; }

}  // namespace

ConfigTable parse_config_text(std::string_view input) {
  ConfigTable table;
  std::string section;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= input.size()) {
    std::size_t end = input.find('\n', start);
    if (end == std::string_view::npos) end = input.size();
    std::string_view line = input.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    Cursor c{line, 0, line_no};
    c.skip_space();
    if (c.done()) {
      if (end == input.size()) break;
      continue;
    }
    if (line[c.pos] == '[') {
      const auto close = line.find(']', c.pos);
      if (close == std::string_view::npos) c.fail("unterminated section header");
      section = std::string(text::trim(line.substr(c.pos + 1, close - c.pos - 1)));
      if (section.empty() || !std::all_of(section.begin(), section.end(), is_key_char)) {
        c.fail("bad section name '" + section + "'");
      }
      c.pos = close + 1;
      c.skip_space();
      if (!c.done()) c.fail("trailing characters after section header");
    } else {
      std::size_t k = c.pos;
      while (k < line.size() && is_key_char(line[k])) ++k;
      const std::string key(line.substr(c.pos, k - c.pos));
      if (key.empty()) c.fail("expected a key");
      c.pos = k;
      c.skip_space();
      if (c.pos >= line.size() || line[c.pos] != '=') c.fail("expected '=' after " + key);
      ++c.pos;
      c.skip_space();
      ConfigValue value;
      if (c.pos < line.size() && line[c.pos] == '[') {
        ++c.pos;
        std::vector<ConfigScalar> items;
        c.skip_space();
        if (c.pos < line.size() && line[c.pos] == ']') {
          ++c.pos;
        } else {
          while (true) {
            items.push_back(parse_scalar(c));
            c.skip_space();
            if (c.pos < line.size() && line[c.pos] == ',') {
              ++c.pos;
              continue;
            }
            if (c.pos < line.size() && line[c.pos] == ']') {
              ++c.pos;
              break;
            }
            c.fail("expected ',' or ']' in array");
          }
        }
        value = std::move(items);
      } else {
        value = parse_scalar(c);
      }
      c.skip_space();
      if (!c.done()) c.fail("trailing characters after value of " + key);
      const std::string full = section.empty() ? key : section + "." + key;
      if (!table.emplace(full, std::move(value)).second) {
        throw ConfigError(full, "defined twice");
      }
    }
    if (end == input.size()) break;
  }
  return table;
}

namespace {

const std::vector<std::string> kSynthKeys = {
    "n_articles",         "n_topics",           "core_words_per_topic", "filler_words",
    "grid_cols",          "grid_rows",          "origin_lat",           "origin_lon",
    "zone_size_deg",      "streets_per_zone",   "min_sentences",        "max_sentences",
    "min_sentence_words", "max_sentence_words", "topic_word_fraction",  "broad_mention_rate",
    "title_mention_rate", "keyword_accuracy",   "affinity_bandwidth",   "affinity_floor",
    "crime_topic",        "crime_scale",        "n_republished",        "n_annotation_pairs",
    "annotation_bias"};

const std::set<std::string>& schema() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k = {
        "seed",
        "paths.corpus", "paths.corpus_format", "paths.gazetteer", "paths.zones", "paths.lexicon",
        "paths.blocklist", "paths.annotations", "paths.ground_truth", "paths.theme_map",
        "paths.output_dir",
        "dedup.min_shared_fraction", "dedup.min_sentence_words", "dedup.boilerplate_doc_count",
        "geoparse.max_distinct_mentions", "geoparse.broad_mentions",
        "vocabulary.max_size", "vocabulary.min_count",
        "umap.dim", "umap.n_neighbors", "umap.epochs", "umap.min_dist", "umap.spread",
        "umap.learning_rate", "umap.repulsion_strength", "umap.negative_sample_rate",
        "hdbscan.min_cluster_size", "hdbscan.min_samples",
        "evaluate.outlier_policy",
        "report.top_terms",
        "grid.vocab_sizes", "grid.umap_dims", "grid.umap_neighbors"};
    for (const auto& s : kSynthKeys) k.insert("synth." + s);
    return k;
  }();
  return keys;
}

const ConfigScalar& scalar(const std::string& key, const ConfigValue& v) {
  if (const auto* s = std::get_if<ConfigScalar>(&v)) return *s;
  throw ConfigError(key, "expected a single value, not an array");
}

std::int64_t as_int(const std::string& key, const ConfigScalar& s) {
  if (const auto* i = std::get_if<std::int64_t>(&s)) return *i;
  throw ConfigError(key, "expected an integer");
}

double as_double(const std::string& key, const ConfigScalar& s) {
  if (const auto* i = std::get_if<std::int64_t>(&s)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&s)) return *d;
  throw ConfigError(key, "expected a number");
}

std::string as_string(const std::string& key, const ConfigScalar& s) {
  if (const auto* str = std::get_if<std::string>(&s)) return *str;
  throw ConfigError(key, "expected a string");
}

std::size_t as_positive(const std::string& key, const ConfigScalar& s) {
  const auto i = as_int(key, s);
  if (i <= 0) throw ConfigError(key, "must be positive");
  return static_cast<std::size_t>(i);
}

class Reader {
 public:
  Reader(const ConfigTable& t, std::filesystem::path base) : t_(t), base_(std::move(base)) {}

  const ConfigValue* find(const std::string& key) const {
    auto it = t_.find(key);
    return it == t_.end() ? nullptr : &it->second;
  }
  void positive(const std::string& key, std::size_t& out) const {
    if (const auto* v = find(key)) out = as_positive(key, scalar(key, *v));
  }
  void positive_real(const std::string& key, double& out) const {
    if (const auto* v = find(key)) {
      const double d = as_double(key, scalar(key, *v));
      if (!(d > 0.0)) throw ConfigError(key, "must be positive");
      out = d;
    }
  }
  void path(const std::string& key, std::filesystem::path& out) const {
    if (const auto* v = find(key)) out = resolve(as_string(key, scalar(key, *v)));
  }
  void path(const std::string& key, std::optional<std::filesystem::path>& out) const {
    if (const auto* v = find(key)) out = resolve(as_string(key, scalar(key, *v)));
  }
  void positive_list(const std::string& key, std::vector<std::size_t>& out) const {
    const auto* v = find(key);
    if (v == nullptr) return;
    const auto* list = std::get_if<std::vector<ConfigScalar>>(v);
    if (list == nullptr || list->empty()) throw ConfigError(key, "expected a non-empty array");
    out.clear();
    for (const auto& s : *list) out.push_back(as_positive(key, s));
  }
  void string_list(const std::string& key, std::vector<std::string>& out) const {
    const auto* v = find(key);
    if (v == nullptr) return;
    const auto* list = std::get_if<std::vector<ConfigScalar>>(v);
    if (list == nullptr) throw ConfigError(key, "expected an array");
    out.clear();
    for (const auto& s : *list) out.push_back(as_string(key, s));
  }

 private:
  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : (base_ / path).lexically_normal();
  }
  const ConfigTable& t_;
  std::filesystem::path base_;
};

json scalar_json(const ConfigScalar& s) {
  return std::visit([](const auto& v) { return json(v); }, s);
}

}  // namespace

PipelineConfig config_from_table(const ConfigTable& table, const std::filesystem::path& base_dir) {
  for (const auto& [key, value] : table) {
    if (!schema().count(key)) throw ConfigError(key, "unknown key");
  }
  PipelineConfig cfg;
  const Reader r(table, base_dir);

  const auto* seed = r.find("seed");
  if (seed == nullptr) throw ConfigError("seed", "required key is missing");
  const auto seed_value = as_int("seed", scalar("seed", *seed));
  if (seed_value < 0) throw ConfigError("seed", "must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed_value);

  r.path("paths.corpus", cfg.paths.corpus);
  r.path("paths.gazetteer", cfg.paths.gazetteer);
  r.path("paths.zones", cfg.paths.zones);
  r.path("paths.lexicon", cfg.paths.lexicon);
  r.path("paths.blocklist", cfg.paths.blocklist);
  r.path("paths.annotations", cfg.paths.annotations);
  r.path("paths.ground_truth", cfg.paths.ground_truth);
  r.path("paths.theme_map", cfg.paths.theme_map);
  cfg.paths.output_dir = (base_dir / cfg.paths.output_dir).lexically_normal();
  r.path("paths.output_dir", cfg.paths.output_dir);
  for (const char* required : {"paths.corpus", "paths.gazetteer", "paths.zones"}) {
    if (r.find(required) == nullptr) throw ConfigError(required, "required key is missing");
  }
  if (const auto* v = r.find("paths.corpus_format")) {
    try {
      cfg.paths.corpus_format = parse_corpus_format(as_string("paths.corpus_format", scalar("paths.corpus_format", *v)));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError("paths.corpus_format", e.what());
    }
  }

  if (const auto* v = r.find("dedup.min_shared_fraction")) {
    const double f = as_double("dedup.min_shared_fraction", scalar("dedup.min_shared_fraction", *v));
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("dedup.min_shared_fraction", "must be in (0, 1]");
    cfg.dedup.min_shared_fraction = f;
  }
  r.positive("dedup.min_sentence_words", cfg.dedup.min_sentence_words);
  r.positive("dedup.boilerplate_doc_count", cfg.dedup.boilerplate_doc_count);

  r.positive("geoparse.max_distinct_mentions", cfg.max_distinct_mentions);
  r.string_list("geoparse.broad_mentions", cfg.broad_mentions);

  r.positive("vocabulary.max_size", cfg.vocabulary.max_size);
  r.positive("vocabulary.min_count", cfg.vocabulary.min_count);

  r.positive("umap.dim", cfg.umap.dim);
  r.positive("umap.n_neighbors", cfg.umap.n_neighbors);
  r.positive("umap.epochs", cfg.umap.epochs);
  r.positive_real("umap.min_dist", cfg.umap.min_dist);
  r.positive_real("umap.spread", cfg.umap.spread);
  r.positive_real("umap.learning_rate", cfg.umap.learning_rate);
  r.positive_real("umap.repulsion_strength", cfg.umap.repulsion_strength);
  r.positive("umap.negative_sample_rate", cfg.umap.negative_sample_rate);
  if (cfg.umap.n_neighbors < 2) throw ConfigError("umap.n_neighbors", "must be at least 2");

  r.positive("hdbscan.min_cluster_size", cfg.hdbscan.min_cluster_size);
  r.positive("hdbscan.min_samples", cfg.hdbscan.min_samples);
  if (cfg.hdbscan.min_cluster_size < 2) {
    throw ConfigError("hdbscan.min_cluster_size", "must be at least 2");
  }

  if (const auto* v = r.find("evaluate.outlier_policy")) {
    const auto policy = as_string("evaluate.outlier_policy", scalar("evaluate.outlier_policy", *v));
    if (policy == "treat_as_cluster") {
      cfg.outlier_policy = OutlierPolicy::treat_as_cluster;
    } else if (policy == "ignore_double_noise") {
      cfg.outlier_policy = OutlierPolicy::ignore_double_noise;
    } else {
      throw ConfigError("evaluate.outlier_policy",
                        "expected treat_as_cluster or ignore_double_noise, got '" + policy + "'");
    }
  }
  r.positive("report.top_terms", cfg.top_terms);
  r.positive_list("grid.vocab_sizes", cfg.grid_vocab_sizes);
  r.positive_list("grid.umap_dims", cfg.grid_umap_dims);
  r.positive_list("grid.umap_neighbors", cfg.grid_umap_neighbors);

  json synth = json::object();
  for (const auto& name : kSynthKeys) {
    if (const auto* v = r.find("synth." + name)) synth[name] = scalar_json(scalar("synth." + name, *v));
  }
  synth["seed"] = cfg.seed;
  try {
    cfg.synth = synth_spec_from_json(synth);
  } catch (const Error& e) {
    throw ConfigError("synth", e.what());
  }
  cfg.umap.seed = cfg.seed;
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_table(parse_config_text(buffer.str()), path.parent_path());
}

json to_json(const PipelineConfig& c) {
  auto opt = [](const std::optional<std::filesystem::path>& p) {
    return p ? json(p->string()) : json(nullptr);
  };
  return {
      {"seed", c.seed},
      {"paths",
       {{"corpus", c.paths.corpus.string()},
        {"corpus_format", c.paths.corpus_format == CorpusFormat::csv ? "csv" : "jsonl"},
        {"gazetteer", c.paths.gazetteer.string()},
        {"zones", c.paths.zones.string()},
        {"lexicon", opt(c.paths.lexicon)},
        {"blocklist", opt(c.paths.blocklist)},
        {"annotations", opt(c.paths.annotations)},
        {"ground_truth", opt(c.paths.ground_truth)},
        {"theme_map", opt(c.paths.theme_map)},
        {"output_dir", c.paths.output_dir.string()}}},
      {"dedup",
       {{"min_shared_fraction", c.dedup.min_shared_fraction},
        {"min_sentence_words", c.dedup.min_sentence_words},
        {"boilerplate_doc_count", c.dedup.boilerplate_doc_count}}},
      {"geoparse",
       {{"max_distinct_mentions", c.max_distinct_mentions}, {"broad_mentions", c.broad_mentions}}},
      {"vocabulary", {{"max_size", c.vocabulary.max_size}, {"min_count", c.vocabulary.min_count}}},
      {"umap", to_json(c.umap)},
      {"hdbscan",
       {{"min_cluster_size", c.hdbscan.min_cluster_size},
        {"min_samples", c.hdbscan.min_samples}}},
      {"evaluate",
       {{"outlier_policy", c.outlier_policy == OutlierPolicy::treat_as_cluster
                               ? "treat_as_cluster"
                               : "ignore_double_noise"}}},
      {"report", {{"top_terms", c.top_terms}}},
      {"grid",
       {{"vocab_sizes", c.grid_vocab_sizes},
        {"umap_dims", c.grid_umap_dims},
        {"umap_neighbors", c.grid_umap_neighbors}}},
      {"synth", to_json(c.synth)}};
}

}  // namespace newsloc
