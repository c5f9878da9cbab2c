#include "newsloc/pipeline.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "newsloc/characterise.hpp"
#include "newsloc/csv.hpp"
#include "newsloc/geoparse.hpp"
#include "newsloc/preprocess.hpp"
#include "newsloc/umap.hpp"

namespace newsloc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 10> kStageNames = {
    "synth", "ingest", "dedup", "geoparse", "vectorize", "cluster", "profile", "evaluate", "grid",
    "report"};

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

json file_stamp(const std::optional<fs::path>& path) {
  if (!path) return nullptr;
  return hex(hash_file(*path));
}

std::vector<Article> load_articles(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return read_corpus_jsonl(in);
}

std::map<std::string, std::vector<LocationMention>> load_mentions(const fs::path& path) {
  std::map<std::string, std::vector<LocationMention>> out;
  for (const auto& j : read_jsonl(path)) out[j.at("article_id").get<std::string>()] = mentions_from_json(j);
  return out;
}

struct TokenDocs {
  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> tokens;
};

TokenDocs load_tokens(const fs::path& path) {
  TokenDocs docs;
  for (const auto& j : read_jsonl(path)) {
    docs.ids.push_back(j.at("id").get<std::string>());
    docs.tokens.push_back(j.at("tokens").get<std::vector<std::string>>());
  }
  return docs;
}

LabelLookup load_labels(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  csv::Reader reader(in);
  std::vector<std::string> row;
  LabelLookup out;
  reader.next(row);
  while (reader.next(row)) {
    if (row.size() != 2) continue;
    out[row[0]] = std::stoi(row[1]);
  }
  return out;
}

// Pairs whose articles were removed upstream cannot be scored.
std::vector<AnnotatedPair> scorable_pairs(const std::vector<AnnotatedPair>& pairs,
                                          const LabelLookup& labels) {
  std::vector<AnnotatedPair> out;
  for (const auto& p : pairs) {
    if (labels.count(p.article_a) && labels.count(p.article_b)) out.push_back(p);
  }
  if (out.size() < pairs.size()) {
    spdlog::warn("evaluate: {} of {} annotated pairs reference articles without a label; skipped",
                 pairs.size() - out.size(), pairs.size());
  }
  return out;
}

}  // namespace

std::optional<Stage> parse_stage(std::string_view name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  }
  return std::nullopt;
}

std::string_view to_string(Stage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_file(const fs::path& path) { return fnv1a(read_text(path)); }

Pipeline::Pipeline(PipelineConfig config, PipelineOptions options)
    : config_(std::move(config)), options_(options) {}

fs::path Pipeline::out(std::string_view name) const { return config_.paths.output_dir / name; }

void Pipeline::run(Stage stage) { ensure(stage); }

std::vector<std::string> Pipeline::outputs(Stage stage) const {
  switch (stage) {
    case Stage::synth: return {};
    case Stage::ingest: return {"articles.jsonl"};
    case Stage::dedup: return {"dedup/unique.jsonl", "dedup/report.json"};
    case Stage::geoparse:
      return {"geoparse/mentions.jsonl", "geoparse/zone_counts.csv", "geoparse/neighbourhoods.json",
              "geoparse/rejected_gazetteer.json"};
    case Stage::vectorize:
      return {"vectorize/tokens.jsonl", "vectorize/vocabulary.json", "vectorize/vectors.jsonl",
              "vectorize/filtered.json"};
    case Stage::cluster:
      return {"cluster/embedding.csv",     "cluster/embedding.bin",      "cluster/labels.csv",
              "cluster/memberships.csv",   "cluster/condensed_tree.json", "cluster/hierarchy.dot",
              "cluster/hierarchy.json",    "cluster/top_terms.json"};
    case Stage::profile:
      return {"profile/theme_map.json", "profile/zones.csv", "profile/zones.json",
              "profile/neighbourhoods.csv", "profile/neighbourhoods.json"};
    case Stage::evaluate: return {"evaluate/metrics.json", "evaluate/correlation.csv"};
    case Stage::grid: return {"grid/grid.csv"};
    case Stage::report: return {"report/manifest.json"};
  }
  return {};
}

std::string Pipeline::stage_key(Stage stage, const std::vector<std::string>& upstream) const {
  const auto& c = config_;
  json params;
  switch (stage) {
    case Stage::synth:
      params = {{"spec", to_json(c.synth)},
                {"paths", {c.paths.corpus.string(), c.paths.gazetteer.string(), c.paths.zones.string(),
                           c.paths.annotations ? c.paths.annotations->string() : "",
                           c.paths.ground_truth ? c.paths.ground_truth->string() : ""}}};
      break;
    case Stage::ingest:
      params = {{"corpus", file_stamp(c.paths.corpus)},
                {"format", c.paths.corpus_format == CorpusFormat::csv ? "csv" : "jsonl"}};
      break;
    case Stage::dedup: params = to_json(c)["dedup"]; break;
    case Stage::geoparse:
      params = {{"gazetteer", file_stamp(c.paths.gazetteer)},
                {"zones", file_stamp(c.paths.zones)},
                {"blocklist", file_stamp(c.paths.blocklist)},
                {"broad", c.broad_mentions}};
      break;
    case Stage::vectorize:
      params = {{"vocabulary", to_json(c)["vocabulary"]},
                {"max_distinct_mentions", c.max_distinct_mentions},
                {"lexicon", file_stamp(c.paths.lexicon)}};
      break;
    case Stage::cluster:
      params = {{"umap", to_json(c.umap)},
                {"hdbscan", to_json(c)["hdbscan"]},
                {"top_terms", c.top_terms}};
      break;
    case Stage::profile:
      params = {{"theme_map", file_stamp(c.paths.theme_map)}, {"svg", options_.svg}};
      break;
    case Stage::evaluate:
      params = {{"annotations", file_stamp(c.paths.annotations)},
                {"policy", to_json(c)["evaluate"]},
                {"zones", file_stamp(c.paths.zones)}};
      break;
    case Stage::grid:
      params = {{"grid", to_json(c)["grid"]},
                {"annotations", file_stamp(c.paths.annotations)},
                {"umap", to_json(c.umap)},
                {"hdbscan", to_json(c)["hdbscan"]},
                {"min_count", c.vocabulary.min_count},
                {"policy", to_json(c)["evaluate"]}};
      break;
    case Stage::report: params = {{"svg", options_.svg}}; break;
  }
  json key = {{"stage", to_string(stage)}, {"params", params}, {"upstream", upstream}};
  return hex(fnv1a(key.dump()));
}

std::string Pipeline::ensure(Stage stage) {
  if (auto it = keys_.find(stage); it != keys_.end()) return it->second;
  std::vector<Stage> deps;
  switch (stage) {
    case Stage::synth:
    case Stage::ingest: break;
    case Stage::dedup: deps = {Stage::ingest}; break;
    case Stage::geoparse: deps = {Stage::dedup}; break;
    case Stage::vectorize: deps = {Stage::geoparse}; break;
    case Stage::cluster: deps = {Stage::vectorize}; break;
    case Stage::profile: deps = {Stage::cluster, Stage::geoparse}; break;
    case Stage::evaluate: deps = {Stage::cluster, Stage::profile}; break;
    case Stage::grid: deps = {Stage::vectorize}; break;
    case Stage::report:
      deps = {Stage::cluster, Stage::profile, Stage::evaluate};
      if (config_.paths.annotations) deps.push_back(Stage::grid);
      break;
  }
  std::vector<std::string> upstream;
  for (Stage d : deps) upstream.push_back(ensure(d));

  std::string key;
  try {
    key = stage_key(stage, upstream);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
  const fs::path stamp = out(".cache") / (std::string(to_string(stage)) + ".key");
  bool present = stage != Stage::synth || fs::exists(config_.paths.corpus);
  for (const auto& o : outputs(stage)) present = present && fs::exists(out(o));
  std::string previous;
  if (fs::exists(stamp)) previous = read_text(stamp);
  auto& stats = stats_[static_cast<std::size_t>(stage)];
  if (present && previous == key) {
    spdlog::info("{}: cache hit ({})", to_string(stage), key);
    ++stats.cache_hits;
  } else {
    if (!previous.empty() && previous != key) {
      spdlog::info("{}: cached outputs are stale, recomputing", to_string(stage));
    } else {
      spdlog::info("{}: computing", to_string(stage));
    }
    fs::remove(stamp);
    try {
      compute(stage);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
    write_text(stamp, key);
    ++stats.computed;
  }
  keys_[stage] = key;
  return key;
}

void Pipeline::compute(Stage stage) {
  switch (stage) {
    case Stage::synth: run_synth(); break;
    case Stage::ingest: run_ingest(); break;
    case Stage::dedup: run_dedup(); break;
    case Stage::geoparse: run_geoparse(); break;
    case Stage::vectorize: run_vectorize(); break;
    case Stage::cluster: run_cluster(); break;
    case Stage::profile: run_profile(); break;
    case Stage::evaluate: run_evaluate(); break;
    case Stage::grid: run_grid(); break;
    case Stage::report: run_report(); break;
  }
}

void Pipeline::run_synth() {
  const auto& p = config_.paths;
  if (!p.annotations || !p.ground_truth) {
    throw Error("paths.annotations and paths.ground_truth must be set to write a synthetic corpus");
  }
  const auto synth = generate(config_.synth);
  write_synth(synth, {p.corpus, p.gazetteer, p.zones, *p.annotations, *p.ground_truth});
  spdlog::info("synth: {} articles, {} gazetteer records, {} zones", synth.articles.size(),
               synth.gazetteer.size(), synth.zones.size());
}

void Pipeline::run_ingest() {
  const auto articles = load_corpus(config_.paths.corpus, config_.paths.corpus_format);
  auto out_file = open_out(out("articles.jsonl"));
  write_corpus_jsonl(out_file, articles);
  spdlog::info("ingest: {} articles", articles.size());
}

void Pipeline::run_dedup() {
  auto options = config_.dedup;
  options.exec = options_.exec;
  const auto result = dedup(load_articles(out("articles.jsonl")), options);
  {
    auto f = open_out(out("dedup/unique.jsonl"));
    write_corpus_jsonl(f, result.unique);
  }
  write_text(out("dedup/report.json"), to_json(result.report).dump(1) + "\n");
  spdlog::info("dedup: {} unique of {}", result.unique.size(), result.report.retrieved_count);
}

namespace {

Blocklist make_blocklist(const PipelineConfig& c) {
  return c.paths.blocklist ? load_blocklist(*c.paths.blocklist) : Blocklist(c.broad_mentions);
}

}  // namespace

void Pipeline::run_geoparse() {
  const auto articles = load_articles(out("dedup/unique.jsonl"));
  const auto gazetteer = build_gazetteer(load_gazetteer_records(config_.paths.gazetteer));
  const ZoneIndex zones(load_zones(config_.paths.zones));
  const auto blocklist = make_blocklist(config_);

  auto f = open_out(out("geoparse/mentions.jsonl"));
  std::vector<LocationMention> all;
  for (const auto& a : articles) {
    auto mentions = find_mentions(a, gazetteer);
    resolve(mentions, gazetteer, blocklist);
    assign_zones(mentions, gazetteer, zones);
    f << mentions_to_json(a.id, mentions).dump() << "\n";
    all.insert(all.end(), mentions.begin(), mentions.end());
  }
  {
    auto counts = open_out(out("geoparse/zone_counts.csv"));
    csv::write_row(counts, {"zone_id", "mentions"});
    for (const auto& [zone, n] : zone_mention_counts(all, blocklist)) {
      csv::write_row(counts, {zone, std::to_string(n)});
    }
  }
  json hoods = json::array();
  for (const auto& n : rollup_neighbourhoods(zones.zones())) {
    hoods.push_back({{"name", n.name}, {"zones", n.zone_ids}});
  }
  write_text(out("geoparse/neighbourhoods.json"), hoods.dump(1) + "\n");
  json rejected = json::array();
  for (const auto& r : gazetteer.rejected()) {
    rejected.push_back({{"index", r.index}, {"id", r.id}, {"reason", r.reason}});
  }
  write_text(out("geoparse/rejected_gazetteer.json"), rejected.dump(1) + "\n");
  spdlog::info("geoparse: {} mentions in {} articles", all.size(), articles.size());
}

void Pipeline::run_vectorize() {
  const auto articles = load_articles(out("dedup/unique.jsonl"));
  const auto by_article = load_mentions(out("geoparse/mentions.jsonl"));
  const auto blocklist = make_blocklist(config_);
  const auto lexicon = config_.paths.lexicon ? load_lexicon(*config_.paths.lexicon)
                                             : FunctionWordLexicon::builtin();
  std::vector<std::vector<LocationMention>> mentions;
  for (const auto& a : articles) {
    auto it = by_article.find(a.id);
    mentions.push_back(it == by_article.end() ? std::vector<LocationMention>{} : it->second);
  }
  const auto kept = filter_articles(articles, mentions, blocklist, config_.max_distinct_mentions);

  TokenDocs docs;
  for (std::size_t i : kept) {
    const auto masked = mask_locations(articles[i], mentions[i], blocklist);
    docs.ids.push_back(articles[i].id);
    docs.tokens.push_back(pos_filter(masked.tokens, lexicon));
  }
  const auto vocab = build_vocabulary(docs.tokens, config_.vocabulary);
  {
    auto f = open_out(out("vectorize/tokens.jsonl"));
    for (std::size_t i = 0; i < docs.ids.size(); ++i) {
      f << json{{"id", docs.ids[i]}, {"tokens", docs.tokens[i]}}.dump() << "\n";
    }
  }
  {
    auto f = open_out(out("vectorize/vectors.jsonl"));
    for (std::size_t i = 0; i < docs.ids.size(); ++i) {
      f << json{{"id", docs.ids[i]}, {"tfidf", to_json(tfidf(docs.tokens[i], vocab, docs.ids.size()))}}.dump()
        << "\n";
    }
  }
  write_text(out("vectorize/vocabulary.json"), to_json(vocab).dump() + "\n");
  std::vector<std::string> dropped;
  std::size_t k = 0;
  for (std::size_t i = 0; i < articles.size(); ++i) {
    if (k < kept.size() && kept[k] == i) {
      ++k;
    } else {
      dropped.push_back(articles[i].id);
    }
  }
  write_text(out("vectorize/filtered.json"),
             json{{"kept", kept.size()}, {"dropped_ids", dropped}}.dump(1) + "\n");
  spdlog::info("vectorize: {} articles, vocabulary {}, {} dropped by the mention filter",
               kept.size(), vocab.size(), dropped.size());
}

void Pipeline::run_cluster() {
  std::vector<std::string> ids;
  std::vector<SparseVector> vectors;
  for (const auto& j : read_jsonl(out("vectorize/vectors.jsonl"))) {
    ids.push_back(j.at("id").get<std::string>());
    vectors.push_back(sparse_from_json(j.at("tfidf")));
  }
  const auto vocab = vocabulary_from_json(json::parse(read_text(out("vectorize/vocabulary.json"))));
  const auto embedding = umap_reduce(ids, vectors, config_.umap, options_.exec);
  fs::create_directories(out("cluster"));
  write_embedding_csv(out("cluster/embedding.csv"), embedding);
  write_embedding_binary(out("cluster/embedding.bin"), embedding, config_.umap);

  const auto model = hdbscan_fit(embedding.coords, config_.hdbscan, options_.exec);
  const auto memberships = soft_memberships(model, embedding.coords, ids, options_.exec);
  {
    auto f = open_out(out("cluster/labels.csv"));
    write_labels_csv(f, ids, model.labels);
  }
  {
    auto f = open_out(out("cluster/memberships.csv"));
    write_memberships_csv(f, memberships);
  }
  write_text(out("cluster/condensed_tree.json"), condensed_tree_json(model).dump() + "\n");
  const auto hierarchy = extract_hierarchy(model);
  write_text(out("cluster/hierarchy.dot"), to_dot(hierarchy));
  write_text(out("cluster/hierarchy.json"), to_json(hierarchy).dump(1) + "\n");
  json terms = json::object();
  for (std::size_t c = 0; c < model.n_clusters(); ++c) {
    json list = json::array();
    for (const auto& t : top_terms(static_cast<int>(c), memberships, vectors, vocab, config_.top_terms)) {
      list.push_back({{"term", t.term}, {"weight", t.weight}});
    }
    terms["C" + std::to_string(c)] = list;
  }
  write_text(out("cluster/top_terms.json"), terms.dump(1) + "\n");
  const auto noise = std::count(model.labels.begin(), model.labels.end(), -1);
  spdlog::info("cluster: {} clusters over {} articles, {} noise", model.n_clusters(), ids.size(), noise);
}

void Pipeline::run_profile() {
  std::vector<ArticleMembership> rows;
  {
    std::ifstream in(out("cluster/memberships.csv"), std::ios::binary);
    rows = read_memberships_csv(in);
  }
  const MembershipTable table(std::move(rows));
  const auto by_article = load_mentions(out("geoparse/mentions.jsonl"));
  std::vector<std::pair<std::string, std::vector<LocationMention>>> article_mentions;
  for (const auto& [id, mentions] : by_article) {
    if (table.find(id) != nullptr) article_mentions.emplace_back(id, mentions);
  }
  const auto index = zone_mention_index(article_mentions, make_blocklist(config_));
  const std::size_t n_clusters = table.width() == 0 ? 0 : table.width() - 1;

  ThemeMap themes;
  if (config_.paths.theme_map) {
    themes = theme_map_from_json(json::parse(read_text(*config_.paths.theme_map)));
  } else {
    themes = suggest_theme_map(hierarchy_from_dot(read_text(out("cluster/hierarchy.dot"))));
  }
  validate_theme_map(themes, n_clusters);
  write_text(out("profile/theme_map.json"), to_json(themes).dump(1) + "\n");

  std::vector<LocationProfile> zones;
  for (const auto& [zone, articles] : index) {
    if (auto p = profile_of_articles(zone, articles, table)) zones.push_back(std::move(*p));
  }
  std::vector<LocationProfile> hoods;
  for (const auto& j : json::parse(read_text(out("geoparse/neighbourhoods.json")))) {
    Neighbourhood n{j.at("name").get<std::string>(), j.at("zones").get<std::vector<std::string>>()};
    if (auto p = neighbourhood_profile(n, index, table)) hoods.push_back(std::move(*p));
  }
  export_profiles(out("profile"), "zones", zones, themes, options_.svg);
  export_profiles(out("profile"), "neighbourhoods", hoods, themes, options_.svg);
  spdlog::info("profile: {} zones, {} neighbourhoods, {} themes", zones.size(), hoods.size(),
               themes.size());
}

void Pipeline::run_evaluate() {
  const auto labels = load_labels(out("cluster/labels.csv"));
  json metrics = json::object();
  if (config_.paths.annotations) {
    const auto pairs = scorable_pairs(load_annotations(*config_.paths.annotations), labels);
    const auto confusion = pair_confusion(labels, pairs, config_.outlier_policy);
    const auto f1 = macro_f1(confusion);
    const auto partition = error_partition(labels, pairs);
    auto bucket = [](const ErrorBucket& b) {
      return json{{"size", b.size}, {"by_stratum", b.by_stratum}};
    };
    metrics = {{"pairs", pairs.size()},
               {"confusion",
                {{"tp", confusion.tp}, {"fp", confusion.fp}, {"tn", confusion.tn},
                 {"fn", confusion.fn}, {"excluded", confusion.excluded}}},
               {"f1_same", f1.f1_same},
               {"f1_diff", f1.f1_diff},
               {"macro_f1", f1.macro},
               {"flags",
                {{"same_unsupported", f1.same_unsupported}, {"diff_unsupported", f1.diff_unsupported},
                 {"same_zero", f1.same_zero}, {"diff_zero", f1.diff_zero}}},
               {"error_partition",
                {{"outlier", bucket(partition.outlier)}, {"same", bucket(partition.same)},
                 {"different", bucket(partition.different)}}}};
    spdlog::info("evaluate: macro-F1 {:.4f} over {} pairs", f1.macro, pairs.size());
  } else {
    spdlog::warn("evaluate: no annotations configured; skipping macro-F1");
  }

  std::map<std::string, std::vector<double>> zone_scores;
  {
    std::ifstream in(out("profile/zones.csv"), std::ios::binary);
    for (auto& p : read_profiles_csv(in)) zone_scores[p.location_id] = std::move(p.probs);
  }
  std::map<std::string, std::optional<double>> statistic;
  for (const auto& z : load_zones(config_.paths.zones)) {
    statistic[z.id] = z.crime_rate ? std::optional<double>(static_cast<double>(*z.crime_rate)) : std::nullopt;
  }
  const std::size_t n_clusters = zone_scores.empty() ? 0 : zone_scores.begin()->second.size() - 1;
  auto f = open_out(out("evaluate/correlation.csv"));
  try {
    const auto report = spearman_per_cluster(zone_scores, statistic, n_clusters);
    write_correlation_csv(f, report);
    metrics["correlation"] = {{"zones_used", report.zones_used},
                              {"zones_suppressed", report.zones_suppressed}};
  } catch (const Error& e) {
    spdlog::warn("evaluate: no correlation report: {}", e.what());
    write_correlation_csv(f, {});
  }
  write_text(out("evaluate/metrics.json"), metrics.dump(1) + "\n");
}

void Pipeline::run_grid() {
  if (!config_.paths.annotations) throw Error("the grid needs paths.annotations");
  const auto docs = load_tokens(out("vectorize/tokens.jsonl"));
  const auto annotations = load_annotations(*config_.paths.annotations);
  const auto evaluate = [&](const GridPoint& point) {
    VocabularyOptions vo{point.vocab_size, config_.vocabulary.min_count};
    const auto vocab = build_vocabulary(docs.tokens, vo);
    std::vector<SparseVector> vectors;
    for (const auto& t : docs.tokens) vectors.push_back(tfidf(t, vocab, docs.tokens.size()));
    auto params = config_.umap;
    params.dim = point.umap_dim;
    params.n_neighbors = point.umap_neighbors;
    const auto embedding = umap_reduce(docs.ids, vectors, params, options_.exec);
    const auto model = hdbscan_fit(embedding.coords, config_.hdbscan, options_.exec);
    LabelLookup labels;
    for (std::size_t i = 0; i < docs.ids.size(); ++i) labels[docs.ids[i]] = model.labels[i];
    const auto pairs = scorable_pairs(annotations, labels);
    const auto f1 = macro_f1(pair_confusion(labels, pairs, config_.outlier_policy));
    spdlog::info("grid: vocab {} d {} k {} -> macro-F1 {:.4f}, {} clusters", point.vocab_size,
                 point.umap_dim, point.umap_neighbors, f1.macro, model.n_clusters());
    return std::pair{f1.macro, model.n_clusters()};
  };
  const auto rows = grid_search(config_.grid_vocab_sizes, config_.grid_umap_dims,
                                config_.grid_umap_neighbors, evaluate);
  auto f = open_out(out("grid/grid.csv"));
  write_grid_csv(f, rows);
}

void Pipeline::run_report() {
  std::vector<std::pair<std::string, std::string>> files = {
      {"cluster/top_terms.json", "top_terms.json"},
      {"cluster/hierarchy.dot", "hierarchy.dot"},
      {"cluster/hierarchy.json", "hierarchy.json"},
      {"profile/theme_map.json", "theme_map.json"},
      {"profile/zones.csv", "profiles_zones.csv"},
      {"profile/zones.json", "profiles_zones.json"},
      {"profile/neighbourhoods.csv", "profiles_neighbourhoods.csv"},
      {"profile/neighbourhoods.json", "profiles_neighbourhoods.json"},
      {"evaluate/metrics.json", "metrics.json"},
      {"evaluate/correlation.csv", "correlation.csv"}};
  if (config_.paths.annotations) files.emplace_back("grid/grid.csv", "grid.csv");
  const fs::path dir = out("report");
  fs::create_directories(dir);
  json manifest = json::array();
  for (const auto& [src, dst] : files) {
    fs::copy_file(out(src), dir / dst, fs::copy_options::overwrite_existing);
    manifest.push_back(dst);
  }
  if (options_.svg) {
    for (const char* sub : {"zones_svg", "neighbourhoods_svg"}) {
      const auto from = out("profile") / sub;
      if (!fs::exists(from)) continue;
      fs::create_directories(dir / sub);
      fs::copy(from, dir / sub, fs::copy_options::overwrite_existing | fs::copy_options::recursive);
      manifest.push_back(std::string(sub) + "/");
    }
  }
  write_text(dir / "manifest.json", manifest.dump(1) + "\n");
  spdlog::info("report: {} artifacts in {}", manifest.size(), dir.string());
}

}  // namespace newsloc
