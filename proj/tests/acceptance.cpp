// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any fails. Always runs single-threaded.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <omp.h>

#include "newsloc/characterise.hpp"
#include "newsloc/config.hpp"
#include "newsloc/csv.hpp"
#include "newsloc/evaluate.hpp"
#include "newsloc/hdbscan.hpp"
#include "newsloc/log.hpp"
#include "newsloc/pipeline.hpp"
#include "newsloc/synthgen.hpp"
#include "newsloc/umap.hpp"
#include "support.hpp"

using namespace newsloc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr auto kSerial = kernels::Exec::serial;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// ---------------------------------------------------------------------------

Outcome dedup_oracle_equivalence() {
  double elapsed = 0;
  std::size_t mismatches = 0, groups = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto corpus = fixtures::dedup_corpus(1000 + seed, 50 + (seed * 37) % 151);
    const auto t0 = Clock::now();
    const auto result = dedup(corpus, {0.5, 10, 20, kSerial});
    elapsed += seconds_since(t0);
    const auto oracle = fixtures::dedup_oracle(corpus);
    std::set<std::string> kept;
    for (const auto& a : result.unique) kept.insert(a.id);
    std::map<std::string, std::set<std::string>> got;
    for (const auto& g : result.report.duplicate_groups) {
      got[g.kept_id] = {g.dropped_ids.begin(), g.dropped_ids.end()};
    }
    groups += got.size();
    mismatches += kept != oracle.kept || got != oracle.groups;
  }
  return {mismatches == 0 && elapsed < 5.0,
          fmt("50 corpora, %zu duplicate groups, %zu mismatches, dedup time %.2f s", groups, mismatches,
              elapsed)};
}

Outcome geoparse_correctness() {
  SynthSpec spec;
  const auto synth = generate(spec);
  const auto gaz = build_gazetteer(synth.gazetteer);
  const ZoneIndex zones(synth.zones);
  const auto broad = Blocklist::defaults();
  std::map<std::string, std::vector<LocationMention>> found;
  for (const auto& a : synth.articles) {
    auto ms = find_mentions(a, gaz);
    resolve(ms, gaz, broad);
    assign_zones(ms, gaz, zones);
    found[a.id] = std::move(ms);
  }
  std::size_t hit = 0;
  for (const auto& p : synth.mentions) {
    for (const auto& m : found.at(p.article_id)) {
      if (m.field == p.field && m.span == p.span && m.zone_id == p.zone_id) {
        ++hit;
        break;
      }
    }
  }
  const double rate = static_cast<double>(hit) / static_cast<double>(synth.mentions.size());

  // Random points over and around the zone grid.
  std::mt19937_64 rng(2024);
  const double pad = spec.zone_size_deg;
  std::uniform_real_distribution<double> lat(spec.origin_lat - pad,
                                             spec.origin_lat + spec.grid_rows * spec.zone_size_deg + pad);
  std::uniform_real_distribution<double> lon(spec.origin_lon - pad,
                                             spec.origin_lon + spec.grid_cols * spec.zone_size_deg + pad);
  std::size_t agree = 0;
  for (int i = 0; i < 1000; ++i) {
    const GeoPoint p{lat(rng), lon(rng)};
    std::optional<std::string> want;
    for (const auto& z : zones.zones()) {
      if (fixtures::winding_number(p, z.ring) != 0) {
        want = z.id;
        break;
      }
    }
    agree += zones.assign(p) == want;
  }
  return {rate >= 0.99 && agree == 1000,
          fmt("%zu/%zu planted mentions recovered (%.2f%%), point-in-polygon %zu/1000", hit,
              synth.mentions.size(), 100 * rate, agree)};
}

SparseVector dense(const std::vector<double>& d) {
  SparseVector v;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > 0) {
      v.indices.push_back(static_cast<std::uint32_t>(i));
      v.values.push_back(d[i]);
    }
  }
  return v;
}

Outcome hellinger_metric() {
  const double identity = hellinger(dense({1, 2, 3}), dense({1, 2, 3}));
  const double disjoint = hellinger(dense({1, 0}), dense({0, 1}));
  const double derived = hellinger(dense({0.5, 0.5}), dense({0.25, 0.75}));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = -INFINITY;
  for (int t = 0; t < 1000; ++t) {
    std::vector<SparseVector> v;
    const std::size_t n = 2 + rng() % 20;
    for (int k = 0; k < 3; ++k) {
      std::vector<double> d(n);
      for (auto& x : d) x = rng() % 4 ? u(rng) : 0.0;
      d[rng() % n] += 0.1;
      v.push_back(dense(d));
    }
    worst = std::max(worst, hellinger(v[0], v[2]) - hellinger(v[0], v[1]) - hellinger(v[1], v[2]));
  }
  const bool ok = std::abs(identity) < 1e-12 && std::abs(disjoint - 1.0) < 1e-12 &&
                  std::abs(derived - 0.18460) <= 1e-4 && worst <= 1e-9;
  return {ok, fmt("identity %.1e, disjoint %.12f, derived %.6f, worst triangle excess %.2e", identity,
                  disjoint, derived, worst)};
}

// Two blobs of count documents over disjoint vocabularies.
std::pair<std::vector<std::string>, std::vector<SparseVector>> document_blobs(std::size_t per_blob,
                                                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> ids;
  std::vector<SparseVector> vecs;
  for (int blob = 0; blob < 2; ++blob) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      std::map<std::uint32_t, double> counts;
      for (int t = 0; t < 25; ++t) counts[static_cast<std::uint32_t>(blob * 30 + rng() % 30)] += 1.0;
      SparseVector v;
      for (auto [k, c] : counts) {
        v.indices.push_back(k);
        v.values.push_back(c);
      }
      ids.push_back("d" + std::to_string(ids.size()));
      vecs.push_back(v);
    }
  }
  return {ids, vecs};
}

Outcome umap_sanity() {
  const auto [ids, vecs] = document_blobs(300, 7);
  UmapParams p;
  p.seed = 1;
  const auto t0 = Clock::now();
  const auto e = umap_reduce(ids, vecs, p, kSerial);
  const double elapsed = seconds_since(t0);
  const auto again = umap_reduce(ids, vecs, p, kSerial);

  const auto knn = hellinger_knn(vecs, 6, kSerial);
  std::size_t kept = 0;
  const std::size_t n = ids.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) d.emplace_back(fixtures::dist(e.coords, i, j), j);
    }
    std::partial_sort(d.begin(), d.begin() + 5, d.end());
    for (std::size_t a = 1; a < 6; ++a) {
      for (std::size_t b = 0; b < 5; ++b) kept += d[b].second == knn.index(i, a);
    }
  }
  const double score = static_cast<double>(kept) / static_cast<double>(n * 5);
  const bool same = again.coords == e.coords;
  return {score >= 0.9 && same && elapsed < 60.0,
          fmt("5-NN preserved %.3f, identical rerun %s, %zu points x %zu epochs in %.1f s", score,
              same ? "yes" : "no", n, p.epochs, elapsed)};
}

Outcome hdbscan_oracle_equivalence() {
  std::size_t mismatches = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t per = 10 + (seed * 13) % 90;
    const auto b = fixtures::gaussian_blobs({{0, 0}, {5, 2}, {1, 6}}, per, 1.0 + 0.05 * seed, seed);
    const std::size_t ms = 1 + seed % 7;
    const auto core = kernels::core_distances(b.points, ms, kSerial);
    const auto linkage =
        single_linkage(kernels::mutual_reachability_mst(b.points, core, kSerial), b.points.rows());
    const auto got = cophenetic_matrix(linkage, b.points.rows());
    const auto want = fixtures::oracle_single_linkage_cophenetic(
        fixtures::oracle_mutual_reachability(b.points, ms));
    for (std::size_t i = 0; i < got.rows(); ++i) {
      for (std::size_t j = 0; j < got.rows(); ++j) mismatches += std::abs(got(i, j) - want(i, j)) > 1e-12;
    }
  }
  const auto blobs = fixtures::gaussian_blobs({{0, 0}, {20, 0}}, 300, 1.0, 17);
  const auto model = hdbscan_fit(blobs.points, {250, 5}, kSerial);
  const double ari = fixtures::adjusted_rand_index(model.labels, blobs.truth);
  return {mismatches == 0 && model.n_clusters() == 2 && ari >= 0.99,
          fmt("20 fixtures, %zu cophenetic mismatches; two blobs -> %zu clusters, ARI %.4f", mismatches,
              model.n_clusters(), ari)};
}

Outcome soft_membership_contract() {
  std::size_t points = 0, bad_sum = 0, bad_argmax = 0, fixtures_run = 0;
  auto check = [&](const Matrix& pts, const HdbscanParams& hp) {
    const auto model = hdbscan_fit(pts, hp, kSerial);
    std::vector<std::string> ids(pts.rows());
    const auto mem = soft_memberships(model, pts, ids, kSerial);
    for (std::size_t i = 0; i < mem.size(); ++i) {
      double s = 0;
      for (double x : mem[i].probs) s += x;
      bad_sum += std::abs(s - 1.0) > 1e-9;
      if (model.labels[i] >= 0) bad_argmax += argmax(mem[i].probs) != static_cast<std::size_t>(model.labels[i]);
    }
    points += mem.size();
    ++fixtures_run;
  };
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto b = fixtures::gaussian_blobs({{0, 0}, {5, 2}, {1, 6}}, 40 + seed * 7, 1.0 + 0.05 * seed, seed);
    check(b.points, {15 + seed % 10, 1 + seed % 7});
  }
  check(fixtures::gaussian_blobs({{0, 0}, {20, 0}}, 300, 1.0, 17).points, {250, 5});
  return {bad_sum == 0 && bad_argmax == 0,
          fmt("%zu fixtures, %zu points: %zu bad sums, %zu argmax mismatches", fixtures_run, points, bad_sum,
              bad_argmax)};
}

Outcome location_profile_correctness() {
  std::mt19937_64 rng(8);
  std::exponential_distribution<double> ex(1.0);
  double worst = 0.0;
  std::size_t bound_violations = 0, profiles = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng() % 8, n_articles = 5 + rng() % 60;
    std::vector<ArticleMembership> rows;
    for (std::size_t a = 0; a < n_articles; ++a) {
      std::vector<double> p(k);
      double s = 0;
      for (auto& x : p) s += (x = ex(rng));
      for (auto& x : p) x /= s;
      rows.push_back({"a" + std::to_string(a), p});
    }
    const MembershipTable table(rows);
    std::vector<std::pair<std::string, std::vector<LocationMention>>> mentions;
    for (const auto& r : rows) {
      std::vector<LocationMention> ms;
      for (std::size_t m = 0, nm = rng() % 4; m < nm; ++m) {
        LocationMention lm;
        lm.article_id = r.article_id;
        lm.surface = "Place";
        lm.entry_id = "e";
        lm.zone_id = "Z" + std::to_string(rng() % 6);
        ms.push_back(lm);
      }
      mentions.emplace_back(r.article_id, ms);
    }
    const auto index = zone_mention_index(mentions, {});
    auto brute = [&](const std::set<std::string>& ids) {
      std::vector<double> out(k, 0.0);
      for (const auto& r : rows) {
        if (!ids.count(r.article_id)) continue;
        for (std::size_t c = 0; c < k; ++c) out[c] += r.probs[c];
      }
      for (auto& x : out) x /= static_cast<double>(ids.size());
      return out;
    };
    auto compare = [&](const std::optional<LocationProfile>& p, const std::set<std::string>& ids) {
      if (!p) return;
      ++profiles;
      const auto want = brute(ids);
      for (std::size_t c = 0; c < k; ++c) {
        worst = std::max(worst, std::abs(p->probs[c] - want[c]));
        double lo = 1, hi = 0;
        for (const auto& r : rows) {
          if (!ids.count(r.article_id)) continue;
          lo = std::min(lo, r.probs[c]);
          hi = std::max(hi, r.probs[c]);
        }
        bound_violations += p->probs[c] < lo - 1e-15 || p->probs[c] > hi + 1e-15;
      }
    };
    for (int z = 0; z < 6; ++z) {
      const std::string zone = "Z" + std::to_string(z);
      std::set<std::string> ids;
      for (const auto& [id, ms] : mentions) {
        for (const auto& m : ms) {
          if (m.zone_id == zone) ids.insert(id);
        }
      }
      compare(location_profile(zone, index, table), ids);
    }
    const Neighbourhood hood{"Hood", {"Z0", "Z1", "Z2"}};
    std::set<std::string> ids;
    for (const auto& [id, ms] : mentions) {
      for (const auto& m : ms) {
        if (m.zone_id == "Z0" || m.zone_id == "Z1" || m.zone_id == "Z2") ids.insert(id);
      }
    }
    compare(neighbourhood_profile(hood, index, table), ids);
  }
  return {worst <= 1e-12 && bound_violations == 0,
          fmt("%zu profiles, max deviation %.2e, %zu convexity violations", profiles, worst,
              bound_violations)};
}

// ---------------------------------------------------------------------------
// Criteria 8 and 9 share one pipeline run.

struct EndToEnd {
  fs::path dir;
  double seconds = 0;
  std::string error;
};

PipelineConfig synth_config(const fs::path& dir) {
  auto cfg = load_config(fs::path(NEWSLOC_SOURCE_DIR) / "configs" / "example_synth.toml");
  cfg.paths.corpus = dir / "data/corpus.jsonl";
  cfg.paths.gazetteer = dir / "data/gazetteer.csv";
  cfg.paths.zones = dir / "data/zones.geojson";
  cfg.paths.annotations = dir / "data/annotations.csv";
  cfg.paths.ground_truth = dir / "data/ground_truth.json";
  cfg.paths.output_dir = dir / "run";
  return cfg;
}

const EndToEnd& end_to_end() {
  static const EndToEnd run = [] {
    EndToEnd r;
    r.dir = fixtures::temp_dir("acceptance_e2e");
    const auto t0 = Clock::now();
    try {
      Pipeline p(synth_config(r.dir), {kSerial, false});
      for (Stage s : {Stage::synth, Stage::dedup, Stage::geoparse, Stage::cluster, Stage::profile,
                      Stage::evaluate}) {
        p.run(s);
      }
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

std::map<std::string, int> read_labels(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  csv::Reader reader(in);
  std::vector<std::string> row;
  reader.next(row);
  std::map<std::string, int> out;
  while (reader.next(row)) {
    if (row.size() == 2) out[row[0]] = std::stoi(row[1]);
  }
  return out;
}

// Planted topic -> cluster holding most of its hard-labelled articles.
std::map<std::size_t, int> topic_clusters(const nlohmann::json& truth, const std::map<std::string, int>& labels) {
  std::map<std::size_t, std::map<int, int>> votes;
  for (const auto& [id, label] : labels) {
    if (label >= 0) ++votes[truth.at("articles").at(id).at("topic").get<std::size_t>()][label];
  }
  std::map<std::size_t, int> out;
  for (const auto& [topic, v] : votes) {
    out[topic] = std::max_element(v.begin(), v.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
  }
  return out;
}

Outcome planted_topic_recovery() {
  const auto& r = end_to_end();
  if (!r.error.empty()) return {false, "pipeline failed: " + r.error};
  const auto metrics = nlohmann::json::parse(slurp(r.dir / "run/evaluate/metrics.json"));
  const double f1 = metrics.at("macro_f1").get<double>();
  const auto truth = nlohmann::json::parse(slurp(r.dir / "data/ground_truth.json"));
  const auto labels = read_labels(r.dir / "run/cluster/labels.csv");
  const auto mapping = topic_clusters(truth, labels);

  std::map<std::string, std::vector<double>> zone_profiles;
  {
    std::ifstream in(r.dir / "run/profile/zones.csv", std::ios::binary);
    for (auto& p : read_profiles_csv(in)) zone_profiles[p.location_id] = p.probs;
  }
  const std::size_t n_topics = truth.at("topics").size();
  if (mapping.size() != n_topics) {
    return {false, fmt("only %zu of %zu topics own a cluster", mapping.size(), n_topics)};
  }

  // Per zone: recovered mass of each topic's cluster against the zone's
  // planted affinity row, ranked across topics.
  double zone_sum = 0, zone_min = 1;
  for (const auto& [zone, probs] : zone_profiles) {
    std::vector<double> planted, recovered;
    for (std::size_t t = 0; t < n_topics; ++t) {
      planted.push_back(truth.at("affinity").at(zone).at(t).get<double>());
      recovered.push_back(probs.at(static_cast<std::size_t>(mapping.at(t))));
    }
    const double rho = spearman_rho(planted, recovered);
    zone_sum += rho;
    zone_min = std::min(zone_min, rho);
  }
  const double mean_rho = zone_sum / static_cast<double>(zone_profiles.size());

  // Same pairing ranked across zones, one value per topic; reported only.
  double topic_sum = 0;
  for (std::size_t t = 0; t < n_topics; ++t) {
    std::vector<double> planted, recovered;
    for (const auto& [zone, probs] : zone_profiles) {
      planted.push_back(truth.at("affinity").at(zone).at(t).get<double>());
      recovered.push_back(probs.at(static_cast<std::size_t>(mapping.at(t))));
    }
    topic_sum += spearman_rho(planted, recovered);
  }
  return {f1 >= 0.90 && mean_rho >= 0.8 && r.seconds < 300.0,
          fmt("macro-F1 %.4f, mean per-zone rho %.3f (min %.3f, %zu zones), per-topic mean %.3f, %.1f s "
              "single-threaded",
              f1, mean_rho, zone_min, zone_profiles.size(), topic_sum / static_cast<double>(n_topics),
              r.seconds)};
}

Outcome spearman_harness() {
  const auto& r = end_to_end();
  if (!r.error.empty()) return {false, "pipeline failed: " + r.error};
  const auto truth = nlohmann::json::parse(slurp(r.dir / "data/ground_truth.json"));
  const auto mapping = topic_clusters(truth, read_labels(r.dir / "run/cluster/labels.csv"));
  const auto crime_topic = truth.at("crime_topic").get<std::size_t>();
  if (!mapping.count(crime_topic)) return {false, "crime topic has no cluster"};
  const int crime_cluster = mapping.at(crime_topic);

  std::ifstream in(r.dir / "run/evaluate/correlation.csv", std::ios::binary);
  csv::Reader reader(in);
  std::vector<std::string> row;
  reader.next(row);
  std::vector<std::pair<double, int>> ranked;
  while (reader.next(row)) {
    if (row.size() >= 2) ranked.emplace_back(std::stod(row[1]), std::stoi(row[0]));
  }
  if (ranked.empty()) return {false, "empty correlation report"};
  std::stable_sort(ranked.begin(), ranked.end(), [](auto& a, auto& b) { return a.first > b.first; });
  const bool top = ranked.front().second == crime_cluster;
  std::string listing;
  for (std::size_t i = 0; i < std::min<std::size_t>(5, ranked.size()); ++i) {
    listing += fmt("%sC%d=%.2f", i ? " " : "", ranked[i].second, ranked[i].first);
  }
  return {top, fmt("crime topic -> C%d; top by rho: %s", crime_cluster, listing.c_str())};
}

Outcome grid_harness() {
  std::vector<std::string> tables;
  double elapsed = 0;
  for (int run = 0; run < 2; ++run) {
    const auto dir = fixtures::temp_dir("acceptance_grid_" + std::to_string(run));
    auto cfg = synth_config(dir);
    const auto t0 = Clock::now();
    try {
      Pipeline p(cfg, {kSerial, false});
      p.run(Stage::synth);
      p.run(Stage::grid);
    } catch (const std::exception& e) {
      return {false, std::string("grid failed: ") + e.what()};
    }
    elapsed += seconds_since(t0);
    tables.push_back(slurp(dir / "run/grid/grid.csv"));
  }
  std::istringstream in(tables[0]);
  std::string header, line;
  std::getline(in, header);
  std::vector<double> scores;
  std::size_t errors = 0;
  while (std::getline(in, line)) {
    scores.push_back(std::stod(line.substr(0, line.find(','))));
    errors += line.back() != ',';
  }
  const bool sorted = std::is_sorted(scores.rbegin(), scores.rend());
  const bool ok = header == "macro_f1,n_clusters,umap_d,umap_neighbors,vocab,error" && scores.size() == 8 &&
                  sorted && tables[0] == tables[1] && errors == 0;
  return {ok, fmt("%zu rows, %s, %zu failed rows, runs identical: %s, %.1f s", scores.size(),
                  sorted ? "sorted" : "NOT sorted", errors, tables[0] == tables[1] ? "yes" : "no", elapsed)};
}

Outcome metric_unit_values() {
  const double f1 = macro_f1({2, 1, 6, 1}).macro;
  const double up = spearman_rho({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5});
  const double down = spearman_rho({1, 2, 3, 4, 5}, {5, 4, 3, 2, 1});
  const double mid = spearman_rho({1, 2, 3, 4, 5}, {2, 1, 4, 3, 5});
  const bool ok = std::abs(f1 - 16.0 / 21.0) <= 1e-12 && up == 1.0 && down == -1.0 && mid == 0.8;
  return {ok, fmt("macro-F1 %.17g (16/21 = %.17g); rho %.17g, %.17g, %.17g", f1, 16.0 / 21.0, up, down, mid)};
}

}  // namespace

int main() {
  omp_set_num_threads(1);
  setenv("NL_LOG", "warn", 0);
  newsloc::init_logging();

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"dedup oracle equivalence", dedup_oracle_equivalence},
      {"geoparse correctness", geoparse_correctness},
      {"hellinger metric", hellinger_metric},
      {"umap sanity", umap_sanity},
      {"hdbscan oracle equivalence", hdbscan_oracle_equivalence},
      {"soft membership contract", soft_membership_contract},
      {"location profile correctness", location_profile_correctness},
      {"planted-topic recovery", planted_topic_recovery},
      {"spearman harness", spearman_harness},
      {"grid harness", grid_harness},
      {"metric unit values", metric_unit_values},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %2zu %-30s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
