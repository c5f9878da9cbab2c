#include "newsloc/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <random>
#include <set>

#include "newsloc/csv.hpp"
#include "newsloc/error.hpp"
#include "newsloc/text.hpp"

namespace newsloc {

std::vector<AnnotatedPair> read_annotations_csv(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> row;
  std::vector<AnnotatedPair> out;
  if (!reader.next(row)) return out;
  if (row.size() != 3 || text::trim(row[0]) != "article_a" || text::trim(row[1]) != "article_b" ||
      text::trim(row[2]) != "stratum") {
    throw RecordError(reader.line(), "expected header article_a,article_b,stratum");
  }
  while (reader.next(row)) {
    if (row.size() == 1 && text::trim(row[0]).empty()) continue;
    if (row.size() != 3) throw RecordError(reader.line(), "expected 3 columns");
    AnnotatedPair p{std::string(text::trim(row[0])), std::string(text::trim(row[1])), Stratum::not_related};
    if (p.article_a.empty() || p.article_b.empty()) throw RecordError(reader.line(), "empty article id");
    if (p.article_a == p.article_b) throw RecordError(reader.line(), "pair of an article with itself");
    const auto s = text::trim(row[2]);
    if (s.size() != 1 || s[0] < '0' || s[0] > '3') {
      throw RecordError(reader.line(), "stratum must be 0-3, got '" + std::string(s) + "'");
    }
    p.stratum = static_cast<Stratum>(s[0] - '0');
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<AnnotatedPair> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open annotations " + path.string());
  return read_annotations_csv(in);
}

void write_annotations_csv(std::ostream& out, const std::vector<AnnotatedPair>& pairs) {
  csv::write_row(out, {"article_a", "article_b", "stratum"});
  for (const auto& p : pairs) {
    csv::write_row(out, {p.article_a, p.article_b, std::to_string(static_cast<int>(p.stratum))});
  }
}

std::vector<CandidatePair> sample_annotation_pairs(const std::vector<Article>& articles,
                                                   std::size_t n, double bias,
                                                   std::uint64_t seed) {
  const std::size_t m = articles.size();
  const std::size_t available = m < 2 ? 0 : m * (m - 1) / 2;
  if (n > available) {
    throw Error("cannot sample " + std::to_string(n) + " pairs from " + std::to_string(available));
  }
  if (bias < 0.0) throw Error("annotation bias must be non-negative");
  if (n == 0) return {};

  std::vector<std::set<std::string>> keywords(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& k : articles[i].keywords) keywords[i].insert(text::to_lower(text::trim(k)));
  }

  // Weighted sampling without replacement: keep the n largest log(u) / w.
  std::mt19937_64 rng(seed);
  using Keyed = std::pair<double, CandidatePair>;
  auto cmp = [](const Keyed& x, const Keyed& y) { return x.first > y.first; };
  std::priority_queue<Keyed, std::vector<Keyed>, decltype(cmp)> heap(cmp);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      std::size_t shared = 0;
      for (const auto& k : keywords[a]) shared += keywords[b].count(k);
      const double w = 1.0 + bias * static_cast<double>(shared);
      const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
      const double key = std::log(u) / w;
      if (heap.size() < n) {
        heap.push({key, {a, b, shared}});
      } else if (key > heap.top().first) {
        heap.pop();
        heap.push({key, {a, b, shared}});
      }
    }
  }
  std::vector<Keyed> picked;
  while (!heap.empty()) {
    picked.push_back(heap.top());
    heap.pop();
  }
  std::sort(picked.begin(), picked.end(), [](const Keyed& x, const Keyed& y) { return x.first > y.first; });
  std::vector<CandidatePair> out;
  for (auto& [key, pair] : picked) out.push_back(pair);
  return out;
}

namespace {

int label_of(const LabelLookup& labels, const std::string& id) {
  auto it = labels.find(id);
  if (it == labels.end()) throw Error("no cluster label for article " + id);
  return it->second;
}

double f1(std::size_t hit, std::size_t false_pos, std::size_t false_neg) {
  const double denom = 2.0 * static_cast<double>(hit) + static_cast<double>(false_pos + false_neg);
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(hit) / denom;
}

}  // namespace

PairConfusion pair_confusion(const LabelLookup& labels, const std::vector<AnnotatedPair>& pairs,
                             OutlierPolicy policy) {
  PairConfusion c;
  for (const auto& p : pairs) {
    const int a = label_of(labels, p.article_a);
    const int b = label_of(labels, p.article_b);
    if (a < 0 && b < 0 && policy == OutlierPolicy::ignore_double_noise) {
      ++c.excluded;
      continue;
    }
    const bool predicted_same = a == b;
    const bool expected_same = p.same_cluster_expected();
    if (predicted_same && expected_same) ++c.tp;
    else if (predicted_same) ++c.fp;
    else if (expected_same) ++c.fn;
    else ++c.tn;
  }
  return c;
}

MacroF1 macro_f1(const PairConfusion& c) {
  if (c.total() == 0) throw Error("macro_f1: no evaluated pairs");
  MacroF1 out;
  out.f1_same = f1(c.tp, c.fp, c.fn);
  out.f1_diff = f1(c.tn, c.fn, c.fp);
  out.macro = (out.f1_same + out.f1_diff) / 2.0;
  out.same_unsupported = c.tp + c.fn == 0;
  out.diff_unsupported = c.tn + c.fp == 0;
  out.same_zero = out.f1_same == 0.0;
  out.diff_zero = out.f1_diff == 0.0;
  return out;
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = static_cast<double>(i + j) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error("spearman_rho: inputs differ in length");
  if (x.size() < 3) throw Error("spearman_rho: need at least 3 values");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mean = (static_cast<double>(x.size()) + 1.0) / 2.0;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    cov += dx * dy;
    vx += dx * dx;
    vy += dy * dy;
  }
  if (vx == 0.0 || vy == 0.0) return 0.0;
  return std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
}

CorrelationReport spearman_per_cluster(
    const std::map<std::string, std::vector<double>>& zone_scores,
    const std::map<std::string, std::optional<double>>& zone_statistic, std::size_t n_clusters) {
  CorrelationReport report;
  std::vector<const std::vector<double>*> scores;
  std::vector<double> statistic;
  for (const auto& [zone, s] : zone_scores) {
    auto it = zone_statistic.find(zone);
    if (it == zone_statistic.end() || !it->second) {
      ++report.zones_suppressed;
      continue;
    }
    if (s.size() < n_clusters) throw Error("zone " + zone + " has too few cluster scores");
    scores.push_back(&s);
    statistic.push_back(*it->second);
  }
  report.zones_used = scores.size();
  if (scores.size() < 3) {
    throw Error("spearman_per_cluster: " + std::to_string(scores.size()) +
                " usable zones, need at least 3");
  }
  for (std::size_t c = 0; c < n_clusters; ++c) {
    std::vector<double> x;
    for (const auto* s : scores) x.push_back((*s)[c]);
    report.clusters.push_back({static_cast<int>(c), spearman_rho(x, statistic), x.size()});
  }
  return report;
}

void write_correlation_csv(std::ostream& out, const CorrelationReport& report) {
  csv::write_row(out, {"cluster_id", "rho", "n"});
  for (const auto& c : report.clusters) {
    csv::write_row(out, {std::to_string(c.cluster_id), csv::format_double(c.rho), std::to_string(c.n)});
  }
}

ErrorPartition error_partition(const LabelLookup& labels, const std::vector<AnnotatedPair>& pairs) {
  ErrorPartition out;
  for (const auto& p : pairs) {
    const int a = label_of(labels, p.article_a);
    const int b = label_of(labels, p.article_b);
    ErrorBucket& bucket = (a < 0 || b < 0) ? out.outlier : (a == b ? out.same : out.different);
    ++bucket.size;
    ++bucket.by_stratum[static_cast<std::size_t>(p.stratum)];
  }
  return out;
}

std::vector<GridRow> grid_search(const std::vector<std::size_t>& vocab_sizes,
                                 const std::vector<std::size_t>& umap_dims,
                                 const std::vector<std::size_t>& umap_neighbors,
                                 const GridEvaluator& evaluate) {
  std::vector<GridRow> rows;
  for (std::size_t v : vocab_sizes) {
    for (std::size_t d : umap_dims) {
      for (std::size_t k : umap_neighbors) {
        GridRow row;
        row.point = {v, d, k};
        try {
          auto [score, clusters] = evaluate(row.point);
          row.macro_f1 = score;
          row.n_clusters = clusters;
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        rows.push_back(std::move(row));
      }
    }
  }
  std::sort(rows.begin(), rows.end(), [](const GridRow& a, const GridRow& b) {
    if (a.macro_f1 != b.macro_f1) return a.macro_f1 > b.macro_f1;
    return a.point < b.point;
  });
  return rows;
}

void write_grid_csv(std::ostream& out, const std::vector<GridRow>& rows) {
  csv::write_row(out, {"macro_f1", "n_clusters", "umap_d", "umap_neighbors", "vocab", "error"});
  for (const auto& r : rows) {
    char score[32];
    std::snprintf(score, sizeof score, "%.2f", 100.0 * r.macro_f1);
    csv::write_row(out, {score, std::to_string(r.n_clusters), std::to_string(r.point.umap_dim),
                         std::to_string(r.point.umap_neighbors), std::to_string(r.point.vocab_size),
                         r.error.value_or("")});
  }
}

}  // namespace newsloc
