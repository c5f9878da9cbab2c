#pragma once

// Fixture generators and brute-force reference implementations shared by the
// unit and acceptance tests. The references are deliberately naive and share
// no code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "newsloc/corpus.hpp"
#include "newsloc/geoparse.hpp"
#include "newsloc/matrix.hpp"
#include "newsloc/text.hpp"

namespace fixtures {

using newsloc::Article;
using newsloc::GeoPoint;
using newsloc::Matrix;

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("newsloc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// Random corpora for deduplication

inline std::string random_word(std::mt19937_64& rng) {
  static const char* syllables[] = {"ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "pe", "da",
                                    "go", "fi", "ba", "ze", "hu", "wo"};
  std::string w;
  const std::size_t n = 2 + rng() % 3;
  for (std::size_t i = 0; i < n; ++i) w += syllables[rng() % std::size(syllables)];
  return w;
}

inline std::string random_sentence(std::mt19937_64& rng, std::size_t words) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i > 0) s += ' ';
    std::string w = random_word(rng);
    if (i == 0) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    s += w;
  }
  return s + ".";
}

// Varies case (never the first letter) and inner whitespace without changing
// the sentence's identity.
inline std::string perturb(std::string s, std::mt19937_64& rng) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (i > 0 && c >= 'a' && c <= 'z' && rng() % 7 == 0) c = static_cast<char>(c - 'a' + 'A');
    out += c;
    if (c == ' ' && rng() % 5 == 0) out += ' ';
  }
  return out;
}

inline Article make_article(std::string id, const std::vector<std::string>& sentences) {
  Article a;
  a.id = std::move(id);
  a.title = "Title of " + a.id;
  a.published = "2021-03-04";
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (i > 0) a.body += ' ';
    a.body += sentences[i];
  }
  newsloc::segment(a);
  return a;
}

// A corpus with exact copies, partial overlaps around the 50% threshold,
// boilerplate sentences near the document-count cut-off and short sentences.
inline std::vector<Article> dedup_corpus(std::uint64_t seed, std::size_t n_articles) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> boiler;
  for (int i = 0; i < 3; ++i) boiler.push_back(random_sentence(rng, 12));
  std::vector<std::size_t> boiler_budget = {19 + rng() % 4, 19 + rng() % 4, 30};
  std::vector<std::vector<std::string>> bodies;
  for (std::size_t a = 0; a < n_articles; ++a) {
    std::vector<std::string> sents;
    const auto roll = rng() % 10;
    if (!bodies.empty() && roll < 4) {
      const auto& src = bodies[rng() % bodies.size()];
      for (const auto& s : src) {
        if (rng() % 100 < (roll < 2 ? 90u : 55u)) sents.push_back(perturb(s, rng));
      }
      const std::size_t extra = rng() % 4;
      for (std::size_t i = 0; i < extra; ++i) sents.push_back(random_sentence(rng, 9 + rng() % 6));
    } else {
      const std::size_t n = 1 + rng() % 7;
      for (std::size_t i = 0; i < n; ++i) sents.push_back(random_sentence(rng, 4 + rng() % 12));
    }
    for (std::size_t b = 0; b < boiler.size(); ++b) {
      if (boiler_budget[b] > 0 && rng() % 3 == 0) {
        --boiler_budget[b];
        sents.insert(sents.begin() + static_cast<std::ptrdiff_t>(rng() % (sents.size() + 1)), boiler[b]);
      }
    }
    bodies.push_back(sents);
  }
  std::vector<Article> out;
  for (std::size_t a = 0; a < n_articles; ++a) {
    char id[32];
    std::snprintf(id, sizeof id, "n%03zu", a);
    out.push_back(make_article(id, bodies[a]));
  }
  return out;
}

struct DedupOracle {
  std::set<std::string> kept;
  std::map<std::string, std::set<std::string>> groups;  // kept -> dropped
};

inline std::string oracle_key(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }
  return out;
}

inline std::size_t oracle_words(const std::string& s) {
  std::size_t n = 0;
  bool in = false;
  for (char c : s) {
    const bool sp = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!sp && !in) ++n;
    in = !sp;
  }
  return n;
}

inline std::size_t code_points(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

// O(n^2) pairwise set intersection, transitive closure by flood fill.
inline DedupOracle dedup_oracle(const std::vector<Article>& articles, double fraction = 0.5,
                                std::size_t min_words = 10, std::size_t max_docs = 20) {
  const std::size_t n = articles.size();
  std::vector<std::set<std::string>> sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& s : newsloc::split_sentences(articles[i].body)) {
      if (oracle_words(s) >= min_words) sets[i].insert(oracle_key(s));
    }
  }
  std::map<std::string, std::size_t> docs;
  for (const auto& s : sets) {
    for (const auto& k : s) ++docs[k];
  }
  for (auto& s : sets) {
    for (auto it = s.begin(); it != s.end();) it = docs[*it] > max_docs ? s.erase(it) : std::next(it);
  }
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (sets[i].empty() || sets[j].empty()) continue;
      std::size_t shared = 0;
      for (const auto& k : sets[i]) shared += sets[j].count(k);
      const double need = fraction * static_cast<double>(std::min(sets[i].size(), sets[j].size()));
      if (static_cast<double>(shared) >= need) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  }
  DedupOracle out;
  std::vector<int> seen(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (seen[i]) continue;
    std::vector<std::size_t> comp{i}, stack{i};
    seen[i] = 1;
    while (!stack.empty()) {
      auto x = stack.back();
      stack.pop_back();
      for (auto y : adj[x]) {
        if (!seen[y]) {
          seen[y] = 1;
          comp.push_back(y);
          stack.push_back(y);
        }
      }
    }
    std::size_t best = comp[0];
    for (auto c : comp) {
      const auto lc = code_points(articles[c].body), lb = code_points(articles[best].body);
      if (lc > lb || (lc == lb && articles[c].id < articles[best].id)) best = c;
    }
    out.kept.insert(articles[best].id);
    if (comp.size() > 1) {
      auto& g = out.groups[articles[best].id];
      for (auto c : comp) {
        if (c != best) g.insert(articles[c].id);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Geometry

// Winding number of a closed ring around p, computed in (lon, lat).
inline int winding_number(GeoPoint p, const std::vector<GeoPoint>& ring) {
  int wn = 0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const auto& a = ring[i];
    const auto& b = ring[i + 1];
    const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (p.lon - a.lon) * (b.lat - a.lat);
    if (a.lat <= p.lat) {
      if (b.lat > p.lat && cross > 0) ++wn;
    } else if (b.lat <= p.lat && cross < 0) {
      --wn;
    }
  }
  return wn;
}

inline double haversine(GeoPoint a, GeoPoint b) {
  const double r = 6371000.0;
  const double rad = M_PI / 180.0;
  const double dlat = (b.lat - a.lat) * rad, dlon = (b.lon - a.lon) * rad;
  const double h = std::pow(std::sin(dlat / 2), 2) +
                   std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::pow(std::sin(dlon / 2), 2);
  return 2 * r * std::asin(std::min(1.0, std::sqrt(h)));
}

// ---------------------------------------------------------------------------
// Point clouds

struct Blobs {
  Matrix points;
  std::vector<int> truth;
};

inline Blobs gaussian_blobs(const std::vector<std::vector<double>>& centres, std::size_t per_blob,
                            double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  const std::size_t dim = centres.front().size();
  Blobs b{Matrix(centres.size() * per_blob, dim), {}};
  for (std::size_t c = 0; c < centres.size(); ++c) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      const std::size_t r = c * per_blob + i;
      for (std::size_t d = 0; d < dim; ++d) b.points(r, d) = centres[c][d] + noise(rng);
      b.truth.push_back(static_cast<int>(c));
    }
  }
  return b;
}

inline double dist(const Matrix& m, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t d = 0; d < m.cols(); ++d) {
    const double x = m(i, d) - m(j, d);
    s += x * x;
  }
  return std::sqrt(s);
}

inline std::vector<double> oracle_core(const Matrix& m, std::size_t min_samples) {
  std::vector<double> core(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < m.rows(); ++j) d.push_back(dist(m, i, j));
    std::sort(d.begin(), d.end());
    core[i] = d[std::min(min_samples, d.size()) - 1];
  }
  return core;
}

inline Matrix oracle_mutual_reachability(const Matrix& m, std::size_t min_samples) {
  const auto core = oracle_core(m, min_samples);
  Matrix mr(m.rows(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.rows(); ++j) {
      mr(i, j) = i == j ? 0.0 : std::max({core[i], core[j], dist(m, i, j)});
    }
  }
  return mr;
}

// Naive agglomerative single linkage; returns the cophenetic matrix.
inline Matrix oracle_single_linkage_cophenetic(const Matrix& d) {
  const std::size_t n = d.rows();
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::vector<char> alive(n, 1);
  Matrix cd = d;  // cluster-to-cluster single-link distance
  Matrix coph(n, n, 0.0);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = INFINITY;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (alive[j] && cd(i, j) < best) {
          best = cd(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    for (auto a : members[bi]) {
      for (auto b : members[bj]) coph(a, b) = coph(b, a) = best;
    }
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    alive[bj] = 0;
    for (std::size_t k = 0; k < n; ++k) {
      cd(bi, k) = cd(k, bi) = std::min(cd(bi, k), cd(bj, k));
    }
  }
  return coph;
}

inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sa = 0, sb = 0;
  for (auto& [k, v] : table) index += c2(v);
  for (auto& [k, v] : ra) sa += c2(v);
  for (auto& [k, v] : rb) sb += c2(v);
  const double expected = sa * sb / c2(static_cast<double>(a.size()));
  const double max_index = (sa + sb) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

// Fraction of each point's k nearest neighbours (self excluded) in `a`
// that are also among its k nearest in `b`.
inline double knn_preservation(const Matrix& a, const Matrix& b, std::size_t k) {
  auto neighbours = [&](const Matrix& m, std::size_t i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < m.rows(); ++j) {
      if (j != i) d.emplace_back(dist(m, i, j), j);
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    std::set<std::size_t> out;
    for (std::size_t x = 0; x < k; ++x) out.insert(d[x].second);
    return out;
  };
  double kept = 0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto na = neighbours(a, i), nb = neighbours(b, i);
    for (auto j : na) kept += nb.count(j);
  }
  return kept / static_cast<double>(a.rows() * k);
}

// Spearman by the textbook formula, valid when there are no ties.
inline double spearman_no_ties(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i + 1);
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  double d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double n = static_cast<double>(x.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1));
}

}  // namespace fixtures
