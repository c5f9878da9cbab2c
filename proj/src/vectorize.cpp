#include "newsloc/vectorize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <unordered_set>

#include "newsloc/error.hpp"
#include "newsloc/preprocess.hpp"

namespace newsloc {

using nlohmann::json;

namespace {

void reindex(Vocabulary& v) {
  v.index.clear();
  for (std::size_t i = 0; i < v.terms.size(); ++i) {
    v.index.emplace(v.terms[i], static_cast<std::uint32_t>(i));
  }
}

}  // namespace

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& documents,
                            const VocabularyOptions& options) {
  if (documents.empty()) throw Error("cannot build a vocabulary from an empty corpus");
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    std::unordered_set<std::string_view> seen;
    for (const auto& t : doc) {
      if (t == kLocationPlaceholder) continue;
      if (seen.insert(t).second) ++df[t];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [term, count] : df) {
    if (count >= options.min_count) kept.emplace_back(term, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (kept.size() > options.max_size) kept.resize(options.max_size);
  if (kept.empty()) {
    throw Error("vocabulary is empty: no term reaches " + std::to_string(options.min_count) +
                " documents");
  }
  Vocabulary v;
  v.corpus_size = documents.size();
  for (auto& [term, count] : kept) {
    v.terms.push_back(term);
    v.doc_freq.push_back(count);
  }
  reindex(v);
  return v;
}

json to_json(const Vocabulary& vocab) {
  json terms = json::array();
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    terms.push_back({vocab.terms[i], vocab.doc_freq[i]});
  }
  return {{"corpus_size", vocab.corpus_size}, {"terms", terms}};
}

Vocabulary vocabulary_from_json(const json& j) {
  Vocabulary v;
  v.corpus_size = j.at("corpus_size").get<std::size_t>();
  for (const auto& t : j.at("terms")) {
    v.terms.push_back(t.at(0).get<std::string>());
    v.doc_freq.push_back(t.at(1).get<std::size_t>());
  }
  reindex(v);
  return v;
}

SparseVector tfidf(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                   std::size_t corpus_size) {
  std::map<std::uint32_t, std::size_t> counts;
  for (const auto& t : tokens) {
    if (const auto* id = vocab.find(t)) ++counts[*id];
  }
  SparseVector v;
  v.indices.reserve(counts.size());
  v.values.reserve(counts.size());
  const double n = static_cast<double>(corpus_size);
  for (auto [id, tf] : counts) {
    const double idf =
        std::log((1.0 + n) / (1.0 + static_cast<double>(vocab.doc_freq[id]))) + 1.0;
    v.indices.push_back(id);
    v.values.push_back(static_cast<double>(tf) * idf);
  }
  return v;
}

SparseVector hellinger_root(const SparseVector& v) {
  double total = 0.0;
  for (double x : v.values) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw Error("hellinger: vector components must be finite and non-negative");
    }
    total += x;
  }
  SparseVector out;
  if (total <= 0.0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v.values[i] == 0.0) continue;
    out.indices.push_back(v.indices[i]);
    out.values.push_back(std::sqrt(v.values[i] / total));
  }
  return out;
}

double hellinger_from_roots(const SparseVector& p, const SparseVector& q) {
  if (p.empty() && q.empty()) return 0.0;
  if (p.empty() || q.empty()) return 1.0;
  double sum = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < p.size() || j < q.size()) {
    double d;
    if (j == q.size() || (i < p.size() && p.indices[i] < q.indices[j])) {
      d = p.values[i++];
    } else if (i == p.size() || q.indices[j] < p.indices[i]) {
      d = q.values[j++];
    } else {
      d = p.values[i++] - q.values[j++];
    }
    sum += d * d;
  }
  return std::min(1.0, std::sqrt(sum) / std::numbers::sqrt2);
}

double hellinger(const SparseVector& u, const SparseVector& v) {
  return hellinger_from_roots(hellinger_root(u), hellinger_root(v));
}

double cosine_similarity(const SparseVector& u, const SparseVector& v) {
  double dot = 0.0;
  double nu = 0.0;
  double nv = 0.0;
  for (double x : u.values) nu += x * x;
  for (double x : v.values) nv += x * x;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < u.size() && j < v.size()) {
    if (u.indices[i] < v.indices[j]) {
      ++i;
    } else if (v.indices[j] < u.indices[i]) {
      ++j;
    } else {
      dot += u.values[i++] * v.values[j++];
    }
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / std::sqrt(nu * nv);
}

json to_json(const SparseVector& v) { return {{"i", v.indices}, {"v", v.values}}; }

SparseVector sparse_from_json(const json& j) {
  SparseVector v;
  v.indices = j.at("i").get<std::vector<std::uint32_t>>();
  v.values = j.at("v").get<std::vector<double>>();
  if (v.indices.size() != v.values.size()) throw Error("sparse vector: length mismatch");
  return v;
}

}  // namespace newsloc
