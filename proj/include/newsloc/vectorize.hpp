#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace newsloc {

struct Vocabulary {
  std::vector<std::string> terms;       // sorted by (-doc_freq, term)
  std::vector<std::size_t> doc_freq;    // parallel to terms
  std::size_t corpus_size = 0;          // documents the counts came from
  std::unordered_map<std::string, std::uint32_t> index;

  std::size_t size() const noexcept { return terms.size(); }
  const std::uint32_t* find(const std::string& term) const {
    auto it = index.find(term);
    return it == index.end() ? nullptr : &it->second;
  }
};

struct VocabularyOptions {
  std::size_t max_size = 20000;
  std::size_t min_count = 5;  // minimum document count
};

// Throws Error on an empty corpus or when nothing survives min_count.
// The location placeholder is never a term.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& documents,
                            const VocabularyOptions& options = {});

nlohmann::json to_json(const Vocabulary& vocab);
Vocabulary vocabulary_from_json(const nlohmann::json& j);

struct SparseVector {
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<double> values;          // > 0, finite

  bool empty() const noexcept { return indices.empty(); }
  std::size_t size() const noexcept { return indices.size(); }
  bool operator==(const SparseVector&) const = default;
};

// weight(t) = count(t) * (ln((1 + N) / (1 + df(t))) + 1), N = corpus_size.
SparseVector tfidf(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                   std::size_t corpus_size);

// sqrt of the L1-normalized vector; empty input gives empty output.
// Throws on negative or non-finite components.
SparseVector hellinger_root(const SparseVector& v);

// Hellinger distance between the L1 normalizations of u and v, in [0, 1].
// Empty vs empty is 0, empty vs non-empty is 1.
double hellinger(const SparseVector& u, const SparseVector& v);

// Same, on vectors already passed through hellinger_root.
double hellinger_from_roots(const SparseVector& root_u, const SparseVector& root_v);

double cosine_similarity(const SparseVector& u, const SparseVector& v);

nlohmann::json to_json(const SparseVector& v);
SparseVector sparse_from_json(const nlohmann::json& j);

}  // namespace newsloc
