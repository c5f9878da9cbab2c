#pragma once

// Data-parallel inner loops. Every kernel has a plain serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp`; both produce
// bit-identical results for any thread count, and the tests hold them to it.
// Callers normally go through the dispatchers at the bottom of this file.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "newsloc/matrix.hpp"

namespace newsloc::kernels {

enum class Exec { serial, parallel };

using IndexPair = std::pair<std::uint32_t, std::uint32_t>;

// k nearest neighbours of every point, self first, then the remaining
// points ordered by (distance, index). Row-major n x k.
struct KnnGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> distances;

  std::uint32_t index(std::size_t i, std::size_t j) const { return indices[i * k + j]; }
  double distance(std::size_t i, std::size_t j) const { return distances[i * k + j]; }

  bool operator==(const KnnGraph&) const = default;
};

struct WeightedEdge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double weight = 0.0;

  bool operator==(const WeightedEdge&) const = default;
};

namespace detail {

template <class Distance>
void knn_row(std::size_t i, std::size_t n, std::size_t k, Distance& distance,
             std::vector<std::pair<double, std::uint32_t>>& scratch, KnnGraph& out) {
  scratch.clear();
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) scratch.emplace_back(distance(i, j), static_cast<std::uint32_t>(j));
  }
  const std::size_t take = k - 1;
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(take),
                    scratch.end());
  out.indices[i * k] = static_cast<std::uint32_t>(i);
  out.distances[i * k] = 0.0;
  for (std::size_t j = 0; j < take; ++j) {
    out.distances[i * k + j + 1] = scratch[j].first;
    out.indices[i * k + j + 1] = scratch[j].second;
  }
}

inline KnnGraph empty_knn(std::size_t n, std::size_t k) {
  KnnGraph g;
  g.n = n;
  g.k = k;
  g.indices.assign(n * k, 0);
  g.distances.assign(n * k, 0.0);
  return g;
}

}  // namespace detail

namespace serial {

// Requires 1 <= k <= n. `distance(i, j)` must be symmetric and thread-safe.
template <class Distance>
KnnGraph exact_knn(std::size_t n, std::size_t k, Distance&& distance) {
  KnnGraph out = detail::empty_knn(n, k);
  std::vector<std::pair<double, std::uint32_t>> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.emplace_back(distance(i, j), static_cast<std::uint32_t>(j));
    }
    std::sort(row.begin(), row.end());
    out.indices[i * k] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 0; j + 1 < k; ++j) {
      out.distances[i * k + j + 1] = row[j].first;
      out.indices[i * k + j + 1] = row[j].second;
    }
  }
  return out;
}

std::vector<IndexPair> overlapping_pairs(const std::vector<std::vector<std::uint32_t>>& sets,
                                         const std::vector<std::vector<std::uint32_t>>& postings,
                                         double min_fraction);

std::vector<double> core_distances(const Matrix& points, std::size_t min_samples);

std::vector<WeightedEdge> mutual_reachability_mst(const Matrix& points,
                                                  std::span<const double> core);

Matrix min_distance_to_groups(const Matrix& points,
                              const std::vector<std::vector<std::uint32_t>>& groups);

}  // namespace serial

namespace omp {

template <class Distance>
KnnGraph exact_knn(std::size_t n, std::size_t k, Distance&& distance) {
  KnnGraph out = detail::empty_knn(n, k);
#pragma omp parallel
  {
    std::vector<std::pair<double, std::uint32_t>> scratch;
    scratch.reserve(n);
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      detail::knn_row(static_cast<std::size_t>(i), n, k, distance, scratch, out);
    }
  }
  return out;
}

std::vector<IndexPair> overlapping_pairs(const std::vector<std::vector<std::uint32_t>>& sets,
                                         const std::vector<std::vector<std::uint32_t>>& postings,
                                         double min_fraction);

std::vector<double> core_distances(const Matrix& points, std::size_t min_samples);

std::vector<WeightedEdge> mutual_reachability_mst(const Matrix& points,
                                                  std::span<const double> core);

Matrix min_distance_to_groups(const Matrix& points,
                              const std::vector<std::vector<std::uint32_t>>& groups);

}  // namespace omp

// Pairs i < j of non-empty sorted id sets sharing at least
// min_fraction * min(|A|, |B|) ids. `postings[s]` lists, in increasing order,
// the sets containing id s. Output sorted.
inline std::vector<IndexPair> overlapping_pairs(
    const std::vector<std::vector<std::uint32_t>>& sets,
    const std::vector<std::vector<std::uint32_t>>& postings, double min_fraction, Exec exec) {
  return exec == Exec::serial ? serial::overlapping_pairs(sets, postings, min_fraction)
                              : omp::overlapping_pairs(sets, postings, min_fraction);
}

template <class Distance>
KnnGraph exact_knn(std::size_t n, std::size_t k, Distance&& distance, Exec exec) {
  return exec == Exec::serial ? serial::exact_knn(n, k, distance) : omp::exact_knn(n, k, distance);
}

// Distance to the min_samples-th nearest point, the point itself counted
// first (min_samples = 1 gives all zeros).
inline std::vector<double> core_distances(const Matrix& points, std::size_t min_samples,
                                          Exec exec) {
  return exec == Exec::serial ? serial::core_distances(points, min_samples)
                              : omp::core_distances(points, min_samples);
}

// Prim's algorithm on the implicit complete graph weighted by
// max(core_a, core_b, |a - b|). Edges in insertion order, starting from
// point 0; ties go to the lowest index.
inline std::vector<WeightedEdge> mutual_reachability_mst(const Matrix& points,
                                                         std::span<const double> core,
                                                         Exec exec) {
  return exec == Exec::serial ? serial::mutual_reachability_mst(points, core)
                              : omp::mutual_reachability_mst(points, core);
}

// result(i, g) = min over p in groups[g] of |points_i - points_p|.
inline Matrix min_distance_to_groups(const Matrix& points,
                                     const std::vector<std::vector<std::uint32_t>>& groups,
                                     Exec exec) {
  return exec == Exec::serial ? serial::min_distance_to_groups(points, groups)
                              : omp::min_distance_to_groups(points, groups);
}

}  // namespace newsloc::kernels
