#include "newsloc/kernels.hpp"

#include <cmath>
#include <limits>

#include <omp.h>

namespace newsloc::kernels {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shared-id counts between set i and every later set, via postings.
void overlaps_of(std::size_t i, const std::vector<std::vector<std::uint32_t>>& sets,
                 const std::vector<std::vector<std::uint32_t>>& postings, double min_fraction,
                 std::vector<std::uint32_t>& counts, std::vector<std::uint32_t>& touched,
                 std::vector<IndexPair>& out) {
  touched.clear();
  for (std::uint32_t s : sets[i]) {
    for (std::uint32_t j : postings[s]) {
      if (j <= i) continue;
      if (counts[j]++ == 0) touched.push_back(j);
    }
  }
  std::sort(touched.begin(), touched.end());
  for (std::uint32_t j : touched) {
    const double denom = static_cast<double>(std::min(sets[i].size(), sets[j].size()));
    if (static_cast<double>(counts[j]) >= min_fraction * denom) {
      out.emplace_back(static_cast<std::uint32_t>(i), j);
    }
    counts[j] = 0;
  }
}

double kth_distance(const Matrix& points, std::size_t i, std::size_t k,
                    std::vector<double>& scratch) {
  const std::size_t n = points.rows();
  scratch.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    scratch[j] = j == i ? 0.0 : euclidean(points.row(i), points.row(j));
  }
  auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(scratch.begin(), nth, scratch.end());
  return *nth;
}

struct Candidate {
  double weight = kInf;
  std::size_t index = std::numeric_limits<std::size_t>::max();

  bool better_than(const Candidate& o) const {
    return weight < o.weight || (weight == o.weight && index < o.index);
  }
};

}  // namespace

namespace serial {

std::vector<IndexPair> overlapping_pairs(const std::vector<std::vector<std::uint32_t>>& sets,
                                         const std::vector<std::vector<std::uint32_t>>& postings,
                                         double min_fraction) {
  std::vector<IndexPair> out;
  std::vector<std::uint32_t> counts(sets.size(), 0);
  std::vector<std::uint32_t> touched;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    overlaps_of(i, sets, postings, min_fraction, counts, touched, out);
  }
  return out;
}

std::vector<double> core_distances(const Matrix& points, std::size_t min_samples) {
  const std::size_t n = points.rows();
  const std::size_t k = std::min(std::max<std::size_t>(min_samples, 1), n);
  std::vector<double> core(n, 0.0);
  std::vector<double> scratch;
  for (std::size_t i = 0; i < n; ++i) core[i] = kth_distance(points, i, k, scratch);
  return core;
}

std::vector<WeightedEdge> mutual_reachability_mst(const Matrix& points,
                                                  std::span<const double> core) {
  const std::size_t n = points.rows();
  std::vector<WeightedEdge> edges;
  if (n < 2) return edges;
  edges.reserve(n - 1);
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, kInf);
  std::vector<std::size_t> from(n, 0);
  std::size_t current = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    Candidate pick;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double d = std::max({core[current], core[j],
                                 euclidean(points.row(current), points.row(j))});
      if (d < best[j]) {
        best[j] = d;
        from[j] = current;
      }
      Candidate c{best[j], j};
      if (c.better_than(pick)) pick = c;
    }
    edges.push_back({static_cast<std::uint32_t>(from[pick.index]),
                     static_cast<std::uint32_t>(pick.index), pick.weight});
    in_tree[pick.index] = 1;
    current = pick.index;
  }
  return edges;
}

Matrix min_distance_to_groups(const Matrix& points,
                              const std::vector<std::vector<std::uint32_t>>& groups) {
  Matrix out(points.rows(), groups.size(), kInf);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      double m = kInf;
      for (std::uint32_t p : groups[g]) m = std::min(m, euclidean(points.row(i), points.row(p)));
      out(i, g) = m;
    }
  }
  return out;
}

}  // namespace serial

namespace omp {

std::vector<IndexPair> overlapping_pairs(const std::vector<std::vector<std::uint32_t>>& sets,
                                         const std::vector<std::vector<std::uint32_t>>& postings,
                                         double min_fraction) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(sets.size());
  std::vector<std::vector<IndexPair>> per_row(sets.size());
#pragma omp parallel
  {
    std::vector<std::uint32_t> counts(sets.size(), 0);
    std::vector<std::uint32_t> touched;
#pragma omp for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      overlaps_of(static_cast<std::size_t>(i), sets, postings, min_fraction, counts, touched,
                  per_row[static_cast<std::size_t>(i)]);
    }
  }
  std::vector<IndexPair> out;
  for (auto& row : per_row) out.insert(out.end(), row.begin(), row.end());
  return out;
}

std::vector<double> core_distances(const Matrix& points, std::size_t min_samples) {
  const std::size_t n = points.rows();
  const std::size_t k = std::min(std::max<std::size_t>(min_samples, 1), n);
  std::vector<double> core(n, 0.0);
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      core[static_cast<std::size_t>(i)] =
          kth_distance(points, static_cast<std::size_t>(i), k, scratch);
    }
  }
  return core;
}

std::vector<WeightedEdge> mutual_reachability_mst(const Matrix& points,
                                                  std::span<const double> core) {
  const std::size_t n = points.rows();
  std::vector<WeightedEdge> edges;
  if (n < 2) return edges;
  edges.reserve(n - 1);
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, kInf);
  std::vector<std::size_t> from(n, 0);
  std::size_t current = 0;
  in_tree[0] = 1;

  const int threads = omp_get_max_threads();
  std::vector<Candidate> local(static_cast<std::size_t>(threads));

  for (std::size_t step = 1; step < n; ++step) {
#pragma omp parallel num_threads(threads)
    {
      Candidate pick;
#pragma omp for schedule(static)
      for (std::ptrdiff_t sj = 0; sj < static_cast<std::ptrdiff_t>(n); ++sj) {
        const auto j = static_cast<std::size_t>(sj);
        if (in_tree[j]) continue;
        const double d = std::max({core[current], core[j],
                                   euclidean(points.row(current), points.row(j))});
        if (d < best[j]) {
          best[j] = d;
          from[j] = current;
        }
        Candidate c{best[j], j};
        if (c.better_than(pick)) pick = c;
      }
      local[static_cast<std::size_t>(omp_get_thread_num())] = pick;
    }
    Candidate pick;
    for (std::size_t t = 0; t < local.size(); ++t) {
      if (local[t].better_than(pick)) pick = local[t];
      local[t] = Candidate{};
    }
    edges.push_back({static_cast<std::uint32_t>(from[pick.index]),
                     static_cast<std::uint32_t>(pick.index), pick.weight});
    in_tree[pick.index] = 1;
    current = pick.index;
  }
  return edges;
}

Matrix min_distance_to_groups(const Matrix& points,
                              const std::vector<std::vector<std::uint32_t>>& groups) {
  Matrix out(points.rows(), groups.size(), kInf);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(points.rows()); ++si) {
    const auto i = static_cast<std::size_t>(si);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      double m = kInf;
      for (std::uint32_t p : groups[g]) m = std::min(m, euclidean(points.row(i), points.row(p)));
      out(i, g) = m;
    }
  }
  return out;
}

}  // namespace omp

}  // namespace newsloc::kernels
