#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "newsloc/kernels.hpp"
#include "newsloc/matrix.hpp"
#include "newsloc/vectorize.hpp"

namespace newsloc {

struct UmapParams {
  std::size_t dim = 10;
  std::size_t n_neighbors = 5;  // includes the point itself
  std::size_t epochs = 1000;
  double min_dist = 0.1;
  double spread = 1.0;
  double learning_rate = 1.0;
  double repulsion_strength = 1.0;
  std::size_t negative_sample_rate = 5;
  std::uint64_t seed = 0;
};

// Low-dimensional similarity curve 1 / (1 + a d^(2b)).
struct CurveParams {
  double a = 0.0;
  double b = 0.0;
};

// Least-squares fit of the curve to the piecewise target (1 below min_dist,
// exp(-(d - min_dist) / spread) beyond) on 300 evenly spaced points in
// [0, 3 * spread].
CurveParams fit_curve(double min_dist, double spread);

// Per-point distance to the nearest non-zero neighbour (rho) and the
// bandwidth sigma solving sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k)
// over the k - 1 non-self neighbours.
struct SmoothKnn {
  std::vector<double> rho;
  std::vector<double> sigma;
};

SmoothKnn smooth_knn_distances(const kernels::KnnGraph& knn);

struct GraphEdge {
  std::uint32_t head = 0;
  std::uint32_t tail = 0;
  double weight = 0.0;
};

// Symmetrized fuzzy graph w = a + b - a*b, both directions listed, sorted by
// (head, tail), zero weights dropped.
struct FuzzyGraph {
  std::size_t n = 0;
  std::vector<GraphEdge> edges;
};

FuzzyGraph fuzzy_simplicial_set(const kernels::KnnGraph& knn);

// Negative-sampling SGD layout, starting from `init` (modified in place).
void optimize_layout(Matrix& embedding, const FuzzyGraph& graph, const UmapParams& params,
                     CurveParams curve);

// Uniform random start in [-10, 10]^dim drawn from the seed.
Matrix random_init(std::size_t n, std::size_t dim, std::uint64_t seed);

Matrix umap_from_knn(const kernels::KnnGraph& knn, const UmapParams& params);

struct Embedding {
  std::vector<std::string> article_ids;
  Matrix coords;
};

// Exact Hellinger kNN followed by the UMAP layout. Throws when there are
// fewer than n_neighbors + 1 vectors or a distance is not finite.
Embedding umap_reduce(const std::vector<std::string>& ids, const std::vector<SparseVector>& vectors,
                      const UmapParams& params, kernels::Exec exec = kernels::Exec::parallel);

kernels::KnnGraph hellinger_knn(const std::vector<SparseVector>& vectors, std::size_t k,
                                kernels::Exec exec);

// CSV: article_id,x0..x{d-1}.
void write_embedding_csv(const std::filesystem::path& path, const Embedding& e);
Embedding read_embedding_csv(const std::filesystem::path& path);

// Binary sidecar: one line of JSON header ({"shape":[n,d],"seed":..,
// "params":{..},"ids":[..]}) terminated by '\n', then n*d little-endian
// float64 values in row-major order.
void write_embedding_binary(const std::filesystem::path& path, const Embedding& e,
                            const UmapParams& params);
Embedding read_embedding_binary(const std::filesystem::path& path, nlohmann::json* header = nullptr);

nlohmann::json to_json(const UmapParams& params);

}  // namespace newsloc
