#include "newsloc/umap.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "newsloc/csv.hpp"
#include "newsloc/error.hpp"

namespace newsloc {

using nlohmann::json;

namespace {

constexpr double kSmoothKTolerance = 1e-5;
constexpr double kMinKDistScale = 1e-3;
constexpr int kBandwidthIterations = 64;

double curve_value(double x, double a, double b) { return 1.0 / (1.0 + a * std::pow(x, 2.0 * b)); }

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double clip(double v) { return std::clamp(v, -4.0, 4.0); }

}  // namespace

CurveParams fit_curve(double min_dist, double spread) {
  constexpr std::size_t kPoints = 300;
  std::vector<double> xs(kPoints);
  std::vector<double> ys(kPoints);
  for (std::size_t i = 0; i < kPoints; ++i) {
    xs[i] = 3.0 * spread * static_cast<double>(i) / static_cast<double>(kPoints - 1);
    ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
  }
  auto sse = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t i = 0; i < kPoints; ++i) {
      const double r = curve_value(xs[i], a, b) - ys[i];
      s += r * r;
    }
    return s;
  };

  // Levenberg-Marquardt on (a, b).
  double a = 1.0;
  double b = 1.0;
  double lambda = 1e-3;
  double cost = sse(a, b);
  for (int iter = 0; iter < 500; ++iter) {
    double jtj[2][2] = {{0, 0}, {0, 0}};
    double jtr[2] = {0, 0};
    for (std::size_t i = 0; i < kPoints; ++i) {
      const double x = xs[i];
      const double p = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
      const double denom = 1.0 + a * p;
      const double f = 1.0 / denom;
      const double r = f - ys[i];
      const double da = -p / (denom * denom);
      const double db = x > 0.0 ? -a * p * 2.0 * std::log(x) / (denom * denom) : 0.0;
      jtj[0][0] += da * da;
      jtj[0][1] += da * db;
      jtj[1][1] += db * db;
      jtr[0] += da * r;
      jtr[1] += db * r;
    }
    jtj[1][0] = jtj[0][1];
    bool improved = false;
    for (int attempt = 0; attempt < 30 && !improved; ++attempt) {
      const double m00 = jtj[0][0] * (1.0 + lambda);
      const double m11 = jtj[1][1] * (1.0 + lambda);
      const double det = m00 * m11 - jtj[0][1] * jtj[1][0];
      if (det == 0.0) {
        lambda *= 10.0;
        continue;
      }
      const double step_a = -(m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
      const double step_b = -(m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
      const double na = a + step_a;
      const double nb = b + step_b;
      const double ncost = na > 0.0 && nb > 0.0 ? sse(na, nb) : std::numeric_limits<double>::infinity();
      if (ncost < cost) {
        const double rel = (cost - ncost) / std::max(cost, 1e-300);
        a = na;
        b = nb;
        cost = ncost;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (rel < 1e-15) return {a, b};
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  return {a, b};
}

SmoothKnn smooth_knn_distances(const kernels::KnnGraph& knn) {
  const std::size_t n = knn.n;
  const std::size_t k = knn.k;
  const double target = std::log2(static_cast<double>(k));
  double mean_all = 0.0;
  for (double d : knn.distances) mean_all += d;
  mean_all /= static_cast<double>(std::max<std::size_t>(knn.distances.size(), 1));

  SmoothKnn out;
  out.rho.assign(n, 0.0);
  out.sigma.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double rho = 0.0;
    double row_mean = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double d = knn.distance(i, j);
      row_mean += d;
      if (rho == 0.0 && d > 0.0) rho = d;
    }
    row_mean /= static_cast<double>(k);

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double mid = 1.0;
    for (int it = 0; it < kBandwidthIterations; ++it) {
      double psum = 0.0;
      for (std::size_t j = 1; j < k; ++j) {
        const double d = knn.distance(i, j) - rho;
        psum += d > 0.0 ? std::exp(-(d / mid)) : 1.0;
      }
      if (std::abs(psum - target) < kSmoothKTolerance) break;
      if (psum > target) {
        hi = mid;
        mid = (lo + hi) / 2.0;
      } else {
        lo = mid;
        mid = std::isinf(hi) ? mid * 2.0 : (lo + hi) / 2.0;
      }
    }
    const double floor = kMinKDistScale * (rho > 0.0 ? row_mean : mean_all);
    out.rho[i] = rho;
    out.sigma[i] = std::max(mid, floor);
  }
  return out;
}

FuzzyGraph fuzzy_simplicial_set(const kernels::KnnGraph& knn) {
  const auto smooth = smooth_knn_distances(knn);
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> directed;
  for (std::size_t i = 0; i < knn.n; ++i) {
    for (std::size_t j = 0; j < knn.k; ++j) {
      const std::uint32_t t = knn.index(i, j);
      if (t == i) continue;
      const double d = knn.distance(i, j) - smooth.rho[i];
      const double w = (d <= 0.0 || smooth.sigma[i] == 0.0) ? 1.0 : std::exp(-(d / smooth.sigma[i]));
      directed[{static_cast<std::uint32_t>(i), t}] = w;
    }
  }
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> sym;
  for (const auto& [e, w] : directed) {
    auto rev = directed.find({e.second, e.first});
    const double wt = rev == directed.end() ? 0.0 : rev->second;
    const double v = w + wt - w * wt;
    sym[e] = v;
    sym[{e.second, e.first}] = v;
  }
  FuzzyGraph g;
  g.n = knn.n;
  for (const auto& [e, w] : sym) {
    if (w > 0.0) g.edges.push_back({e.first, e.second, w});
  }
  return g;
}

Matrix random_init(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix m(n, dim);
  for (double& v : m.data()) v = -10.0 + 20.0 * uniform01(rng);
  // Rescale each column to [0, 10].
  for (std::size_t c = 0; c < dim; ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t r = 0; r < n; ++r) {
      lo = std::min(lo, m(r, c));
      hi = std::max(hi, m(r, c));
    }
    const double range = hi > lo ? hi - lo : 1.0;
    for (std::size_t r = 0; r < n; ++r) m(r, c) = 10.0 * (m(r, c) - lo) / range;
  }
  return m;
}

void optimize_layout(Matrix& emb, const FuzzyGraph& graph, const UmapParams& params,
                     CurveParams curve) {
  const std::size_t n_epochs = params.epochs;
  if (graph.edges.empty() || n_epochs == 0) return;
  double w_max = 0.0;
  for (const auto& e : graph.edges) w_max = std::max(w_max, e.weight);

  std::vector<std::uint32_t> head;
  std::vector<std::uint32_t> tail;
  std::vector<double> epochs_per_sample;
  for (const auto& e : graph.edges) {
    double w = e.weight;
    if (n_epochs > 10 && w < w_max / static_cast<double>(n_epochs)) continue;
    const double n_samples = static_cast<double>(n_epochs) * (w / w_max);
    if (n_samples <= 0.0) continue;
    head.push_back(e.head);
    tail.push_back(e.tail);
    epochs_per_sample.push_back(static_cast<double>(n_epochs) / n_samples);
  }

  const std::size_t m = head.size();
  const double neg_rate = static_cast<double>(params.negative_sample_rate);
  std::vector<double> epochs_per_negative(m);
  for (std::size_t i = 0; i < m; ++i) epochs_per_negative[i] = epochs_per_sample[i] / neg_rate;
  std::vector<double> next_negative = epochs_per_negative;
  std::vector<double> next_sample = epochs_per_sample;

  const double a = curve.a;
  const double b = curve.b;
  const double gamma = params.repulsion_strength;
  const std::size_t dim = emb.cols();
  const std::size_t n_vertices = emb.rows();
  std::mt19937_64 rng(params.seed ^ 0x9E3779B97F4A7C15ULL);
  double alpha = params.learning_rate;

  for (std::size_t epoch = 0; epoch < n_epochs; ++epoch) {
    const double ep = static_cast<double>(epoch);
    for (std::size_t i = 0; i < m; ++i) {
      if (next_sample[i] > ep) continue;
      const std::size_t j = head[i];
      std::size_t k = tail[i];
      auto current = emb.row(j);
      auto other = emb.row(k);
      double d2 = squared_euclidean(current, other);
      double coeff = 0.0;
      if (d2 > 0.0) {
        coeff = -2.0 * a * b * std::pow(d2, b - 1.0);
        coeff /= a * std::pow(d2, b) + 1.0;
      }
      for (std::size_t d = 0; d < dim; ++d) {
        const double g = clip(coeff * (current[d] - other[d]));
        current[d] += g * alpha;
        other[d] -= g * alpha;
      }
      next_sample[i] += epochs_per_sample[i];

      const auto n_neg = static_cast<std::size_t>((ep - next_negative[i]) / epochs_per_negative[i]);
      for (std::size_t p = 0; p < n_neg; ++p) {
        k = static_cast<std::size_t>(rng() % n_vertices);
        auto neg = emb.row(k);
        d2 = squared_euclidean(current, neg);
        if (d2 > 0.0) {
          coeff = 2.0 * gamma * b;
          coeff /= (0.001 + d2) * (a * std::pow(d2, b) + 1.0);
        } else if (j == k) {
          continue;
        } else {
          coeff = 0.0;
        }
        for (std::size_t d = 0; d < dim; ++d) {
          const double g = coeff > 0.0 ? clip(coeff * (current[d] - neg[d])) : 4.0;
          current[d] += g * alpha;
        }
      }
      next_negative[i] += static_cast<double>(n_neg) * epochs_per_negative[i];
    }
    alpha = params.learning_rate * (1.0 - ep / static_cast<double>(n_epochs));
  }
}

Matrix umap_from_knn(const kernels::KnnGraph& knn, const UmapParams& params) {
  const auto graph = fuzzy_simplicial_set(knn);
  Matrix emb = random_init(knn.n, params.dim, params.seed);
  optimize_layout(emb, graph, params, fit_curve(params.min_dist, params.spread));
  for (double v : emb.data()) {
    if (!std::isfinite(v)) throw Error("umap: layout produced a non-finite coordinate");
  }
  return emb;
}

kernels::KnnGraph hellinger_knn(const std::vector<SparseVector>& vectors, std::size_t k,
                                kernels::Exec exec) {
  std::vector<SparseVector> roots;
  roots.reserve(vectors.size());
  for (const auto& v : vectors) roots.push_back(hellinger_root(v));
  auto dist = [&](std::size_t i, std::size_t j) { return hellinger_from_roots(roots[i], roots[j]); };
  auto knn = kernels::exact_knn(vectors.size(), k, dist, exec);
  for (double d : knn.distances) {
    if (!std::isfinite(d)) throw Error("umap: non-finite distance in kNN graph");
  }
  return knn;
}

Embedding umap_reduce(const std::vector<std::string>& ids, const std::vector<SparseVector>& vectors,
                      const UmapParams& params, kernels::Exec exec) {
  if (ids.size() != vectors.size()) throw Error("umap: ids and vectors differ in length");
  if (params.n_neighbors < 2) throw Error("umap: n_neighbors must be at least 2");
  if (params.dim == 0) throw Error("umap: dimension must be positive");
  if (vectors.size() < params.n_neighbors + 1) {
    throw Error("umap: need at least " + std::to_string(params.n_neighbors + 1) +
                " points, got " + std::to_string(vectors.size()));
  }
  const auto knn = hellinger_knn(vectors, params.n_neighbors, exec);
  return {ids, umap_from_knn(knn, params)};
}

// ---------------------------------------------------------------------------
// Persistence

void write_embedding_csv(const std::filesystem::path& path, const Embedding& e) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  std::vector<std::string> row{"article_id"};
  for (std::size_t c = 0; c < e.coords.cols(); ++c) row.push_back("x" + std::to_string(c));
  csv::write_row(out, row);
  for (std::size_t r = 0; r < e.coords.rows(); ++r) {
    row.assign(1, e.article_ids[r]);
    for (double v : e.coords.row(r)) row.push_back(csv::format_double(v));
    csv::write_row(out, row);
  }
}

Embedding read_embedding_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  csv::Reader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row) || row.empty()) throw Error("embedding CSV has no header");
  const std::size_t dim = row.size() - 1;
  Embedding e;
  std::vector<double> values;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != dim + 1) throw RecordError(reader.line(), "wrong column count");
    e.article_ids.push_back(row[0]);
    for (std::size_t c = 1; c <= dim; ++c) values.push_back(std::stod(row[c]));
  }
  e.coords = Matrix(e.article_ids.size(), dim);
  e.coords.data() = std::move(values);
  return e;
}

json to_json(const UmapParams& p) {
  return {{"dim", p.dim},
          {"n_neighbors", p.n_neighbors},
          {"epochs", p.epochs},
          {"min_dist", p.min_dist},
          {"spread", p.spread},
          {"learning_rate", p.learning_rate},
          {"repulsion_strength", p.repulsion_strength},
          {"negative_sample_rate", p.negative_sample_rate},
          {"metric", "hellinger"},
          {"seed", p.seed}};
}

void write_embedding_binary(const std::filesystem::path& path, const Embedding& e,
                            const UmapParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  json header{{"shape", {e.coords.rows(), e.coords.cols()}},
              {"dtype", "float64-le"},
              {"seed", params.seed},
              {"params", to_json(params)},
              {"ids", e.article_ids}};
  out << header.dump() << '\n';
  static_assert(std::numeric_limits<double>::is_iec559);
  for (double v : e.coords.data()) {
    unsigned char bytes[8];
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
}

Embedding read_embedding_binary(const std::filesystem::path& path, json* header_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("embedding sidecar has no header");
  json header = json::parse(line);
  const auto rows = header.at("shape").at(0).get<std::size_t>();
  const auto cols = header.at("shape").at(1).get<std::size_t>();
  Embedding e;
  e.article_ids = header.at("ids").get<std::vector<std::string>>();
  if (e.article_ids.size() != rows) throw Error("embedding sidecar: ids do not match shape");
  e.coords = Matrix(rows, cols);
  for (double& v : e.coords.data()) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw Error("embedding sidecar truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    std::memcpy(&v, &bits, 8);
  }
  if (header_out) *header_out = std::move(header);
  return e;
}

}  // namespace newsloc
