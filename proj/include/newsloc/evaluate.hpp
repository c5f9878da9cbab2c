#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "newsloc/corpus.hpp"

namespace newsloc {

enum class Stratum { not_related = 0, vaguely = 1, somewhat = 2, very = 3 };

struct AnnotatedPair {
  std::string article_a;
  std::string article_b;
  Stratum stratum = Stratum::not_related;

  bool same_cluster_expected() const noexcept { return stratum == Stratum::very; }
};

// CSV: article_a,article_b,stratum (0-3).
std::vector<AnnotatedPair> read_annotations_csv(std::istream& in);
std::vector<AnnotatedPair> load_annotations(const std::filesystem::path& path);
void write_annotations_csv(std::ostream& out, const std::vector<AnnotatedPair>& pairs);

struct CandidatePair {
  std::size_t a = 0;  // positions into the article list, a < b
  std::size_t b = 0;
  std::size_t shared_keywords = 0;

  bool operator==(const CandidatePair&) const = default;
};

// n distinct unordered pairs drawn without replacement, each draw with
// probability proportional to 1 + bias * |shared keywords|. Throws when n
// exceeds the number of pairs.
std::vector<CandidatePair> sample_annotation_pairs(const std::vector<Article>& articles,
                                                   std::size_t n, double bias,
                                                   std::uint64_t seed);

enum class OutlierPolicy { treat_as_cluster, ignore_double_noise };

struct PairConfusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  std::size_t excluded = 0;  // double-noise pairs skipped under ignore_double_noise

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

using LabelLookup = std::unordered_map<std::string, int>;

// Throws when a pair references an article without a label.
PairConfusion pair_confusion(const LabelLookup& labels, const std::vector<AnnotatedPair>& pairs,
                             OutlierPolicy policy = OutlierPolicy::treat_as_cluster);

struct MacroF1 {
  double f1_same = 0.0;
  double f1_diff = 0.0;
  double macro = 0.0;
  bool same_unsupported = false;  // no very-related pairs and none predicted same
  bool diff_unsupported = false;
  bool same_zero = false;         // F1 of a class came out 0
  bool diff_zero = false;
};

// Throws on zero pairs.
MacroF1 macro_f1(const PairConfusion& c);

// Average ranks (1-based), ties sharing the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& values);

// Pearson correlation of the average ranks. Throws on fewer than 3 values;
// constant input gives 0.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

struct ClusterCorrelation {
  int cluster_id = 0;
  double rho = 0.0;
  std::size_t n = 0;
};

struct CorrelationReport {
  std::vector<ClusterCorrelation> clusters;  // by cluster id
  std::size_t zones_used = 0;
  std::size_t zones_suppressed = 0;  // had a profile but no statistic
};

// zone_scores: zone -> per-cluster score vector (noise slot ignored when
// n_clusters is given). Zones whose statistic is missing are excluded.
CorrelationReport spearman_per_cluster(
    const std::map<std::string, std::vector<double>>& zone_scores,
    const std::map<std::string, std::optional<double>>& zone_statistic, std::size_t n_clusters);

void write_correlation_csv(std::ostream& out, const CorrelationReport& report);

struct ErrorBucket {
  std::size_t size = 0;
  std::array<std::size_t, 4> by_stratum{};
};

struct ErrorPartition {
  ErrorBucket outlier;    // either label is noise
  ErrorBucket same;       // same non-noise cluster
  ErrorBucket different;  // different non-noise clusters
};

ErrorPartition error_partition(const LabelLookup& labels, const std::vector<AnnotatedPair>& pairs);

struct GridPoint {
  std::size_t vocab_size = 0;
  std::size_t umap_dim = 0;
  std::size_t umap_neighbors = 0;

  auto operator<=>(const GridPoint&) const = default;
};

struct GridRow {
  GridPoint point;
  double macro_f1 = 0.0;
  std::size_t n_clusters = 0;
  std::optional<std::string> error;
};

// Evaluates one combination and returns (macro F1, cluster count).
using GridEvaluator = std::function<std::pair<double, std::size_t>(const GridPoint&)>;

// Every combination of the three axes, evaluated independently. Failures are
// recorded on their row. Sorted by macro F1 descending, then grid point.
std::vector<GridRow> grid_search(const std::vector<std::size_t>& vocab_sizes,
                                 const std::vector<std::size_t>& umap_dims,
                                 const std::vector<std::size_t>& umap_neighbors,
                                 const GridEvaluator& evaluate);

// Columns: macro_f1,n_clusters,umap_d,umap_neighbors,vocab,error with the
// score as a percentage to two decimals.
void write_grid_csv(std::ostream& out, const std::vector<GridRow>& rows);

}  // namespace newsloc
