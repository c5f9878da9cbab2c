#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "newsloc/kernels.hpp"
#include "newsloc/matrix.hpp"
#include "newsloc/vectorize.hpp"

namespace newsloc {

struct HdbscanParams {
  std::size_t min_cluster_size = 250;
  std::size_t min_samples = 5;
};

double mutual_reachability(std::span<const double> a, std::span<const double> b, double core_a,
                           double core_b);

// scipy-style linkage row. Leaves are 0..n-1; the row at position r creates
// node n + r.
struct LinkageRow {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t size = 0;
};

// Kruskal over the MST edges sorted by (weight, a, b).
std::vector<LinkageRow> single_linkage(std::vector<kernels::WeightedEdge> mst, std::size_t n);

// Cophenetic (merge height) matrix of a linkage, n x n.
Matrix cophenetic_matrix(const std::vector<LinkageRow>& linkage, std::size_t n);

// Condensed tree row. Points are 0..n-1, cluster nodes n, n+1, ... with n the
// root. child_size is 1 for points.
struct CondensedRow {
  std::size_t parent = 0;
  std::size_t child = 0;
  double lambda = 0.0;
  std::size_t child_size = 0;
};

std::vector<CondensedRow> condense_tree(const std::vector<LinkageRow>& linkage, std::size_t n,
                                        std::size_t min_cluster_size);

// Excess of mass per cluster node: sum over rows leaving the node of
// (lambda - lambda_birth) * child_size.
std::map<std::size_t, double> cluster_stabilities(const std::vector<CondensedRow>& tree,
                                                  std::size_t n);

// Excess-of-mass selection, root excluded. Sorted node ids.
std::vector<std::size_t> select_clusters(const std::vector<CondensedRow>& tree,
                                         const std::map<std::size_t, double>& stability,
                                         std::size_t n);

struct ClusterModel {
  std::size_t n_points = 0;
  HdbscanParams params;
  std::vector<int> labels;  // -1 is noise
  std::vector<CondensedRow> condensed_tree;
  std::map<std::size_t, double> stabilities;  // by condensed node
  // Condensed node of cluster id k; ids are ordered by decreasing stability.
  std::vector<std::size_t> cluster_nodes;

  std::size_t n_clusters() const noexcept { return cluster_nodes.size(); }
};

// Labels cluster id k to points under cluster_nodes[k]; everything else -1.
std::vector<int> label_points(const std::vector<CondensedRow>& tree, std::size_t n,
                              const std::vector<std::size_t>& cluster_nodes);

// Core distances, mutual-reachability MST, single linkage, condensed tree and
// excess-of-mass selection. With n <= min_cluster_size the model is all noise
// and a warning is logged.
ClusterModel hdbscan_fit(const Matrix& points, const HdbscanParams& params,
                         kernels::Exec exec = kernels::Exec::parallel);

struct ArticleMembership {
  std::string article_id;
  std::vector<double> probs;  // one slot per cluster, then noise

  double noise() const { return probs.back(); }
};

// Blend of an exemplar-distance softmax (temperature 1) and condensed-tree
// persistence, 50/50; a noise slot of 1 - max cluster mass is appended and
// the vector renormalized. For a hard-labelled point the label's slot is
// swapped with the largest slot when they differ, so argmax == label.
std::vector<ArticleMembership> soft_memberships(const ClusterModel& model, const Matrix& points,
                                                const std::vector<std::string>& article_ids,
                                                kernels::Exec exec = kernels::Exec::parallel);

// Exemplar points of each cluster: in every leaf cluster below it, the
// points that persist to the leaf's largest lambda.
std::vector<std::vector<std::uint32_t>> cluster_exemplars(const ClusterModel& model);

std::size_t argmax(const std::vector<double>& v);

struct HierarchyNode {
  std::string name;  // "C<k>" for selected cluster k, "N<node>" otherwise
  std::size_t condensed_id = 0;
  std::size_t size = 0;
  double birth_lambda = 0.0;
  bool selected = false;
  int cluster_id = -1;
};

struct ClusterHierarchy {
  std::vector<HierarchyNode> nodes;  // nodes[0] is the root
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (parent, child) positions

  std::vector<std::size_t> children(std::size_t node) const;
  // Selected cluster ids under (or at) the node.
  std::vector<int> clusters_under(std::size_t node) const;
};

ClusterHierarchy extract_hierarchy(const ClusterModel& model);

std::string to_dot(const ClusterHierarchy& h);
ClusterHierarchy hierarchy_from_dot(const std::string& dot);
nlohmann::json to_json(const ClusterHierarchy& h);
nlohmann::json condensed_tree_json(const ClusterModel& model);

struct TermScore {
  std::string term;
  double weight = 0.0;
};

// Score of term t for a cluster = sum over articles of
// membership(article, cluster) * tfidf(article, t). Top k by score, then
// term order. Throws on an unknown cluster id.
std::vector<TermScore> top_terms(int cluster_id, const std::vector<ArticleMembership>& memberships,
                                 const std::vector<SparseVector>& vectors, const Vocabulary& vocab,
                                 std::size_t k = 30);

void write_labels_csv(std::ostream& out, const std::vector<std::string>& ids,
                      const std::vector<int>& labels);
void write_memberships_csv(std::ostream& out, const std::vector<ArticleMembership>& memberships);
std::vector<ArticleMembership> read_memberships_csv(std::istream& in);

}  // namespace newsloc
