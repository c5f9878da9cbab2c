#include "newsloc/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "newsloc/csv.hpp"
#include "newsloc/error.hpp"
#include "newsloc/preprocess.hpp"

namespace newsloc {

using nlohmann::json;

namespace {

// Merge heights of zero map to this lambda instead of infinity.
constexpr double kMinMergeDistance = 1e-300;

double lambda_of(double distance) { return 1.0 / std::max(distance, kMinMergeDistance); }

}  // namespace

double mutual_reachability(std::span<const double> a, std::span<const double> b, double core_a,
                           double core_b) {
  return std::max({core_a, core_b, euclidean(a, b)});
}

std::vector<LinkageRow> single_linkage(std::vector<kernels::WeightedEdge> mst, std::size_t n) {
  for (auto& e : mst) {
    if (e.a > e.b) std::swap(e.a, e.b);
  }
  std::sort(mst.begin(), mst.end(), [](const auto& x, const auto& y) {
    return std::tie(x.weight, x.a, x.b) < std::tie(y.weight, y.a, y.b);
  });
  const std::size_t total = n == 0 ? 0 : 2 * n - 1;
  std::vector<std::size_t> parent(total);
  std::vector<std::size_t> size(total, 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    std::size_t root = x;
    while (parent[root] != root) root = parent[root];
    while (parent[x] != root) {
      const std::size_t next = parent[x];
      parent[x] = root;
      x = next;
    }
    return root;
  };
  std::vector<LinkageRow> rows;
  rows.reserve(mst.size());
  std::size_t next = n;
  for (const auto& e : mst) {
    const std::size_t ra = find(e.a);
    const std::size_t rb = find(e.b);
    if (ra == rb) throw Error("single_linkage: edge list contains a cycle");
    rows.push_back({ra, rb, e.weight, size[ra] + size[rb]});
    parent[ra] = next;
    parent[rb] = next;
    size[next] = size[ra] + size[rb];
    ++next;
  }
  return rows;
}

Matrix cophenetic_matrix(const std::vector<LinkageRow>& linkage, std::size_t n) {
  Matrix out(n, n, 0.0);
  std::vector<std::vector<std::size_t>> members(n + linkage.size());
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  for (std::size_t r = 0; r < linkage.size(); ++r) {
    const auto& row = linkage[r];
    for (std::size_t a : members[row.left]) {
      for (std::size_t b : members[row.right]) {
        out(a, b) = row.distance;
        out(b, a) = row.distance;
      }
    }
    auto& merged = members[n + r];
    merged = std::move(members[row.left]);
    merged.insert(merged.end(), members[row.right].begin(), members[row.right].end());
    members[row.right].clear();
  }
  return out;
}

namespace {

// Level-order walk of the linkage tree from `root`, children left then right.
std::vector<std::size_t> bfs_linkage(const std::vector<LinkageRow>& linkage, std::size_t n,
                                     std::size_t root) {
  std::vector<std::size_t> out;
  std::vector<std::size_t> level{root};
  while (!level.empty()) {
    out.insert(out.end(), level.begin(), level.end());
    std::vector<std::size_t> next;
    for (std::size_t x : level) {
      if (x >= n) {
        next.push_back(linkage[x - n].left);
        next.push_back(linkage[x - n].right);
      }
    }
    level = std::move(next);
  }
  return out;
}

}  // namespace

std::vector<CondensedRow> condense_tree(const std::vector<LinkageRow>& linkage, std::size_t n,
                                        std::size_t min_cluster_size) {
  std::vector<CondensedRow> out;
  if (n < 2 || linkage.size() != n - 1) return out;
  const std::size_t root = 2 * n - 2;
  std::vector<std::size_t> relabel(2 * n - 1, 0);
  std::vector<char> ignore(2 * n - 1, 0);
  relabel[root] = n;
  std::size_t next_label = n + 1;
  auto count = [&](std::size_t x) { return x >= n ? linkage[x - n].size : std::size_t{1}; };
  auto drop_points = [&](std::size_t sub_root, std::size_t parent, double lambda) {
    for (std::size_t sub : bfs_linkage(linkage, n, sub_root)) {
      if (sub < n) out.push_back({parent, sub, lambda, 1});
      ignore[sub] = 1;
    }
  };

  for (std::size_t node : bfs_linkage(linkage, n, root)) {
    if (ignore[node] || node < n) continue;
    const auto& row = linkage[node - n];
    const double lambda = lambda_of(row.distance);
    const std::size_t left_count = count(row.left);
    const std::size_t right_count = count(row.right);
    const std::size_t parent = relabel[node];
    if (left_count >= min_cluster_size && right_count >= min_cluster_size) {
      relabel[row.left] = next_label++;
      out.push_back({parent, relabel[row.left], lambda, left_count});
      relabel[row.right] = next_label++;
      out.push_back({parent, relabel[row.right], lambda, right_count});
    } else if (left_count < min_cluster_size && right_count < min_cluster_size) {
      drop_points(row.left, parent, lambda);
      drop_points(row.right, parent, lambda);
    } else if (left_count < min_cluster_size) {
      relabel[row.right] = parent;
      drop_points(row.left, parent, lambda);
    } else {
      relabel[row.left] = parent;
      drop_points(row.right, parent, lambda);
    }
  }
  return out;
}

std::map<std::size_t, double> cluster_stabilities(const std::vector<CondensedRow>& tree,
                                                  std::size_t n) {
  std::map<std::size_t, double> birth;
  std::map<std::size_t, double> stability;
  for (const auto& r : tree) {
    stability.try_emplace(r.parent, 0.0);
    birth.try_emplace(r.parent, 0.0);
    if (r.child >= n) {
      birth[r.child] = r.lambda;
      stability.try_emplace(r.child, 0.0);
    }
  }
  for (const auto& r : tree) stability[r.parent] += (r.lambda - birth[r.parent]) * static_cast<double>(r.child_size);
  return stability;
}

std::vector<std::size_t> select_clusters(const std::vector<CondensedRow>& tree,
                                         const std::map<std::size_t, double>& stability_in,
                                         std::size_t n) {
  if (stability_in.empty()) return {};
  auto stability = stability_in;
  std::map<std::size_t, std::vector<std::size_t>> children;
  for (const auto& r : tree) {
    if (r.child >= n) children[r.parent].push_back(r.child);
  }
  const std::size_t root = stability.begin()->first;
  std::map<std::size_t, bool> is_cluster;
  for (const auto& [node, s] : stability) {
    if (node != root) is_cluster[node] = true;
  }
  for (auto it = stability.rbegin(); it != stability.rend(); ++it) {
    const std::size_t node = it->first;
    if (node == root) continue;
    double subtree = 0.0;
    for (std::size_t c : children[node]) subtree += stability[c];
    if (subtree > stability[node]) {
      is_cluster[node] = false;
      stability[node] = subtree;
    } else {
      std::vector<std::size_t> stack(children[node]);
      while (!stack.empty()) {
        const std::size_t x = stack.back();
        stack.pop_back();
        is_cluster[x] = false;
        for (std::size_t c : children[x]) stack.push_back(c);
      }
    }
  }
  std::vector<std::size_t> out;
  for (const auto& [node, flag] : is_cluster) {
    if (flag) out.push_back(node);
  }
  return out;
}

std::vector<int> label_points(const std::vector<CondensedRow>& tree, std::size_t n,
                              const std::vector<std::size_t>& cluster_nodes) {
  std::vector<int> labels(n, -1);
  if (tree.empty()) return labels;
  std::map<std::size_t, std::size_t> parent;
  std::size_t root = std::numeric_limits<std::size_t>::max();
  for (const auto& r : tree) {
    parent[r.child] = r.parent;
    root = std::min(root, r.parent);
  }
  std::map<std::size_t, int> label_of;
  for (std::size_t k = 0; k < cluster_nodes.size(); ++k) label_of[cluster_nodes[k]] = static_cast<int>(k);
  for (std::size_t p = 0; p < n; ++p) {
    auto it = parent.find(p);
    if (it == parent.end()) continue;
    std::size_t y = it->second;
    while (true) {
      if (auto l = label_of.find(y); l != label_of.end()) {
        labels[p] = l->second;
        break;
      }
      if (y == root) break;
      y = parent.at(y);
    }
  }
  return labels;
}

ClusterModel hdbscan_fit(const Matrix& points, const HdbscanParams& params, kernels::Exec exec) {
  if (params.min_cluster_size < 2) throw Error("hdbscan: min_cluster_size must be at least 2");
  if (params.min_samples < 1) throw Error("hdbscan: min_samples must be at least 1");
  for (double v : points.data()) {
    if (!std::isfinite(v)) throw Error("hdbscan: embedding contains a non-finite value");
  }
  ClusterModel model;
  const std::size_t n = points.rows();
  model.n_points = n;
  model.params = params;
  model.labels.assign(n, -1);
  if (n <= params.min_cluster_size) {
    spdlog::warn("hdbscan: {} points do not exceed min_cluster_size {}; every point is noise", n,
                 params.min_cluster_size);
    return model;
  }
  const auto core = kernels::core_distances(points, params.min_samples, exec);
  const auto mst = kernels::mutual_reachability_mst(points, core, exec);
  const auto linkage = single_linkage(mst, n);
  model.condensed_tree = condense_tree(linkage, n, params.min_cluster_size);
  model.stabilities = cluster_stabilities(model.condensed_tree, n);
  auto selected = select_clusters(model.condensed_tree, model.stabilities, n);
  std::stable_sort(selected.begin(), selected.end(), [&](std::size_t a, std::size_t b) {
    return model.stabilities.at(a) > model.stabilities.at(b);
  });
  model.cluster_nodes = std::move(selected);
  model.labels = label_points(model.condensed_tree, n, model.cluster_nodes);
  return model;
}

// ---------------------------------------------------------------------------
// Soft membership

namespace {

struct TreeIndex {
  std::size_t n = 0;
  std::size_t root = 0;
  std::map<std::size_t, std::size_t> parent;  // cluster node -> parent cluster node
  std::map<std::size_t, std::vector<std::size_t>> children;
  std::map<std::size_t, double> birth;
  std::map<std::size_t, double> max_lambda;  // over points in the node's subtree
  std::vector<std::size_t> point_parent;
  std::vector<double> point_lambda;

  explicit TreeIndex(const ClusterModel& m) : n(m.n_points) {
    point_parent.assign(n, 0);
    point_lambda.assign(n, 0.0);
    root = std::numeric_limits<std::size_t>::max();
    for (const auto& r : m.condensed_tree) {
      root = std::min(root, r.parent);
      max_lambda.try_emplace(r.parent, 0.0);
      if (r.child >= n) {
        parent[r.child] = r.parent;
        children[r.parent].push_back(r.child);
        birth[r.child] = r.lambda;
        max_lambda.try_emplace(r.child, 0.0);
      } else {
        point_parent[r.child] = r.parent;
        point_lambda[r.child] = r.lambda;
        max_lambda[r.parent] = std::max(max_lambda[r.parent], r.lambda);
      }
    }
    birth[root] = 0.0;
    // Children carry larger ids than their parents.
    for (auto it = max_lambda.rbegin(); it != max_lambda.rend(); ++it) {
      if (auto p = parent.find(it->first); p != parent.end()) {
        max_lambda[p->second] = std::max(max_lambda[p->second], it->second);
      }
    }
  }

  std::vector<std::size_t> path_to_root(std::size_t node) const {
    std::vector<std::size_t> path{node};
    while (node != root) {
      node = parent.at(node);
      path.push_back(node);
    }
    return path;
  }

  std::vector<std::size_t> leaves_under(std::size_t node) const {
    std::vector<std::size_t> out;
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      auto it = children.find(x);
      if (it == children.end() || it->second.empty()) {
        out.push_back(x);
      } else {
        for (std::size_t c : it->second) stack.push_back(c);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // Persistence of point p with respect to cluster node c, in [0, 1].
  double persistence(std::size_t p, std::size_t c) const {
    const double lmax = max_lambda.at(c);
    if (lmax <= 0.0) return 0.0;
    const auto path = path_to_root(point_parent[p]);
    const double lp = point_lambda[p];
    if (std::find(path.begin(), path.end(), c) != path.end()) return std::min(lp, lmax) / lmax;
    std::size_t below = c;
    std::size_t up = parent.at(c);
    while (std::find(path.begin(), path.end(), up) == path.end()) {
      below = up;
      up = parent.at(up);
    }
    return std::min(lp, birth.at(below)) / lmax;
  }
};

}  // namespace

std::vector<std::vector<std::uint32_t>> cluster_exemplars(const ClusterModel& model) {
  std::vector<std::vector<std::uint32_t>> out(model.n_clusters());
  if (model.condensed_tree.empty()) return out;
  const TreeIndex idx(model);
  std::map<std::size_t, double> leaf_max;
  for (std::size_t p = 0; p < model.n_points; ++p) {
    auto [it, ins] = leaf_max.try_emplace(idx.point_parent[p], idx.point_lambda[p]);
    if (!ins) it->second = std::max(it->second, idx.point_lambda[p]);
  }
  for (std::size_t k = 0; k < model.n_clusters(); ++k) {
    for (std::size_t leaf : idx.leaves_under(model.cluster_nodes[k])) {
      auto lm = leaf_max.find(leaf);
      if (lm == leaf_max.end()) continue;
      for (std::size_t p = 0; p < model.n_points; ++p) {
        if (idx.point_parent[p] == leaf && idx.point_lambda[p] == lm->second) {
          out[k].push_back(static_cast<std::uint32_t>(p));
        }
      }
    }
    std::sort(out[k].begin(), out[k].end());
  }
  return out;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<ArticleMembership> soft_memberships(const ClusterModel& model, const Matrix& points,
                                                const std::vector<std::string>& article_ids,
                                                kernels::Exec exec) {
  const std::size_t n = model.n_points;
  if (points.rows() != n || article_ids.size() != n) {
    throw Error("soft_memberships: model, points and ids disagree in size");
  }
  const std::size_t k = model.n_clusters();
  std::vector<ArticleMembership> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].article_id = article_ids[i];
  if (k == 0) {
    for (auto& m : out) m.probs = {1.0};
    return out;
  }

  const TreeIndex idx(model);
  const auto exemplars = cluster_exemplars(model);
  const Matrix dist = kernels::min_distance_to_groups(points, exemplars, exec);

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> soft(k);
    const double nearest = *std::min_element(dist.row(i).begin(), dist.row(i).end());
    double zsum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      soft[c] = std::exp(-(dist(i, c) - nearest));
      zsum += soft[c];
    }
    std::vector<double> persist(k);
    double psum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      persist[c] = idx.persistence(i, model.cluster_nodes[c]);
      psum += persist[c];
    }
    std::vector<double>& v = out[i].probs;
    v.resize(k + 1);
    double top = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double p = psum > 0.0 ? persist[c] / psum : 1.0 / static_cast<double>(k);
      v[c] = 0.5 * soft[c] / zsum + 0.5 * p;
      top = std::max(top, v[c]);
    }
    v[k] = 1.0 - top;
    double total = 0.0;
    for (double x : v) total += x;
    for (double& x : v) x /= total;
    const int label = model.labels[i];
    if (label >= 0) {
      const std::size_t best = argmax(v);
      if (best != static_cast<std::size_t>(label)) std::swap(v[best], v[static_cast<std::size_t>(label)]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hierarchy

std::vector<std::size_t> ClusterHierarchy::children(std::size_t node) const {
  std::vector<std::size_t> out;
  for (auto [p, c] : edges) {
    if (p == node) out.push_back(c);
  }
  return out;
}

std::vector<int> ClusterHierarchy::clusters_under(std::size_t node) const {
  std::vector<int> out;
  std::vector<std::size_t> stack{node};
  while (!stack.empty()) {
    const std::size_t x = stack.back();
    stack.pop_back();
    if (nodes[x].selected) out.push_back(nodes[x].cluster_id);
    for (std::size_t c : children(x)) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

ClusterHierarchy extract_hierarchy(const ClusterModel& model) {
  ClusterHierarchy h;
  const std::size_t n = model.n_points;
  std::map<std::size_t, int> cluster_of;
  for (std::size_t k = 0; k < model.cluster_nodes.size(); ++k) {
    cluster_of[model.cluster_nodes[k]] = static_cast<int>(k);
  }
  auto make = [&](std::size_t id, std::size_t size, double birth) {
    HierarchyNode node;
    node.condensed_id = id;
    node.size = size;
    node.birth_lambda = birth;
    if (auto it = cluster_of.find(id); it != cluster_of.end()) {
      node.selected = true;
      node.cluster_id = it->second;
      node.name = "C" + std::to_string(it->second);
    } else {
      node.name = "N" + std::to_string(id);
    }
    return node;
  };
  h.nodes.push_back(make(n, n, 0.0));
  std::map<std::size_t, std::size_t> position{{n, 0}};
  for (const auto& r : model.condensed_tree) {
    if (r.child < n) continue;
    position[r.child] = h.nodes.size();
    h.nodes.push_back(make(r.child, r.child_size, r.lambda));
  }
  for (const auto& r : model.condensed_tree) {
    if (r.child < n) continue;
    h.edges.emplace_back(position.at(r.parent), position.at(r.child));
  }
  return h;
}

std::string to_dot(const ClusterHierarchy& h) {
  std::ostringstream out;
  out << "digraph hierarchy {\n";
  for (const auto& node : h.nodes) {
    out << "  \"" << node.name << "\" [node=" << node.condensed_id << ", size=" << node.size
        << ", lambda=" << csv::format_double(node.birth_lambda)
        << ", selected=" << (node.selected ? "true" : "false")
        << ", cluster=" << node.cluster_id << "];\n";
  }
  for (auto [p, c] : h.edges) {
    out << "  \"" << h.nodes[p].name << "\" -> \"" << h.nodes[c].name << "\";\n";
  }
  out << "}\n";
  return out.str();
}

ClusterHierarchy hierarchy_from_dot(const std::string& dot) {
  static const std::regex node_re(R"(^\s*\"([^\"]+)\"\s*\[(.*)\];\s*$)");
  static const std::regex edge_re(R"(^\s*\"([^\"]+)\"\s*->\s*\"([^\"]+)\";\s*$)");
  static const std::regex attr_re(R"((\w+)=([^,\s]+))");
  ClusterHierarchy h;
  std::map<std::string, std::size_t> position;
  std::istringstream in(dot);
  std::string line;
  std::smatch m;
  while (std::getline(in, line)) {
    if (std::regex_match(line, m, edge_re)) {
      h.edges.emplace_back(position.at(m[1].str()), position.at(m[2].str()));
    } else if (std::regex_match(line, m, node_re)) {
      HierarchyNode node;
      node.name = m[1].str();
      const std::string attrs = m[2].str();
      for (auto it = std::sregex_iterator(attrs.begin(), attrs.end(), attr_re);
           it != std::sregex_iterator(); ++it) {
        const std::string key = (*it)[1].str();
        const std::string value = (*it)[2].str();
        if (key == "node") node.condensed_id = std::stoull(value);
        if (key == "size") node.size = std::stoull(value);
        if (key == "lambda") node.birth_lambda = std::stod(value);
        if (key == "selected") node.selected = value == "true";
        if (key == "cluster") node.cluster_id = std::stoi(value);
      }
      position[node.name] = h.nodes.size();
      h.nodes.push_back(std::move(node));
    }
  }
  return h;
}

json to_json(const ClusterHierarchy& h) {
  json nodes = json::array();
  for (const auto& node : h.nodes) {
    nodes.push_back({{"name", node.name},
                     {"node", node.condensed_id},
                     {"size", node.size},
                     {"birth_lambda", node.birth_lambda},
                     {"selected", node.selected},
                     {"cluster", node.cluster_id}});
  }
  json edges = json::array();
  for (auto [p, c] : h.edges) edges.push_back({h.nodes[p].name, h.nodes[c].name});
  return {{"nodes", nodes}, {"edges", edges}};
}

json condensed_tree_json(const ClusterModel& model) {
  json rows = json::array();
  for (const auto& r : model.condensed_tree) {
    rows.push_back({r.parent, r.child, r.lambda, r.child_size});
  }
  json stab = json::object();
  for (const auto& [node, s] : model.stabilities) stab[std::to_string(node)] = s;
  return {{"n_points", model.n_points},
          {"min_cluster_size", model.params.min_cluster_size},
          {"min_samples", model.params.min_samples},
          {"columns", {"parent", "child", "lambda", "child_size"}},
          {"rows", rows},
          {"stabilities", stab},
          {"cluster_nodes", model.cluster_nodes}};
}

// ---------------------------------------------------------------------------
// Top terms and CSV

std::vector<TermScore> top_terms(int cluster_id, const std::vector<ArticleMembership>& memberships,
                                 const std::vector<SparseVector>& vectors, const Vocabulary& vocab,
                                 std::size_t k) {
  if (memberships.size() != vectors.size()) {
    throw Error("top_terms: memberships and vectors differ in length");
  }
  const std::size_t width = memberships.empty() ? 0 : memberships.front().probs.size();
  if (cluster_id < 0 || static_cast<std::size_t>(cluster_id) + 1 >= width) {
    throw Error("top_terms: unknown cluster id " + std::to_string(cluster_id));
  }
  std::vector<double> score(vocab.size(), 0.0);
  for (std::size_t a = 0; a < vectors.size(); ++a) {
    const double w = memberships[a].probs[static_cast<std::size_t>(cluster_id)];
    if (w == 0.0) continue;
    const auto& v = vectors[a];
    for (std::size_t t = 0; t < v.size(); ++t) score[v.indices[t]] += w * v.values[t];
  }
  std::vector<TermScore> out;
  for (std::size_t t = 0; t < vocab.size(); ++t) {
    if (vocab.terms[t] == kLocationPlaceholder || score[t] <= 0.0) continue;
    out.push_back({vocab.terms[t], score[t]});
  }
  std::sort(out.begin(), out.end(), [](const TermScore& a, const TermScore& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.term < b.term;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

void write_labels_csv(std::ostream& out, const std::vector<std::string>& ids,
                      const std::vector<int>& labels) {
  csv::write_row(out, {"article_id", "label"});
  for (std::size_t i = 0; i < ids.size(); ++i) csv::write_row(out, {ids[i], std::to_string(labels[i])});
}

void write_memberships_csv(std::ostream& out, const std::vector<ArticleMembership>& memberships) {
  const std::size_t width = memberships.empty() ? 1 : memberships.front().probs.size();
  std::vector<std::string> row{"article_id"};
  for (std::size_t c = 0; c + 1 < width; ++c) row.push_back("c" + std::to_string(c));
  row.push_back("noise");
  csv::write_row(out, row);
  for (const auto& m : memberships) {
    row.assign(1, m.article_id);
    for (double p : m.probs) row.push_back(csv::format_double(p));
    csv::write_row(out, row);
  }
}

std::vector<ArticleMembership> read_memberships_csv(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> row;
  std::vector<ArticleMembership> out;
  if (!reader.next(row)) return out;
  const std::size_t width = row.size() - 1;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != width + 1) throw RecordError(reader.line(), "wrong column count");
    ArticleMembership m;
    m.article_id = row[0];
    for (std::size_t c = 1; c < row.size(); ++c) m.probs.push_back(std::stod(row[c]));
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace newsloc
