#include <doctest.h>

#include <sstream>

#include "newsloc/error.hpp"
#include "newsloc/hdbscan.hpp"
#include "support.hpp"

using namespace newsloc;

namespace {

const auto& two_blobs() {
  // 20 sigma apart in 2-D.
  static const auto b = fixtures::gaussian_blobs({{0.0, 0.0}, {20.0, 0.0}}, 300, 1.0, 17);
  return b;
}

const ClusterModel& two_blob_model() {
  static const auto m = hdbscan_fit(two_blobs().points, {250, 5});
  return m;
}

std::vector<std::string> ids_for(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("a" + std::to_string(i));
  return ids;
}

Matrix line(const std::vector<double>& xs) {
  Matrix m(xs.size(), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) m(i, 0) = xs[i];
  return m;
}

}  // namespace

TEST_CASE("too few points gives an all-noise model") {
  const auto b = fixtures::gaussian_blobs({{0.0, 0.0}}, 100, 1.0, 1);
  const auto m = hdbscan_fit(b.points, {250, 5});
  CHECK(m.n_clusters() == 0);
  CHECK(std::all_of(m.labels.begin(), m.labels.end(), [](int l) { return l == -1; }));
  const auto mem = soft_memberships(m, b.points, ids_for(100));
  for (const auto& a : mem) CHECK(a.probs == std::vector<double>{1.0});
  CHECK_THROWS_AS(hdbscan_fit(b.points, {1, 5}), Error);
}

TEST_CASE("mutual reachability on 10 random points") {
  const auto b = fixtures::gaussian_blobs({{0.0, 0.0, 0.0}}, 10, 2.0, 3);
  for (std::size_t ms : {1, 3, 5}) {
    const auto oracle = fixtures::oracle_mutual_reachability(b.points, ms);
    const auto core = kernels::core_distances(b.points, ms, kernels::Exec::serial);
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t j = 0; j < 10; ++j) {
        if (i == j) continue;
        CHECK(mutual_reachability(b.points.row(i), b.points.row(j), core[i], core[j]) ==
              doctest::Approx(oracle(i, j)).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("single linkage equals brute-force agglomeration") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const std::size_t n = 40 + seed * 40;
    const auto b = fixtures::gaussian_blobs({{0, 0}, {6, 1}, {2, 7}}, n / 3, 1.2, seed);
    const std::size_t ms = 1 + seed % 5;
    const auto core = kernels::core_distances(b.points, ms, kernels::Exec::serial);
    const auto mst = kernels::mutual_reachability_mst(b.points, core, kernels::Exec::serial);
    const std::size_t rows = b.points.rows();
    const auto linkage = single_linkage(mst, rows);
    REQUIRE(linkage.size() == rows - 1);
    CHECK(linkage.back().size == rows);
    for (std::size_t r = 1; r < linkage.size(); ++r) CHECK(linkage[r].distance >= linkage[r - 1].distance);
    const auto got = cophenetic_matrix(linkage, rows);
    const auto want = fixtures::oracle_single_linkage_cophenetic(
        fixtures::oracle_mutual_reachability(b.points, ms));
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < rows; ++j) CHECK(got(i, j) == doctest::Approx(want(i, j)).epsilon(1e-12));
    }
  }
}

TEST_CASE("condensed tree of four points on a line") {
  // Pairs {0,1} and {2,3} at distance 1, the pairs 9 apart.
  const auto pts = line({0, 1, 10, 11});
  const auto core = kernels::core_distances(pts, 1, kernels::Exec::serial);
  const auto linkage = single_linkage(kernels::mutual_reachability_mst(pts, core, kernels::Exec::serial), 4);
  const auto tree = condense_tree(linkage, 4, 2);
  REQUIRE(tree.size() == 6);
  std::size_t splits = 0;
  for (const auto& r : tree) {
    if (r.parent == 4) {
      ++splits;
      CHECK(r.child_size == 2);
      CHECK(r.lambda == doctest::Approx(1.0 / 9.0));
    } else {
      CHECK(r.child_size == 1);
      CHECK(r.lambda == doctest::Approx(1.0));
    }
  }
  CHECK(splits == 2);
  const auto stab = cluster_stabilities(tree, 4);
  CHECK(stab.at(5) == doctest::Approx(2 * (1.0 - 1.0 / 9.0)));
  CHECK(stab.at(6) == doctest::Approx(2 * (1.0 - 1.0 / 9.0)));
  const auto sel = select_clusters(tree, stab, 4);
  CHECK(sel == std::vector<std::size_t>{5, 6});
  const auto labels = label_points(tree, 4, sel);
  CHECK(labels[0] == labels[1]);
  CHECK(labels[2] == labels[3]);
  CHECK(labels[0] != labels[2]);
}

TEST_CASE("two blobs 20 sigma apart") {
  const auto& m = two_blob_model();
  REQUIRE(m.n_clusters() == 2);
  CHECK(fixtures::adjusted_rand_index(m.labels, two_blobs().truth) >= 0.99);
  std::map<int, std::size_t> sizes;
  for (int l : m.labels) ++sizes[l];
  for (const auto& [l, s] : sizes) {
    if (l >= 0) CHECK(s >= 250);
  }
  for (std::size_t k = 1; k < m.n_clusters(); ++k) {
    CHECK(m.stabilities.at(m.cluster_nodes[k - 1]) >= m.stabilities.at(m.cluster_nodes[k]));
  }
  const auto again = hdbscan_fit(two_blobs().points, {250, 5}, kernels::Exec::serial);
  CHECK(again.labels == m.labels);
  CHECK(again.cluster_nodes == m.cluster_nodes);
}

TEST_CASE("soft memberships") {
  const auto& m = two_blob_model();
  const auto& b = two_blobs();
  const auto mem = soft_memberships(m, b.points, ids_for(b.points.rows()));
  REQUIRE(mem.size() == b.points.rows());
  CHECK(soft_memberships(m, b.points, ids_for(b.points.rows()), kernels::Exec::serial)[7].probs ==
        mem[7].probs);

  // Map blob -> cluster through the hard labels.
  std::map<int, std::map<int, int>> votes;
  for (std::size_t i = 0; i < m.labels.size(); ++i) ++votes[b.truth[i]][m.labels[i]];
  std::map<int, int> cluster_of;
  for (auto& [blob, v] : votes) {
    cluster_of[blob] = std::max_element(v.begin(), v.end(), [](auto& x, auto& y) { return x.second < y.second; })->first;
  }

  double in_blob = 0.0;
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const auto& p = mem[i].probs;
    REQUIRE(p.size() == 3);
    double sum = 0;
    for (double x : p) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    if (m.labels[i] >= 0) CHECK(argmax(p) == static_cast<std::size_t>(m.labels[i]));
    in_blob += p[static_cast<std::size_t>(cluster_of[b.truth[i]])];
  }
  in_blob /= static_cast<double>(mem.size());
  MESSAGE("mean in-blob membership " << in_blob);
  CHECK(in_blob >= 0.9);

  const auto ex = cluster_exemplars(m);
  REQUIRE(ex.size() == 2);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK_FALSE(ex[c].empty());
    for (auto p : ex[c]) CHECK(argmax(mem[p].probs) == c);
  }

  std::stringstream ss;
  write_memberships_csv(ss, mem);
  const auto back = read_memberships_csv(ss);
  REQUIRE(back.size() == mem.size());
  for (std::size_t i = 0; i < mem.size(); i += 37) {
    CHECK(back[i].article_id == mem[i].article_id);
    for (std::size_t c = 0; c < 3; ++c) CHECK(back[i].probs[c] == mem[i].probs[c]);
  }
}

TEST_CASE("memberships on a noisy three-blob fixture") {
  auto b = fixtures::gaussian_blobs({{0, 0}, {8, 0}, {4, 7}}, 120, 1.3, 23);
  const auto m = hdbscan_fit(b.points, {40, 5});
  const auto mem = soft_memberships(m, b.points, ids_for(b.points.rows()));
  for (std::size_t i = 0; i < mem.size(); ++i) {
    double sum = 0;
    for (double x : mem[i].probs) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    if (m.labels[i] >= 0) CHECK(argmax(mem[i].probs) == static_cast<std::size_t>(m.labels[i]));
  }
}

TEST_CASE("cluster hierarchy") {
  SUBCASE("two blobs share the root") {
    const auto h = extract_hierarchy(two_blob_model());
    const auto kids = h.children(0);
    std::vector<int> selected_kids;
    for (auto k : kids) {
      if (h.nodes[k].selected) selected_kids.push_back(h.nodes[k].cluster_id);
    }
    std::sort(selected_kids.begin(), selected_kids.end());
    CHECK(selected_kids == std::vector<int>{0, 1});
    auto all = h.clusters_under(0);
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<int>{0, 1});
  }
  SUBCASE("single cluster") {
    const auto b = fixtures::gaussian_blobs({{0.0, 0.0}}, 60, 1.0, 4);
    auto pts = b.points;
    const auto m = hdbscan_fit(pts, {20, 5});
    const auto h = extract_hierarchy(m);
    std::size_t leaves = 0, selected = 0;
    for (std::size_t i = 0; i < h.nodes.size(); ++i) {
      leaves += h.children(i).empty();
      selected += h.nodes[i].selected;
    }
    CHECK(selected == m.n_clusters());
    if (m.n_clusters() == 1) CHECK(leaves >= 1);
  }
  SUBCASE("tree shape and DOT round-trip") {
    auto b = fixtures::gaussian_blobs({{0, 0}, {9, 0}, {0, 9}, {9, 9}}, 80, 1.0, 5);
    const auto m = hdbscan_fit(b.points, {30, 5});
    const auto h = extract_hierarchy(m);
    // Connected and acyclic: every non-root node has exactly one parent.
    std::vector<int> parents(h.nodes.size(), 0);
    for (auto [p, c] : h.edges) ++parents[c];
    CHECK(parents[0] == 0);
    for (std::size_t i = 1; i < parents.size(); ++i) CHECK(parents[i] == 1);
    CHECK(h.edges.size() + 1 == h.nodes.size());
    std::map<int, int> seen;
    for (const auto& n : h.nodes) {
      if (n.selected) ++seen[n.cluster_id];
    }
    CHECK(seen.size() == m.n_clusters());
    for (auto [c, k] : seen) CHECK(k == 1);

    const auto back = hierarchy_from_dot(to_dot(h));
    REQUIRE(back.nodes.size() == h.nodes.size());
    std::set<std::string> names_a, names_b;
    std::set<std::pair<std::string, std::string>> edges_a, edges_b;
    for (const auto& n : h.nodes) names_a.insert(n.name);
    for (const auto& n : back.nodes) names_b.insert(n.name);
    for (auto [p, c] : h.edges) edges_a.insert({h.nodes[p].name, h.nodes[c].name});
    for (auto [p, c] : back.edges) edges_b.insert({back.nodes[p].name, back.nodes[c].name});
    CHECK(names_a == names_b);
    CHECK(edges_a == edges_b);
  }
}

TEST_CASE("top_terms") {
  Vocabulary v;
  v.terms = {"tram", "bus", "goal", "match"};
  v.doc_freq = {2, 2, 2, 2};
  v.corpus_size = 4;
  for (std::uint32_t i = 0; i < 4; ++i) v.index[v.terms[i]] = i;
  const std::vector<SparseVector> vecs = {{{0}, {3.0}}, {{0}, {1.0}}, {{2, 3}, {1.0, 2.0}}, {{2}, {1.0}}};
  const std::vector<ArticleMembership> mem = {{"a", {1.0, 0.0, 0.0}},
                                              {"b", {0.9, 0.0, 0.1}},
                                              {"c", {0.0, 0.8, 0.2}},
                                              {"d", {0.0, 1.0, 0.0}}};
  const auto t0 = top_terms(0, mem, vecs, v);
  REQUIRE(t0.size() == 1);
  CHECK(t0[0].term == "tram");
  CHECK(t0[0].weight == doctest::Approx(3.9));
  const auto t1 = top_terms(1, mem, vecs, v, 100);
  REQUIRE(t1.size() == 2);
  CHECK(t1[0].term == "goal");
  CHECK(t1[1].term == "match");
  std::set<std::string> s0, s1;
  for (const auto& t : t0) s0.insert(t.term);
  for (const auto& t : t1) s1.insert(t.term);
  for (const auto& t : s0) CHECK(s1.count(t) == 0);
  CHECK(top_terms(1, mem, vecs, v, 1).size() == 1);
  CHECK_THROWS_AS(top_terms(2, mem, vecs, v), Error);
  CHECK_THROWS_AS(top_terms(-1, mem, vecs, v), Error);
}
