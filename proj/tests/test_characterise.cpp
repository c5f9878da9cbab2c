#include <doctest.h>

#include <fstream>
#include <sstream>

#include "newsloc/characterise.hpp"
#include "newsloc/error.hpp"
#include "support.hpp"

using namespace newsloc;

namespace {

ArticleMembership mem(std::string id, std::vector<double> p) { return {std::move(id), std::move(p)}; }

LocationMention zoned(std::string article, std::string zone, std::string surface = "Somewhere") {
  LocationMention m;
  m.article_id = std::move(article);
  m.surface = std::move(surface);
  m.key = name_key(m.surface);
  m.entry_id = "e";
  m.zone_id = std::move(zone);
  return m;
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t k) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(k);
  double s = 0;
  for (auto& x : v) s += (x = e(rng));
  for (auto& x : v) x /= s;
  return v;
}

}  // namespace

TEST_CASE("location profile examples") {
  const MembershipTable table({mem("a", {1.0, 0.0}), mem("b", {0.0, 1.0}), mem("c", {0.2, 0.8})});
  SUBCASE("one article") {
    const auto p = profile_of_articles("Z", {"c"}, table);
    REQUIRE(p);
    CHECK(p->probs == std::vector<double>{0.2, 0.8});
  }
  SUBCASE("two articles") {
    const auto p = profile_of_articles("Z", {"a", "b"}, table);
    REQUIRE(p);
    CHECK(p->probs[0] == doctest::Approx(0.5));
    CHECK(p->probs[1] == doctest::Approx(0.5));
    CHECK(p->article_ids == std::vector<std::string>{"a", "b"});
  }
  SUBCASE("repeated mentions count once") {
    std::vector<std::pair<std::string, std::vector<LocationMention>>> ms = {
        {"a", {zoned("a", "Z1"), zoned("a", "Z1"), zoned("a", "Z1"), zoned("a", "Z1"), zoned("a", "Z1")}},
        {"b", {zoned("b", "Z1")}}};
    const auto index = zone_mention_index(ms, Blocklist::defaults());
    const auto p = location_profile("Z1", index, table);
    REQUIRE(p);
    CHECK(p->probs[0] == doctest::Approx(0.5));
  }
  SUBCASE("empty and missing") {
    CHECK_FALSE(profile_of_articles("Z", {}, table).has_value());
    CHECK_FALSE(location_profile("nowhere", {}, table).has_value());
    CHECK_THROWS_AS(profile_of_articles("Z", {"zzz"}, table), Error);
  }
  SUBCASE("membership widths must agree") {
    CHECK_THROWS_AS(MembershipTable({mem("a", {1.0}), mem("b", {0.5, 0.5})}), Error);
  }
}

TEST_CASE("broad mentions are left out of the zone index") {
  std::vector<std::pair<std::string, std::vector<LocationMention>>> ms = {
      {"a", {zoned("a", "Z1", "Edinburgh"), zoned("a", "Z2")}}};
  const auto index = zone_mention_index(ms, Blocklist::defaults());
  CHECK(index.count("Z1") == 0);
  CHECK(index.at("Z2") == std::set<std::string>{"a"});
}

TEST_CASE("neighbourhood profile pools articles") {
  const MembershipTable table({mem("a", {1.0, 0.0, 0.0}), mem("b", {0.0, 1.0, 0.0}), mem("c", {0.0, 0.0, 1.0})});
  SUBCASE("one zone equals the zone profile") {
    const MentionIndex idx = {{"Z1", {"a", "b"}}};
    const auto n = neighbourhood_profile({"Hood", {"Z1"}}, idx, table);
    const auto z = location_profile("Z1", idx, table);
    REQUIRE(n);
    CHECK(n->probs == z->probs);
    CHECK(n->location_id == "Hood");
  }
  SUBCASE("disjoint singletons average") {
    const MentionIndex idx = {{"Z1", {"a"}}, {"Z2", {"b"}}};
    const auto n = neighbourhood_profile({"Hood", {"Z1", "Z2"}}, idx, table);
    REQUIRE(n);
    CHECK(n->probs[0] == doctest::Approx(0.5));
    CHECK(n->probs[1] == doctest::Approx(0.5));
  }
  SUBCASE("union, not an average of zone profiles") {
    const MentionIndex idx = {{"Z1", {"a", "c"}}, {"Z2", {"a"}}};
    const auto n = neighbourhood_profile({"Hood", {"Z1", "Z2"}}, idx, table);
    REQUIRE(n);
    CHECK(n->article_ids.size() == 2);
    CHECK(n->probs[0] == doctest::Approx(0.5));
    CHECK(n->probs[2] == doctest::Approx(0.5));
  }
  SUBCASE("empty union") {
    CHECK_FALSE(neighbourhood_profile({"Hood", {"Z9"}}, {}, table).has_value());
  }
}

TEST_CASE("profiles are convex combinations and order-free") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng() % 6;
    std::vector<ArticleMembership> rows;
    std::set<std::string> ids;
    for (std::size_t a = 0, n = 1 + rng() % 30; a < n; ++a) {
      rows.push_back(mem("a" + std::to_string(a), random_simplex(rng, k)));
      ids.insert(rows.back().article_id);
    }
    const MembershipTable table(rows);
    const auto p = profile_of_articles("Z", ids, table);
    REQUIRE(p);
    double sum = 0;
    for (std::size_t c = 0; c < k; ++c) {
      double lo = 1, hi = 0;
      for (const auto& r : rows) {
        lo = std::min(lo, r.probs[c]);
        hi = std::max(hi, r.probs[c]);
      }
      CHECK(p->probs[c] >= lo - 1e-15);
      CHECK(p->probs[c] <= hi + 1e-15);
      sum += p->probs[c];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

    auto shuffled = rows;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto q = profile_of_articles("Z", ids, MembershipTable(shuffled));
    for (std::size_t c = 0; c < k; ++c) CHECK(q->probs[c] == doctest::Approx(p->probs[c]).epsilon(1e-14));
  }
}

TEST_CASE("theme profile") {
  const LocationProfile p{"Z", {"a"}, {0.5, 0.2, 0.3, 0.0}};
  SUBCASE("worked example") {
    const auto t = theme_profile(p, {{"A", {0}}, {"B", {1, 2}}});
    CHECK(t.themes.at("A") == doctest::Approx(0.5));
    CHECK(t.themes.at("B") == doctest::Approx(0.5));
    CHECK(t.themes.count(kOtherTheme) == 0);
  }
  SUBCASE("everything in one theme") {
    const LocationProfile q{"Z", {"a"}, {0.4, 0.3, 0.1, 0.2}};
    const auto t = theme_profile(q, {{"All", {0, 1, 2}}});
    CHECK(t.themes.at("All") == doctest::Approx(1.0 - 0.2));
    CHECK(t.noise == doctest::Approx(0.2));
  }
  SUBCASE("empty map puts everything under other") {
    const auto t = theme_profile(p, {});
    CHECK(t.themes.size() == 1);
    CHECK(t.themes.at(kOtherTheme) == doctest::Approx(1.0));
  }
  SUBCASE("invalid maps") {
    CHECK_THROWS_AS(theme_profile(p, {{"A", {0}}, {"B", {0}}}), Error);
    CHECK_THROWS_AS(theme_profile(p, {{"A", {3}}}), Error);
    CHECK_THROWS_AS(theme_profile(p, {{"other", {1}}}), Error);
  }
  SUBCASE("masses plus noise sum to one") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t k = 1 + rng() % 8;
      LocationProfile r{"Z", {"a"}, random_simplex(rng, k + 1)};
      ThemeMap themes;
      for (std::size_t c = 0; c < k; ++c) {
        if (rng() % 3) themes["T" + std::to_string(rng() % 3)].insert(static_cast<int>(c));
      }
      const auto t = theme_profile(r, themes);
      double sum = t.noise;
      for (const auto& [name, m] : t.themes) sum += m;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("theme map json and suggestion") {
  const ThemeMap m = {{"sport", {0, 2}}, {"crime", {1}}};
  CHECK(theme_map_from_json(to_json(m)) == m);

  ClusterHierarchy h;
  h.nodes = {{"N10", 10, 100, 0.0, false, -1}, {"N11", 11, 60, 0.1, false, -1},
             {"C0", 12, 30, 0.2, true, 0},     {"C1", 13, 30, 0.2, true, 1},
             {"C2", 14, 40, 0.1, true, 2}};
  h.edges = {{0, 1}, {1, 2}, {1, 3}, {0, 4}};
  const auto s = suggest_theme_map(h);
  CHECK(s == ThemeMap{{"N11", {0, 1}}, {"C2", {2}}});
  CHECK_NOTHROW(validate_theme_map(s, 3));
}

TEST_CASE("profile export") {
  const std::vector<LocationProfile> profiles = {{"Z1", {"a", "b"}, {0.1, 0.7, 0.2}},
                                                 {"Z,2", {"c"}, {1.0 / 3.0, 1.0 / 7.0, 1.0 - 1.0 / 3.0 - 1.0 / 7.0}}};
  const ThemeMap themes = {{"T", {1}}};
  SUBCASE("empty csv has a header") {
    std::stringstream ss;
    write_profiles_csv(ss, {});
    CHECK(ss.str() == "location,cluster,prob\n");
    CHECK(read_profiles_csv(ss).empty());
  }
  SUBCASE("csv round-trip") {
    std::stringstream ss;
    write_profiles_csv(ss, profiles);
    const auto back = read_profiles_csv(ss);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(back[i].location_id == profiles[i].location_id);
      REQUIRE(back[i].probs.size() == 3);
      for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(back[i].probs[c] - profiles[i].probs[c]) <= 1e-12);
    }
  }
  SUBCASE("json masses match a recomputation from the csv") {
    std::stringstream ss;
    write_profiles_csv(ss, profiles);
    const auto j = profiles_to_json(profiles, themes);
    for (const auto& p : read_profiles_csv(ss)) {
      const auto& entry = j.at(p.location_id);
      CHECK(entry.at("noise").get<double>() == doctest::Approx(p.probs.back()));
      CHECK(entry.at("themes").at("T").at("mass").get<double>() == doctest::Approx(p.probs[1]));
      CHECK(entry.at("themes").at("other").at("mass").get<double>() == doctest::Approx(p.probs[0]));
    }
    CHECK(profiles_to_json(profiles, themes).at("Z1").at("n_articles") == 2);
  }
  SUBCASE("files and svg") {
    const auto dir = fixtures::temp_dir("profiles");
    export_profiles(dir, "zones", profiles, themes, true);
    CHECK(std::filesystem::exists(dir / "zones.csv"));
    CHECK(std::filesystem::exists(dir / "zones.json"));
    std::size_t svgs = 0;
    for (const auto& f : std::filesystem::directory_iterator(dir / "zones_svg")) {
      std::ifstream in(f.path());
      std::string s((std::istreambuf_iterator<char>(in)), {});
      CHECK(s.rfind("<svg", 0) == 0);
      ++svgs;
    }
    CHECK(svgs == 2);
    CHECK_THROWS_AS(export_profiles("/proc/nonexistent/dir", "x", profiles, themes, false), Error);
  }
}

TEST_CASE("bootstrap variance of a profile shrinks with more articles") {
  std::mt19937_64 rng(5);
  std::vector<ArticleMembership> rows;
  for (int a = 0; a < 400; ++a) rows.push_back(mem("a" + std::to_string(a), random_simplex(rng, 4)));
  const MembershipTable table(rows);
  auto variance_at = [&](std::size_t size) {
    std::vector<double> v;
    for (int rep = 0; rep < 300; ++rep) {
      std::set<std::string> ids;
      while (ids.size() < size) ids.insert(rows[rng() % rows.size()].article_id);
      v.push_back(profile_of_articles("Z", ids, table)->probs[0]);
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    return var / static_cast<double>(v.size() - 1);
  };
  double prev = INFINITY;
  for (std::size_t size : {2, 8, 32, 128}) {
    const double var = variance_at(size);
    CHECK(var < prev);
    prev = var;
  }
}
