#include "newsloc/characterise.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "newsloc/csv.hpp"
#include "newsloc/error.hpp"

namespace newsloc {

using nlohmann::json;

MentionIndex zone_mention_index(
    const std::vector<std::pair<std::string, std::vector<LocationMention>>>& article_mentions,
    const Blocklist& blocklist) {
  MentionIndex index;
  for (const auto& [article_id, mentions] : article_mentions) {
    for (const auto& m : mentions) {
      if (!m.zone_id || blocklist.contains(m.surface)) continue;
      index[*m.zone_id].insert(article_id);
    }
  }
  return index;
}

MembershipTable::MembershipTable(std::vector<ArticleMembership> memberships)
    : rows_(std::move(memberships)) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (i == 0) {
      width_ = rows_[i].probs.size();
    } else if (rows_[i].probs.size() != width_) {
      throw Error("membership vectors differ in length at article " + rows_[i].article_id);
    }
    if (!index_.emplace(rows_[i].article_id, i).second) {
      throw Error("duplicate membership for article " + rows_[i].article_id);
    }
  }
}

const ArticleMembership* MembershipTable::find(const std::string& article_id) const {
  auto it = index_.find(article_id);
  return it == index_.end() ? nullptr : &rows_[it->second];
}

std::optional<LocationProfile> profile_of_articles(const std::string& location_id,
                                                   const std::set<std::string>& articles,
                                                   const MembershipTable& memberships) {
  if (articles.empty()) return std::nullopt;
  LocationProfile profile;
  profile.location_id = location_id;
  profile.probs.assign(memberships.width(), 0.0);
  for (const auto& id : articles) {
    const auto* m = memberships.find(id);
    if (m == nullptr) throw Error("no membership vector for article " + id);
    for (std::size_t c = 0; c < profile.probs.size(); ++c) profile.probs[c] += m->probs[c];
    profile.article_ids.push_back(id);
  }
  const double n = static_cast<double>(articles.size());
  for (double& p : profile.probs) p /= n;
  return profile;
}

std::optional<LocationProfile> location_profile(const std::string& location,
                                                const MentionIndex& index,
                                                const MembershipTable& memberships) {
  auto it = index.find(location);
  if (it == index.end()) return std::nullopt;
  return profile_of_articles(location, it->second, memberships);
}

std::optional<LocationProfile> neighbourhood_profile(const Neighbourhood& neighbourhood,
                                                     const MentionIndex& zone_index,
                                                     const MembershipTable& memberships) {
  std::set<std::string> pooled;
  for (const auto& zone : neighbourhood.zone_ids) {
    if (auto it = zone_index.find(zone); it != zone_index.end()) {
      pooled.insert(it->second.begin(), it->second.end());
    }
  }
  return profile_of_articles(neighbourhood.name, pooled, memberships);
}

void validate_theme_map(const ThemeMap& themes, std::size_t n_clusters) {
  std::map<int, std::string> owner;
  for (const auto& [theme, clusters] : themes) {
    if (theme == kOtherTheme) throw Error("theme name 'other' is reserved");
    for (int c : clusters) {
      if (c < 0 || static_cast<std::size_t>(c) >= n_clusters) {
        throw Error("theme '" + theme + "' references unknown cluster " + std::to_string(c));
      }
      auto [it, inserted] = owner.emplace(c, theme);
      if (!inserted) {
        throw Error("cluster " + std::to_string(c) + " is in both '" + it->second + "' and '" +
                    theme + "'");
      }
    }
  }
}

ThemeMap theme_map_from_json(const json& j) {
  ThemeMap out;
  for (const auto& [theme, clusters] : j.items()) {
    for (const auto& c : clusters) out[theme].insert(c.get<int>());
  }
  return out;
}

json to_json(const ThemeMap& themes) {
  json out = json::object();
  for (const auto& [theme, clusters] : themes) out[theme] = clusters;
  return out;
}

ThemeMap suggest_theme_map(const ClusterHierarchy& hierarchy) {
  ThemeMap out;
  if (hierarchy.nodes.empty()) return out;
  const auto children = hierarchy.children(0);
  if (children.empty()) {
    const auto& root = hierarchy.nodes[0];
    if (root.selected) out[root.name] = {root.cluster_id};
    return out;
  }
  for (std::size_t child : children) {
    auto clusters = hierarchy.clusters_under(child);
    if (clusters.empty()) continue;
    out[hierarchy.nodes[child].name] = std::set<int>(clusters.begin(), clusters.end());
  }
  return out;
}

ThemeDistribution theme_profile(const LocationProfile& profile, const ThemeMap& themes) {
  ThemeDistribution out;
  if (profile.probs.empty()) return out;
  const std::size_t k = profile.probs.size() - 1;
  validate_theme_map(themes, k);
  std::vector<char> assigned(k, 0);
  for (const auto& [theme, clusters] : themes) {
    double mass = 0.0;
    for (int c : clusters) {
      mass += profile.probs[static_cast<std::size_t>(c)];
      assigned[static_cast<std::size_t>(c)] = 1;
    }
    out.themes[theme] = mass;
  }
  double other = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (!assigned[c]) other += profile.probs[c];
  }
  if (other > 0.0) out.themes[kOtherTheme] = other;
  out.noise = profile.probs.back();
  return out;
}

void write_profiles_csv(std::ostream& out, const std::vector<LocationProfile>& profiles) {
  csv::write_row(out, {"location", "cluster", "prob"});
  for (const auto& p : profiles) {
    for (std::size_t c = 0; c < p.probs.size(); ++c) {
      const std::string cluster = c + 1 == p.probs.size() ? "noise" : std::to_string(c);
      csv::write_row(out, {p.location_id, cluster, csv::format_double(p.probs[c])});
    }
  }
}

std::vector<LocationProfile> read_profiles_csv(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> row;
  std::vector<LocationProfile> out;
  if (!reader.next(row)) return out;
  std::map<std::string, std::size_t> position;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 3) throw RecordError(reader.line(), "expected location,cluster,prob");
    auto [it, inserted] = position.emplace(row[0], out.size());
    if (inserted) out.push_back({row[0], {}, {}});
    out[it->second].probs.push_back(std::stod(row[2]));
  }
  return out;
}

json profiles_to_json(const std::vector<LocationProfile>& profiles, const ThemeMap& themes) {
  json out = json::object();
  for (const auto& p : profiles) {
    const auto dist = theme_profile(p, themes);
    json theme_json = json::object();
    std::set<int> assigned;
    for (const auto& [theme, clusters] : themes) {
      json members = json::object();
      for (int c : clusters) {
        members[std::to_string(c)] = p.probs[static_cast<std::size_t>(c)];
        assigned.insert(c);
      }
      theme_json[theme] = {{"mass", dist.themes.at(theme)}, {"clusters", members}};
    }
    if (auto it = dist.themes.find(kOtherTheme); it != dist.themes.end()) {
      json members = json::object();
      for (std::size_t c = 0; c + 1 < p.probs.size(); ++c) {
        if (!assigned.count(static_cast<int>(c))) members[std::to_string(c)] = p.probs[c];
      }
      theme_json[kOtherTheme] = {{"mass", it->second}, {"clusters", members}};
    }
    out[p.location_id] = {{"n_articles", p.article_ids.size()},
                          {"noise", dist.noise},
                          {"themes", theme_json}};
  }
  return out;
}

namespace {

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                    "#edc948", "#b07aa1", "#ff9da7", "#9c755f"};
constexpr const char* kNoiseColour = "#bab0ac";

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string profile_svg(const LocationProfile& profile, const ThemeMap& themes) {
  const auto dist = theme_profile(profile, themes);
  std::vector<std::pair<std::string, double>> wedges(dist.themes.begin(), dist.themes.end());
  wedges.emplace_back("noise", dist.noise);

  constexpr double cx = 120, cy = 120, r = 100;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"420\" height=\"240\">\n";
  svg << "  <title>" << xml_escape(profile.location_id) << "</title>\n";
  double angle = -std::numbers::pi / 2;
  std::size_t colour = 0;
  double legend_y = 30;
  for (const auto& [name, mass] : wedges) {
    const char* fill = name == "noise" ? kNoiseColour : kPalette[colour++ % std::size(kPalette)];
    if (mass > 0.0) {
      if (mass >= 1.0 - 1e-12) {
        svg << "  <circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << r << "\" fill=\""
            << fill << "\"/>\n";
      } else {
        const double sweep = 2 * std::numbers::pi * mass;
        const double x0 = cx + r * std::cos(angle), y0 = cy + r * std::sin(angle);
        const double x1 = cx + r * std::cos(angle + sweep), y1 = cy + r * std::sin(angle + sweep);
        svg << "  <path d=\"M" << cx << "," << cy << " L" << x0 << "," << y0 << " A" << r << ","
            << r << " 0 " << (sweep > std::numbers::pi ? 1 : 0) << " 1 " << x1 << "," << y1
            << " Z\" fill=\"" << fill << "\"/>\n";
      }
      angle += 2 * std::numbers::pi * mass;
    }
    svg << "  <rect x=\"250\" y=\"" << legend_y - 10 << "\" width=\"12\" height=\"12\" fill=\""
        << fill << "\"/>\n";
    char pct[16];
    std::snprintf(pct, sizeof pct, "%.1f%%", 100.0 * mass);
    svg << "  <text x=\"268\" y=\"" << legend_y << "\" font-size=\"12\">" << xml_escape(name)
        << " " << pct << "</text>\n";
    legend_y += 18;
  }
  svg << "</svg>\n";
  return svg.str();
}

void export_profiles(const std::filesystem::path& dir, const std::string& stem,
                     const std::vector<LocationProfile>& profiles, const ThemeMap& themes,
                     bool svg) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / (stem + ".csv"));
    write_profiles_csv(out, profiles);
  }
  {
    std::ofstream out(dir / (stem + ".json"));
    out << profiles_to_json(profiles, themes).dump(2) << "\n";
  }
  if (!svg) return;
  const auto svg_dir = dir / (stem + "_svg");
  std::filesystem::create_directories(svg_dir);
  for (const auto& p : profiles) {
    std::string file;
    for (char c : p.location_id) file += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    std::ofstream out(svg_dir / (file + ".svg"));
    out << profile_svg(p, themes);
  }
}

}  // namespace newsloc
