#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "newsloc/geoparse.hpp"
#include "newsloc/hdbscan.hpp"

namespace newsloc {

// location id -> ids of the articles that mention it at least once.
using MentionIndex = std::map<std::string, std::set<std::string>>;

MentionIndex zone_mention_index(
    const std::vector<std::pair<std::string, std::vector<LocationMention>>>& article_mentions,
    const Blocklist& blocklist);

// Membership vectors by article id. All vectors share one length.
class MembershipTable {
 public:
  MembershipTable() = default;
  explicit MembershipTable(std::vector<ArticleMembership> memberships);

  const ArticleMembership* find(const std::string& article_id) const;
  std::size_t width() const noexcept { return width_; }
  const std::vector<ArticleMembership>& all() const noexcept { return rows_; }

 private:
  std::vector<ArticleMembership> rows_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t width_ = 0;
};

struct LocationProfile {
  std::string location_id;
  std::vector<std::string> article_ids;  // sorted
  std::vector<double> probs;             // clusters then noise
};

// P_loc(c) = (1/|A_loc|) sum over a in A_loc of P_a(c). Empty A_loc gives
// nullopt. Throws when an article has no membership vector.
std::optional<LocationProfile> profile_of_articles(const std::string& location_id,
                                                   const std::set<std::string>& articles,
                                                   const MembershipTable& memberships);

std::optional<LocationProfile> location_profile(const std::string& location,
                                                const MentionIndex& index,
                                                const MembershipTable& memberships);

// Pools the member zones' article sets (union) before averaging.
std::optional<LocationProfile> neighbourhood_profile(const Neighbourhood& neighbourhood,
                                                     const MentionIndex& zone_index,
                                                     const MembershipTable& memberships);

using ThemeMap = std::map<std::string, std::set<int>>;

// Throws when a cluster id appears in two themes or is out of range.
void validate_theme_map(const ThemeMap& themes, std::size_t n_clusters);
ThemeMap theme_map_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ThemeMap& themes);

// One theme per child of the hierarchy root, named after the child node.
ThemeMap suggest_theme_map(const ClusterHierarchy& hierarchy);

inline constexpr const char* kOtherTheme = "other";

struct ThemeDistribution {
  std::map<std::string, double> themes;  // includes "other" when non-zero
  double noise = 0.0;
};

ThemeDistribution theme_profile(const LocationProfile& profile, const ThemeMap& themes);

// CSV: location,cluster,prob; the noise slot is written as cluster "noise".
void write_profiles_csv(std::ostream& out, const std::vector<LocationProfile>& profiles);
std::vector<LocationProfile> read_profiles_csv(std::istream& in);

// {location: {"n_articles": .., "noise": .., "themes": {theme: {"mass": ..,
// "clusters": {id: prob}}}}}
nlohmann::json profiles_to_json(const std::vector<LocationProfile>& profiles,
                                const ThemeMap& themes);

// Pie chart of the theme distribution, noise as its own wedge.
std::string profile_svg(const LocationProfile& profile, const ThemeMap& themes);

void export_profiles(const std::filesystem::path& dir, const std::string& stem,
                     const std::vector<LocationProfile>& profiles, const ThemeMap& themes,
                     bool svg);

}  // namespace newsloc
