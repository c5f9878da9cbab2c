#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "newsloc/corpus.hpp"

namespace newsloc {

enum class PlaceKind { settlement, street, building, park, other };

PlaceKind parse_place_kind(std::string_view s);
std::string_view to_string(PlaceKind kind);
// Default priority when a gazetteer record leaves it blank.
int default_priority(PlaceKind kind);

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
};

inline constexpr double kEarthRadiusMetres = 6'371'000.0;

double haversine_metres(GeoPoint a, GeoPoint b);

struct GazetteerRecord {
  std::string id;
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
  std::string postcode_district;
  PlaceKind kind = PlaceKind::other;
  std::optional<int> priority;
};

struct GazetteerEntry {
  std::string id;
  std::string name;
  GeoPoint point;
  std::string postcode_district;
  PlaceKind kind = PlaceKind::other;
  int priority = 0;  // lower is preferred
};

struct RejectedRecord {
  std::size_t index = 0;  // position in the input record list
  std::string id;
  std::string reason;
};

// Immutable after construction; lookups are keyed on the lowercased,
// word-tokenized name.
class Gazetteer {
 public:
  Gazetteer() = default;

  const std::vector<GazetteerEntry>& entries() const noexcept { return entries_; }
  const std::vector<RejectedRecord>& rejected() const noexcept { return rejected_; }
  bool empty() const noexcept { return entries_.empty(); }

  // Entry indices whose name key equals `key`, best priority first.
  const std::vector<std::size_t>* candidates(const std::string& key) const;
  const GazetteerEntry* find_id(std::string_view id) const;

  std::size_t max_name_tokens() const noexcept { return max_tokens_; }

  // Bounding box over all entries, {south-west, north-east}.
  std::pair<GeoPoint, GeoPoint> bounds() const;

 private:
  friend Gazetteer build_gazetteer(const std::vector<GazetteerRecord>& records);

  std::vector<GazetteerEntry> entries_;
  std::vector<RejectedRecord> rejected_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_key_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::size_t max_tokens_ = 0;
};

// One entry per (name key, postcode district): the lowest priority value
// wins, then the lowest id. Records with out-of-range or non-finite
// coordinates are rejected with a reason.
Gazetteer build_gazetteer(const std::vector<GazetteerRecord>& records);

// CSV columns: id,name,lat,lon,postcode_district,kind,priority
std::vector<GazetteerRecord> read_gazetteer_csv(std::istream& in);
std::vector<GazetteerRecord> load_gazetteer_records(const std::filesystem::path& path);

// A word token: maximal run of letters, digits, apostrophes or non-ASCII
// bytes, with leading and trailing apostrophes excluded.
struct WordToken {
  Span span;
  std::string lower;
};

std::vector<WordToken> word_tokens(std::string_view text);

// Lowercased word tokens joined by single spaces.
std::string name_key(std::string_view name);

enum class TextField { title, body };

std::string_view to_string(TextField field);

struct LocationMention {
  std::string article_id;
  TextField field = TextField::body;
  Span span;
  std::string surface;
  std::string key;  // name_key(surface)
  std::optional<std::string> entry_id;
  std::optional<std::string> zone_id;
};

// Case-insensitive longest match over word-token sequences of the title and
// then the body. Competing overlaps go to the longer match (in tokens, then
// bytes), then to the earlier start. Sorted by (field, start).
std::vector<LocationMention> find_mentions(const Article& article, const Gazetteer& gazetteer);

// Blocklist of broad surfaces, compared by name key.
class Blocklist {
 public:
  Blocklist() = default;
  explicit Blocklist(const std::vector<std::string>& surfaces);

  bool contains(std::string_view surface) const;
  bool empty() const noexcept { return keys_.empty(); }

  static Blocklist defaults();

 private:
  std::set<std::string> keys_;
};

Blocklist load_blocklist(const std::filesystem::path& path);

// Context disambiguation. Every distinct surface key starts at its
// priority-best candidate; one coordinate-descent round then visits the
// ambiguous keys in order of first occurrence and moves each to the
// candidate minimising the summed great-circle distance to the current
// choices of all other keys. Ties keep the priority order. Broad surfaces
// are resolved but take no part in the context of other surfaces.
void resolve(std::vector<LocationMention>& mentions, const Gazetteer& gazetteer,
             const Blocklist& broad = {});

struct DataZone {
  std::string id;
  std::string name;
  std::vector<GeoPoint> ring;  // closed: front == back
  std::optional<std::int64_t> crime_rate;
};

void validate_zone(const DataZone& zone);

// Point-in-polygon over a fixed set of zones. Lookup is by even-odd ray
// casting in (lon, lat); a point on the boundary of one or more zones
// belongs to the touching zone with the smallest id.
class ZoneIndex {
 public:
  explicit ZoneIndex(std::vector<DataZone> zones);

  const std::vector<DataZone>& zones() const noexcept { return zones_; }
  const DataZone* find(std::string_view id) const;

  std::optional<std::string> assign(GeoPoint point) const;

 private:
  struct Box {
    double min_lat, max_lat, min_lon, max_lon;
  };
  std::vector<DataZone> zones_;  // sorted by id
  std::vector<Box> boxes_;
};

bool on_ring_boundary(GeoPoint p, const std::vector<GeoPoint>& ring);
bool ray_cast_inside(GeoPoint p, const std::vector<GeoPoint>& ring);

std::optional<std::string> assign_data_zone(GeoPoint point, const std::vector<DataZone>& zones);

// Fills `zone_id` for every resolved mention.
void assign_zones(std::vector<LocationMention>& mentions, const Gazetteer& gazetteer,
                  const ZoneIndex& zones);

// GeoJSON FeatureCollection of Polygon features with properties id, name and
// crime_rate (null when suppressed). Only the outer ring is read.
std::vector<DataZone> read_zones_geojson(const nlohmann::json& doc);
std::vector<DataZone> load_zones(const std::filesystem::path& path);
nlohmann::json zones_to_geojson(const std::vector<DataZone>& zones);


// Resolved, zoned mentions per zone, broad mentions excluded.
std::map<std::string, std::size_t> zone_mention_counts(const std::vector<LocationMention>& mentions,
                                                       const Blocklist& blocklist);

struct Neighbourhood {
  std::string name;
  std::vector<std::string> zone_ids;  // sorted
};

// "Oxgangs - 01" -> "Oxgangs"; names without the suffix are returned trimmed.
std::string base_zone_name(std::string_view zone_name);

// Sorted by name.
std::vector<Neighbourhood> rollup_neighbourhoods(const std::vector<DataZone>& zones);

// Mentions file: one JSON object per article.
nlohmann::json mentions_to_json(const std::string& article_id,
                                const std::vector<LocationMention>& mentions);
std::vector<LocationMention> mentions_from_json(const nlohmann::json& j);

}  // namespace newsloc
