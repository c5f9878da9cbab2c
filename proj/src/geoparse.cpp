#include "newsloc/geoparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <regex>
#include <unordered_set>

#include "newsloc/csv.hpp"
#include "newsloc/error.hpp"
#include "newsloc/text.hpp"

namespace newsloc {

using nlohmann::json;

PlaceKind parse_place_kind(std::string_view s) {
  const std::string k = text::to_lower(text::trim(s));
  if (k == "settlement") return PlaceKind::settlement;
  if (k == "street") return PlaceKind::street;
  if (k == "building") return PlaceKind::building;
  if (k == "park") return PlaceKind::park;
  return PlaceKind::other;
}

std::string_view to_string(PlaceKind kind) {
  switch (kind) {
    case PlaceKind::settlement: return "settlement";
    case PlaceKind::street: return "street";
    case PlaceKind::building: return "building";
    case PlaceKind::park: return "park";
    case PlaceKind::other: return "other";
  }
  return "other";
}

int default_priority(PlaceKind kind) { return static_cast<int>(kind); }

double haversine_metres(GeoPoint a, GeoPoint b) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * rad;
  const double dlon = (b.lon - a.lon) * rad;
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadiusMetres * std::asin(std::min(1.0, std::sqrt(s)));
}

// ---------------------------------------------------------------------------
// Tokens and gazetteer

std::vector<WordToken> word_tokens(std::string_view s) {
  std::vector<WordToken> out;
  std::size_t i = 0;
  auto word_char = [](char c) { return text::is_alnum(c) || c == '\''; };
  while (i < s.size()) {
    while (i < s.size() && !word_char(s[i])) ++i;
    std::size_t b = i;
    while (i < s.size() && word_char(s[i])) ++i;
    std::size_t e = i;
    while (b < e && s[b] == '\'') ++b;
    while (e > b && s[e - 1] == '\'') --e;
    if (e > b) out.push_back({{b, e}, text::to_lower(s.substr(b, e - b))});
  }
  return out;
}

std::string name_key(std::string_view name) {
  std::string key;
  for (const auto& t : word_tokens(name)) {
    if (!key.empty()) key.push_back(' ');
    key += t.lower;
  }
  return key;
}

const std::vector<std::size_t>* Gazetteer::candidates(const std::string& key) const {
  auto it = by_key_.find(key);
  return it == by_key_.end() ? nullptr : &it->second;
}

const GazetteerEntry* Gazetteer::find_id(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &entries_[it->second];
}

std::pair<GeoPoint, GeoPoint> Gazetteer::bounds() const {
  GeoPoint lo{90.0, 180.0};
  GeoPoint hi{-90.0, -180.0};
  for (const auto& e : entries_) {
    lo.lat = std::min(lo.lat, e.point.lat);
    lo.lon = std::min(lo.lon, e.point.lon);
    hi.lat = std::max(hi.lat, e.point.lat);
    hi.lon = std::max(hi.lon, e.point.lon);
  }
  return {lo, hi};
}

Gazetteer build_gazetteer(const std::vector<GazetteerRecord>& records) {
  Gazetteer g;
  // (key, district) -> best record so far
  std::map<std::pair<std::string, std::string>, std::size_t> best;
  auto rank = [&](std::size_t i) {
    const auto& r = records[i];
    return std::make_pair(r.priority.value_or(default_priority(r.kind)), r.id);
  };
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    std::string reason;
    if (r.id.empty()) {
      reason = "empty id";
    } else if (!std::isfinite(r.lat) || r.lat < -90.0 || r.lat > 90.0) {
      reason = "latitude out of range";
    } else if (!std::isfinite(r.lon) || r.lon < -180.0 || r.lon > 180.0) {
      reason = "longitude out of range";
    } else if (name_key(r.name).empty()) {
      reason = "name has no word tokens";
    }
    if (!reason.empty()) {
      g.rejected_.push_back({i, r.id, reason});
      continue;
    }
    auto key = std::make_pair(name_key(r.name), r.postcode_district);
    auto [it, inserted] = best.try_emplace(key, i);
    if (!inserted && rank(i) < rank(it->second)) it->second = i;
  }

  std::unordered_set<std::string> ids;
  for (const auto& [key, i] : best) {
    const auto& r = records[i];
    if (!ids.insert(r.id).second) {
      g.rejected_.push_back({i, r.id, "duplicate id"});
      continue;
    }
    g.entries_.push_back({r.id, r.name, {r.lat, r.lon}, r.postcode_district, r.kind,
                          r.priority.value_or(default_priority(r.kind))});
  }
  std::sort(g.entries_.begin(), g.entries_.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < g.entries_.size(); ++i) {
    const auto& e = g.entries_[i];
    const std::string key = name_key(e.name);
    g.by_key_[key].push_back(i);
    g.by_id_[e.id] = i;
    g.max_tokens_ = std::max(g.max_tokens_, word_tokens(e.name).size());
  }
  for (auto& [key, list] : g.by_key_) {
    std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      const auto& x = g.entries_[a];
      const auto& y = g.entries_[b];
      return std::tie(x.priority, x.id) < std::tie(y.priority, y.id);
    });
  }
  std::sort(g.rejected_.begin(), g.rejected_.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  return g;
}

namespace {

double parse_double(const std::string& s, std::size_t record, const char* field) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw RecordError(record, std::string("field ") + field + " is not a number: '" + s + "'");
  }
}

}  // namespace

std::vector<GazetteerRecord> read_gazetteer_csv(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> row;
  std::vector<GazetteerRecord> out;
  if (!reader.next(row)) return out;
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < row.size(); ++i) col[text::to_lower(text::trim(row[i]))] = i;
  for (const char* f : {"id", "name", "lat", "lon", "postcode_district"}) {
    if (!col.count(f)) throw RecordError(1, std::string("header lacks column \"") + f + "\"");
  }
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    const std::size_t rec = reader.line();
    auto get = [&](const char* name) -> std::string {
      auto it = col.find(name);
      if (it == col.end() || it->second >= row.size()) return {};
      return std::string(text::trim(row[it->second]));
    };
    GazetteerRecord r;
    r.id = get("id");
    r.name = get("name");
    r.lat = parse_double(get("lat"), rec, "lat");
    r.lon = parse_double(get("lon"), rec, "lon");
    r.postcode_district = get("postcode_district");
    r.kind = parse_place_kind(get("kind"));
    if (auto p = get("priority"); !p.empty()) {
      r.priority = static_cast<int>(parse_double(p, rec, "priority"));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<GazetteerRecord> load_gazetteer_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read gazetteer " + path.string());
  return read_gazetteer_csv(in);
}

// ---------------------------------------------------------------------------
// Mentions

std::string_view to_string(TextField field) { return field == TextField::title ? "title" : "body"; }

namespace {

void mentions_in(const Article& article, TextField field, const Gazetteer& gazetteer,
                 std::vector<LocationMention>& out) {
  const std::string& text = field == TextField::title ? article.title : article.body;
  const auto tokens = word_tokens(text);
  struct Match {
    std::size_t start, length, bytes;
  };
  std::vector<Match> matches;
  const std::size_t max_len = gazetteer.max_name_tokens();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string key;
    for (std::size_t len = 1; len <= max_len && i + len <= tokens.size(); ++len) {
      if (len > 1) key.push_back(' ');
      key += tokens[i + len - 1].lower;
      if (gazetteer.candidates(key)) {
        matches.push_back({i, len, tokens[i + len - 1].span.end - tokens[i].span.begin});
      }
    }
  }
  std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
    if (a.length != b.length) return a.length > b.length;
    if (a.bytes != b.bytes) return a.bytes > b.bytes;
    return a.start < b.start;
  });
  std::vector<char> taken(tokens.size(), 0);
  std::vector<Match> chosen;
  for (const Match& m : matches) {
    bool free = true;
    for (std::size_t t = m.start; t < m.start + m.length; ++t) free = free && !taken[t];
    if (!free) continue;
    for (std::size_t t = m.start; t < m.start + m.length; ++t) taken[t] = 1;
    chosen.push_back(m);
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const Match& a, const Match& b) { return a.start < b.start; });
  for (const Match& m : chosen) {
    LocationMention mention;
    mention.article_id = article.id;
    mention.field = field;
    mention.span = {tokens[m.start].span.begin, tokens[m.start + m.length - 1].span.end};
    mention.surface = text.substr(mention.span.begin, mention.span.size());
    mention.key = name_key(mention.surface);
    out.push_back(std::move(mention));
  }
}

}  // namespace

std::vector<LocationMention> find_mentions(const Article& article, const Gazetteer& gazetteer) {
  std::vector<LocationMention> out;
  if (gazetteer.empty()) return out;
  mentions_in(article, TextField::title, gazetteer, out);
  mentions_in(article, TextField::body, gazetteer, out);
  return out;
}

void resolve(std::vector<LocationMention>& mentions, const Gazetteer& gazetteer,
             const Blocklist& broad) {
  std::vector<std::string> keys;  // first-occurrence order
  std::map<std::string, std::size_t> slot;
  for (const auto& m : mentions) {
    if (slot.try_emplace(m.key, keys.size()).second) keys.push_back(m.key);
  }
  std::vector<const std::vector<std::size_t>*> cands(keys.size());
  std::vector<std::size_t> choice(keys.size(), 0);  // entry index
  std::vector<char> context(keys.size(), 0);
  for (std::size_t k = 0; k < keys.size(); ++k) {
    cands[k] = gazetteer.candidates(keys[k]);
    if (cands[k]) {
      choice[k] = cands[k]->front();
      context[k] = !broad.contains(keys[k]);
    }
  }
  const auto& entries = gazetteer.entries();
  for (std::size_t k = 0; k < keys.size(); ++k) {
    if (!cands[k] || cands[k]->size() < 2) continue;
    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t best = choice[k];
    for (std::size_t c : *cands[k]) {
      double cost = 0.0;
      for (std::size_t o = 0; o < keys.size(); ++o) {
        if (o == k || !context[o]) continue;
        cost += haversine_metres(entries[c].point, entries[choice[o]].point);
      }
      if (cost < best_cost) {
        best_cost = cost;
        best = c;
      }
    }
    choice[k] = best;
  }
  for (auto& m : mentions) {
    const std::size_t k = slot.at(m.key);
    if (cands[k]) {
      m.entry_id = entries[choice[k]].id;
    } else {
      m.entry_id.reset();
    }
  }
}

// ---------------------------------------------------------------------------
// Zones

namespace {

bool segments_cross(GeoPoint a, GeoPoint b, GeoPoint c, GeoPoint d) {
  auto orient = [](GeoPoint p, GeoPoint q, GeoPoint r) {
    const double v = (q.lon - p.lon) * (r.lat - p.lat) - (q.lat - p.lat) * (r.lon - p.lon);
    return (v > 0) - (v < 0);
  };
  const int o1 = orient(a, b, c);
  const int o2 = orient(a, b, d);
  const int o3 = orient(c, d, a);
  const int o4 = orient(c, d, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

}  // namespace

void validate_zone(const DataZone& z) {
  const std::string who = "zone '" + z.id + "'";
  if (z.id.empty()) throw Error("zone with empty id");
  if (z.ring.size() < 4) throw Error(who + ": ring needs at least 4 vertices");
  const auto& f = z.ring.front();
  const auto& l = z.ring.back();
  if (f.lat != l.lat || f.lon != l.lon) throw Error(who + ": ring is not closed");
  for (const auto& p : z.ring) {
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || std::abs(p.lat) > 90.0 ||
        std::abs(p.lon) > 180.0) {
      throw Error(who + ": vertex out of range");
    }
  }
  if (z.crime_rate && *z.crime_rate < 0) throw Error(who + ": negative crime_rate");
  const std::size_t edges = z.ring.size() - 1;
  for (std::size_t i = 0; i < edges; ++i) {
    for (std::size_t j = i + 2; j < edges; ++j) {
      if (i == 0 && j == edges - 1) continue;
      if (segments_cross(z.ring[i], z.ring[i + 1], z.ring[j], z.ring[j + 1])) {
        throw Error(who + ": ring self-intersects");
      }
    }
  }
}

bool on_ring_boundary(GeoPoint p, const std::vector<GeoPoint>& ring) {
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const GeoPoint a = ring[i];
    const GeoPoint b = ring[i + 1];
    if (p.lon < std::min(a.lon, b.lon) || p.lon > std::max(a.lon, b.lon) ||
        p.lat < std::min(a.lat, b.lat) || p.lat > std::max(a.lat, b.lat)) {
      continue;
    }
    const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    const double len = std::hypot(b.lon - a.lon, b.lat - a.lat);
    if (std::abs(cross) <= 1e-12 * std::max(len, 1e-300)) return true;
  }
  return false;
}

bool ray_cast_inside(GeoPoint p, const std::vector<GeoPoint>& ring) {
  bool inside = false;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const GeoPoint a = ring[i];
    const GeoPoint b = ring[i + 1];
    if ((a.lat > p.lat) != (b.lat > p.lat)) {
      const double x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
      if (p.lon < x) inside = !inside;
    }
  }
  return inside;
}

ZoneIndex::ZoneIndex(std::vector<DataZone> zones) : zones_(std::move(zones)) {
  std::sort(zones_.begin(), zones_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < zones_.size(); ++i) {
    if (zones_[i].id == zones_[i - 1].id) throw Error("duplicate zone id '" + zones_[i].id + "'");
  }
  boxes_.reserve(zones_.size());
  for (const auto& z : zones_) {
    validate_zone(z);
    Box b{90.0, -90.0, 180.0, -180.0};
    for (const auto& p : z.ring) {
      b.min_lat = std::min(b.min_lat, p.lat);
      b.max_lat = std::max(b.max_lat, p.lat);
      b.min_lon = std::min(b.min_lon, p.lon);
      b.max_lon = std::max(b.max_lon, p.lon);
    }
    boxes_.push_back(b);
  }
}

const DataZone* ZoneIndex::find(std::string_view id) const {
  auto it = std::lower_bound(zones_.begin(), zones_.end(), id,
                             [](const DataZone& z, std::string_view v) { return z.id < v; });
  return it != zones_.end() && it->id == id ? &*it : nullptr;
}

std::optional<std::string> ZoneIndex::assign(GeoPoint p) const {
  auto in_box = [&](std::size_t i) {
    const Box& b = boxes_[i];
    return p.lat >= b.min_lat && p.lat <= b.max_lat && p.lon >= b.min_lon && p.lon <= b.max_lon;
  };
  // Zones are id-sorted, so the first hit is the smallest id.
  for (std::size_t i = 0; i < zones_.size(); ++i) {
    if (in_box(i) && on_ring_boundary(p, zones_[i].ring)) return zones_[i].id;
  }
  for (std::size_t i = 0; i < zones_.size(); ++i) {
    if (in_box(i) && ray_cast_inside(p, zones_[i].ring)) return zones_[i].id;
  }
  return std::nullopt;
}

std::optional<std::string> assign_data_zone(GeoPoint point, const std::vector<DataZone>& zones) {
  return ZoneIndex(zones).assign(point);
}

void assign_zones(std::vector<LocationMention>& mentions, const Gazetteer& gazetteer,
                  const ZoneIndex& zones) {
  for (auto& m : mentions) {
    m.zone_id.reset();
    if (!m.entry_id) continue;
    if (const auto* e = gazetteer.find_id(*m.entry_id)) m.zone_id = zones.assign(e->point);
  }
}

std::vector<DataZone> read_zones_geojson(const json& doc) {
  if (doc.value("type", "") != "FeatureCollection") {
    throw Error("zones file must be a GeoJSON FeatureCollection");
  }
  std::vector<DataZone> zones;
  std::size_t index = 0;
  for (const auto& f : doc.at("features")) {
    ++index;
    const auto& geom = f.at("geometry");
    if (geom.value("type", "") != "Polygon") {
      throw RecordError(index, "zone geometry must be a Polygon");
    }
    const auto& props = f.at("properties");
    DataZone z;
    const auto& id = props.at("id");
    z.id = id.is_string() ? id.get<std::string>() : id.dump();
    z.name = props.value("name", z.id);
    if (auto it = props.find("crime_rate"); it != props.end() && !it->is_null()) {
      const double v = it->get<double>();
      if (v < 0 || v != std::floor(v)) {
        throw RecordError(index, "crime_rate must be a non-negative integer");
      }
      z.crime_rate = static_cast<std::int64_t>(v);
    }
    for (const auto& c : geom.at("coordinates").at(0)) {
      z.ring.push_back({c.at(1).get<double>(), c.at(0).get<double>()});
    }
    try {
      validate_zone(z);
    } catch (const Error& e) {
      throw RecordError(index, e.what());
    }
    zones.push_back(std::move(z));
  }
  return zones;
}

std::vector<DataZone> load_zones(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read zones " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("zones file " + path.string() + ": " + e.what());
  }
  return read_zones_geojson(doc);
}

json zones_to_geojson(const std::vector<DataZone>& zones) {
  json features = json::array();
  for (const auto& z : zones) {
    json ring = json::array();
    for (const auto& p : z.ring) ring.push_back({p.lon, p.lat});
    features.push_back(
        {{"type", "Feature"},
         {"properties",
          {{"id", z.id},
           {"name", z.name},
           {"crime_rate", z.crime_rate ? json(*z.crime_rate) : json(nullptr)}}},
         {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

// ---------------------------------------------------------------------------
// Blocklist, counts, neighbourhoods

Blocklist::Blocklist(const std::vector<std::string>& surfaces) {
  for (const auto& s : surfaces) {
    auto k = name_key(s);
    if (!k.empty()) keys_.insert(std::move(k));
  }
}

bool Blocklist::contains(std::string_view surface) const {
  return !keys_.empty() && keys_.count(name_key(surface)) > 0;
}

Blocklist Blocklist::defaults() { return Blocklist({"Edinburgh"}); }

Blocklist load_blocklist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read blocklist " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (!t.empty() && t.front() != '#') lines.emplace_back(t);
  }
  return Blocklist(lines);
}

std::map<std::string, std::size_t> zone_mention_counts(const std::vector<LocationMention>& mentions,
                                                       const Blocklist& blocklist) {
  std::map<std::string, std::size_t> counts;
  for (const auto& m : mentions) {
    if (!m.entry_id || !m.zone_id || blocklist.contains(m.surface)) continue;
    ++counts[*m.zone_id];
  }
  return counts;
}

std::string base_zone_name(std::string_view zone_name) {
  static const std::regex suffix(R"(^(.*\S)\s+-\s+[0-9]+$)");
  const std::string trimmed(text::trim(zone_name));
  std::smatch m;
  if (std::regex_match(trimmed, m, suffix)) return m[1].str();
  return trimmed;
}

std::vector<Neighbourhood> rollup_neighbourhoods(const std::vector<DataZone>& zones) {
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& z : zones) groups[base_zone_name(z.name)].push_back(z.id);
  std::vector<Neighbourhood> out;
  for (auto& [name, ids] : groups) {
    std::sort(ids.begin(), ids.end());
    out.push_back({name, std::move(ids)});
  }
  return out;
}

json mentions_to_json(const std::string& article_id, const std::vector<LocationMention>& mentions) {
  json list = json::array();
  for (const auto& m : mentions) {
    list.push_back({{"field", to_string(m.field)},
                    {"begin", m.span.begin},
                    {"end", m.span.end},
                    {"surface", m.surface},
                    {"entry_id", m.entry_id ? json(*m.entry_id) : json(nullptr)},
                    {"zone_id", m.zone_id ? json(*m.zone_id) : json(nullptr)}});
  }
  return {{"article_id", article_id}, {"mentions", list}};
}

std::vector<LocationMention> mentions_from_json(const json& j) {
  std::vector<LocationMention> out;
  const auto id = j.at("article_id").get<std::string>();
  for (const auto& m : j.at("mentions")) {
    LocationMention lm;
    lm.article_id = id;
    lm.field = m.at("field").get<std::string>() == "title" ? TextField::title : TextField::body;
    lm.span = {m.at("begin").get<std::size_t>(), m.at("end").get<std::size_t>()};
    lm.surface = m.at("surface").get<std::string>();
    lm.key = name_key(lm.surface);
    if (!m.at("entry_id").is_null()) lm.entry_id = m.at("entry_id").get<std::string>();
    if (!m.at("zone_id").is_null()) lm.zone_id = m.at("zone_id").get<std::string>();
    out.push_back(std::move(lm));
  }
  return out;
}

}  // namespace newsloc
