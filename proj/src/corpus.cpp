#include "newsloc/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "newsloc/csv.hpp"
#include "newsloc/error.hpp"
#include "newsloc/text.hpp"

namespace newsloc {

using nlohmann::json;

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "csv") return CorpusFormat::csv;
  throw Error("unknown corpus format '" + std::string(name) + "' (expected jsonl or csv)");
}

bool is_iso_date(std::string_view s) {
  if (s.size() < 10) return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (!text::is_digit(s[i])) return false;
  }
  if (s[4] != '-' || s[7] != '-') return false;
  if (s.size() > 10 && s[10] != 'T' && s[10] != ' ') return false;
  auto num = [&](std::size_t b, std::size_t n) {
    int v = 0;
    for (std::size_t i = b; i < b + n; ++i) v = v * 10 + (s[i] - '0');
    return v;
  };
  const std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)},
                                        std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                        std::chrono::day{static_cast<unsigned>(num(8, 2))}};
  return ymd.ok();
}

std::vector<Span> sentence_spans(std::string_view s) {
  std::vector<Span> spans;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t k = i + 1;
    if (k >= s.size() || !text::is_space(s[k])) continue;
    while (k < s.size() && text::is_space(s[k])) ++k;
    if (k < s.size() && text::is_upper(s[k])) {
      spans.push_back({start, k});
      start = k;
      i = k - 1;
    }
  }
  if (start < s.size()) spans.push_back({start, s.size()});
  return spans;
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  for (const Span& sp : sentence_spans(s)) {
    auto t = text::trim(s.substr(sp.begin, sp.size()));
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

void segment(Article& article) { article.sentences = sentence_spans(article.body); }

namespace {

const std::string& required_string(const json& obj, const char* field, std::size_t record) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    throw RecordError(record, std::string("missing required field \"") + field + "\"");
  }
  if (!it->is_string()) {
    throw RecordError(record, std::string("field \"") + field + "\" must be a string");
  }
  return it->get_ref<const std::string&>();
}

void finish(Article& a, std::size_t record, std::unordered_set<std::string>& seen) {
  if (a.id.empty()) throw RecordError(record, "empty id");
  if (!is_iso_date(a.published)) {
    throw RecordError(record, "date '" + a.published + "' is not an ISO-8601 date");
  }
  if (!seen.insert(a.id).second) throw RecordError(record, "duplicate id '" + a.id + "'");
  segment(a);
}

}  // namespace

std::vector<Article> read_corpus_jsonl(std::istream& in) {
  std::vector<Article> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw RecordError(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw RecordError(lineno, "expected a JSON object");
    Article a;
    a.id = required_string(obj, "id", lineno);
    a.title = required_string(obj, "title", lineno);
    a.body = required_string(obj, "body", lineno);
    a.published = required_string(obj, "date", lineno);
    if (auto it = obj.find("keywords"); it != obj.end() && !it->is_null()) {
      if (!it->is_array()) throw RecordError(lineno, "keywords must be an array");
      for (const auto& k : *it) {
        if (!k.is_string()) throw RecordError(lineno, "keywords must be strings");
        a.keywords.push_back(k.get<std::string>());
      }
    }
    finish(a, lineno, seen);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Article> read_corpus_csv(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> row;
  std::vector<Article> out;
  if (!reader.next(row)) return out;
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < row.size(); ++i) col[text::to_lower(text::trim(row[i]))] = i;
  for (const char* f : {"id", "title", "body", "date"}) {
    if (!col.count(f)) throw RecordError(1, std::string("header lacks column \"") + f + "\"");
  }
  std::unordered_set<std::string> seen;
  while (reader.next(row)) {
    const std::size_t record = reader.line();
    if (row.size() == 1 && row[0].empty()) continue;
    auto field = [&](const char* name) -> const std::string& {
      const std::size_t i = col.at(name);
      if (i >= row.size()) {
        throw RecordError(record, std::string("missing required field \"") + name + "\"");
      }
      return row[i];
    };
    Article a;
    a.id = field("id");
    a.title = field("title");
    a.body = field("body");
    a.published = field("date");
    if (auto it = col.find("keywords"); it != col.end() && it->second < row.size()) {
      std::stringstream ss(row[it->second]);
      std::string kw;
      while (std::getline(ss, kw, ';')) {
        auto t = text::trim(kw);
        if (!t.empty()) a.keywords.emplace_back(t);
      }
    }
    finish(a, record, seen);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Article> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read corpus " + path.string());
  return format == CorpusFormat::jsonl ? read_corpus_jsonl(in) : read_corpus_csv(in);
}

void write_corpus_jsonl(std::ostream& out, const std::vector<Article>& articles) {
  for (const Article& a : articles) {
    json obj{{"id", a.id},
             {"title", a.title},
             {"body", a.body},
             {"date", a.published},
             {"keywords", a.keywords}};
    out << obj.dump() << '\n';
  }
}

std::string sentence_key(std::string_view sentence) { return text::normalize_key(sentence); }

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

DedupResult dedup(const std::vector<Article>& articles, const DedupOptions& options) {
  const std::size_t n = articles.size();

  // Distinct long-enough sentence keys per article.
  std::vector<std::vector<std::string>> keys(n);
  std::unordered_map<std::string, std::size_t> doc_freq;
  for (std::size_t i = 0; i < n; ++i) {
    const Article& a = articles[i];
    std::set<std::string> distinct;
    for (std::size_t s = 0; s < a.sentences.size(); ++s) {
      auto sentence = a.sentence(s);
      if (text::word_count(sentence) < options.min_sentence_words) continue;
      distinct.insert(sentence_key(sentence));
    }
    for (const auto& k : distinct) ++doc_freq[k];
    keys[i].assign(distinct.begin(), distinct.end());
  }

  std::unordered_map<std::string, std::uint32_t> ids;
  std::vector<std::vector<std::uint32_t>> sets(n);
  std::vector<std::vector<std::uint32_t>> postings;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& k : keys[i]) {
      if (doc_freq[k] > options.boilerplate_doc_count) continue;
      auto [it, inserted] = ids.try_emplace(k, static_cast<std::uint32_t>(postings.size()));
      if (inserted) postings.emplace_back();
      sets[i].push_back(it->second);
      postings[it->second].push_back(static_cast<std::uint32_t>(i));
    }
    std::sort(sets[i].begin(), sets[i].end());
  }

  const auto pairs =
      kernels::overlapping_pairs(sets, postings, options.min_shared_fraction, options.exec);

  UnionFind uf(n);
  for (auto [a, b] : pairs) uf.unite(a, b);

  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[uf.find(i)].push_back(i);

  DedupResult result;
  result.report.retrieved_count = n;
  std::vector<char> dropped(n, 0);
  for (auto& [root, members] : groups) {
    if (members.size() < 2) continue;
    auto longer = [&](std::size_t x, std::size_t y) {
      const auto lx = text::utf8_length(articles[x].body);
      const auto ly = text::utf8_length(articles[y].body);
      if (lx != ly) return lx > ly;
      return articles[x].id < articles[y].id;
    };
    const std::size_t keep = *std::min_element(members.begin(), members.end(), longer);
    DuplicateGroup g;
    g.kept_id = articles[keep].id;
    for (std::size_t m : members) {
      if (m == keep) continue;
      dropped[m] = 1;
      g.dropped_ids.push_back(articles[m].id);
    }
    std::sort(g.dropped_ids.begin(), g.dropped_ids.end());
    result.report.duplicate_groups.push_back(std::move(g));
  }
  std::sort(result.report.duplicate_groups.begin(), result.report.duplicate_groups.end(),
            [](const auto& x, const auto& y) { return x.kept_id < y.kept_id; });

  for (std::size_t i = 0; i < n; ++i) {
    if (!dropped[i]) result.unique.push_back(articles[i]);
  }
  result.report.unique_count = result.unique.size();
  return result;
}

json to_json(const DedupReport& report) {
  json groups = json::array();
  for (const auto& g : report.duplicate_groups) {
    groups.push_back({{"kept_id", g.kept_id}, {"dropped_ids", g.dropped_ids}});
  }
  return {{"retrieved_count", report.retrieved_count},
          {"unique_count", report.unique_count},
          {"duplicate_groups", groups}};
}

DedupReport dedup_report_from_json(const json& j) {
  DedupReport r;
  r.retrieved_count = j.at("retrieved_count").get<std::size_t>();
  r.unique_count = j.at("unique_count").get<std::size_t>();
  for (const auto& g : j.at("duplicate_groups")) {
    r.duplicate_groups.push_back(
        {g.at("kept_id").get<std::string>(), g.at("dropped_ids").get<std::vector<std::string>>()});
  }
  return r;
}

}  // namespace newsloc
