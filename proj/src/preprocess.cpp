#include "newsloc/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "newsloc/csv.hpp"
#include "newsloc/error.hpp"
#include "newsloc/text.hpp"

namespace newsloc {

namespace {

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

}  // namespace

std::vector<std::string> normalize(std::string_view s) {
  std::vector<std::string> out;
  for (std::string_view raw : text::split_whitespace(s)) {
    if (text::utf8_length(raw) > kMaxTokenLength) continue;
    std::size_t b = 0;
    std::size_t e = raw.size();
    while (b < e && is_ascii_punct(raw[b])) ++b;
    while (e > b && is_ascii_punct(raw[e - 1])) --e;
    if (e > b) out.push_back(text::to_lower(raw.substr(b, e - b)));
  }
  return out;
}

PosCategory parse_pos_category(std::string_view s) {
  static const std::pair<std::string_view, PosCategory> names[] = {
      {"determiner", PosCategory::determiner}, {"det", PosCategory::determiner},
      {"conjunction", PosCategory::conjunction}, {"cconj", PosCategory::conjunction},
      {"sconj", PosCategory::conjunction},     {"symbol", PosCategory::symbol},
      {"sym", PosCategory::symbol},            {"pronoun", PosCategory::pronoun},
      {"pron", PosCategory::pronoun},          {"adverb", PosCategory::adverb},
      {"adv", PosCategory::adverb},            {"adposition", PosCategory::adposition},
      {"adp", PosCategory::adposition},        {"auxiliary", PosCategory::auxiliary},
      {"aux", PosCategory::auxiliary},         {"noun", PosCategory::noun},
      {"propn", PosCategory::noun},            {"verb", PosCategory::verb},
      {"adjective", PosCategory::adjective},   {"adj", PosCategory::adjective},
      {"numeral", PosCategory::numeral},       {"num", PosCategory::numeral},
      {"particle", PosCategory::particle},     {"part", PosCategory::particle},
      {"interjection", PosCategory::interjection}, {"intj", PosCategory::interjection},
  };
  const std::string key = text::to_lower(text::trim(s));
  for (const auto& [name, cat] : names) {
    if (key == name) return cat;
  }
  return PosCategory::other;
}

bool is_removed_category(PosCategory c) {
  switch (c) {
    case PosCategory::determiner:
    case PosCategory::conjunction:
    case PosCategory::symbol:
    case PosCategory::pronoun:
    case PosCategory::adverb:
    case PosCategory::adposition:
    case PosCategory::auxiliary:
      return true;
    default:
      return false;
  }
}

void FunctionWordLexicon::add(std::string word, PosCategory category) {
  words_[text::to_lower(word)].insert(category);
}

bool FunctionWordLexicon::removable(const std::string& word) const {
  auto it = words_.find(word);
  if (it == words_.end()) return false;
  return std::all_of(it->second.begin(), it->second.end(), is_removed_category);
}

const FunctionWordLexicon& FunctionWordLexicon::builtin() {
  static const FunctionWordLexicon lexicon = [] {
    FunctionWordLexicon lx;
    auto add_all = [&](PosCategory c, std::initializer_list<const char*> words) {
      for (const char* w : words) lx.add(w, c);
    };
    add_all(PosCategory::determiner,
            {"a", "an", "the", "this", "that", "these", "those", "each", "every", "some", "any",
             "no", "all", "both", "either", "neither", "another", "such", "what", "which",
             "whose", "whatever", "whichever", "much", "many", "few", "several", "enough"});
    add_all(PosCategory::conjunction,
            {"and", "or", "but", "nor", "so", "yet", "for", "because", "although", "though",
             "while", "whilst", "if", "unless", "since", "whether", "than", "as", "that",
             "once", "until", "whereas", "either", "neither", "both", "plus"});
    add_all(PosCategory::pronoun,
            {"i",        "me",      "my",        "mine",       "myself",   "you",
             "your",     "yours",   "yourself",  "yourselves", "he",       "him",
             "his",      "himself", "she",       "her",        "hers",     "herself",
             "it",       "its",     "itself",    "we",         "us",       "our",
             "ours",     "ourselves", "they",    "them",       "their",    "theirs",
             "themselves", "who",   "whom",      "whose",      "which",    "what",
             "this",     "that",    "these",     "those",      "someone",  "somebody",
             "something", "anyone", "anybody",   "anything",   "everyone", "everybody",
             "everything", "nobody", "nothing",  "none",       "one",      "oneself",
             "each",     "all",     "some",      "many",       "few",      "both"});
    add_all(PosCategory::adverb,
            {"very",    "also",    "just",   "not",   "never",   "always", "often",
             "still",   "already", "now",    "then",  "here",    "there",  "soon",
             "too",     "quite",   "rather", "really", "again",  "even",   "only",
             "ever",    "however", "perhaps", "almost", "maybe", "nearly", "later",
             "sometimes", "usually", "indeed", "instead", "therefore", "thus", "meanwhile",
             "otherwise", "where",  "when",   "why",   "how",     "well",   "so",
             "up",      "down",    "out",    "off",   "over",    "away",   "back",
             "around",  "before",  "after",  "once",  "ago",     "yet",    "n't"});
    add_all(PosCategory::adposition,
            {"in",      "on",      "at",       "by",      "with",    "from",   "to",
             "of",      "for",     "about",    "into",    "onto",    "over",   "under",
             "after",   "before",  "between",  "through", "during",  "without", "within",
             "against", "among",   "across",   "behind",  "near",    "since",  "until",
             "upon",    "around",  "off",      "up",      "down",    "out",    "via",
             "towards", "toward",  "beside",   "besides", "beyond",  "despite", "except",
             "inside",  "outside", "throughout", "per",   "along",   "amid",   "above",
             "below",   "beneath", "like",     "unlike",  "as",      "than"});
    add_all(PosCategory::auxiliary,
            {"be",     "is",    "am",     "are",   "was",   "were",  "been",   "being",
             "have",   "has",   "had",    "having", "do",   "does",  "did",    "will",
             "would",  "shall", "should", "can",   "could", "may",   "might",  "must",
             "'s",     "'re",   "'ve",    "'ll",   "'d",    "wo",    "ca"});
    add_all(PosCategory::symbol, {"&", "%", "$", "+", "=", "#", "@", "*", "/", "-", "--"});
    // Words that also take content categories are kept.
    lx.add("have", PosCategory::verb);
    lx.add("has", PosCategory::verb);
    lx.add("had", PosCategory::verb);
    lx.add("do", PosCategory::verb);
    lx.add("does", PosCategory::verb);
    lx.add("did", PosCategory::verb);
    lx.add("will", PosCategory::noun);
    lx.add("well", PosCategory::noun);
    lx.add("well", PosCategory::adjective);
    lx.add("like", PosCategory::verb);
    lx.add("back", PosCategory::noun);
    lx.add("one", PosCategory::numeral);
    lx.add("can", PosCategory::noun);
    lx.add("may", PosCategory::noun);
    lx.add("might", PosCategory::noun);
    lx.add("still", PosCategory::adjective);
    return lx;
  }();
  return lexicon;
}

FunctionWordLexicon read_lexicon_csv(std::istream& in) {
  FunctionWordLexicon lx;
  csv::Reader reader(in);
  std::vector<std::string> row;
  bool first = true;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() < 2) throw RecordError(reader.line(), "expected word,category");
    if (first && text::to_lower(text::trim(row[0])) == "word") {
      first = false;
      continue;
    }
    first = false;
    lx.add(std::string(text::trim(row[0])), parse_pos_category(row[1]));
  }
  return lx;
}

FunctionWordLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read lexicon " + path.string());
  return read_lexicon_csv(in);
}

std::vector<std::string> pos_filter(const std::vector<std::string>& tokens,
                                    const FunctionWordLexicon& lexicon) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!lexicon.removable(t)) out.push_back(t);
  }
  return out;
}

std::size_t distinct_resolved_surfaces(const std::vector<LocationMention>& mentions,
                                       const Blocklist& blocklist) {
  std::set<std::string> keys;
  for (const auto& m : mentions) {
    if (m.entry_id && !blocklist.contains(m.surface)) keys.insert(m.key);
  }
  return keys.size();
}

namespace {

std::vector<Span> merged_spans(const std::vector<LocationMention>& mentions, TextField field,
                               std::size_t text_size) {
  std::vector<Span> spans;
  for (const auto& m : mentions) {
    if (m.field != field) continue;
    if (m.span.begin > m.span.end || m.span.end > text_size) {
      throw Error("mention span out of bounds in article '" + m.article_id + "'");
    }
    spans.push_back(m.span);
  }
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.begin < b.begin; });
  std::vector<Span> merged;
  for (const Span& s : spans) {
    if (!merged.empty() && s.begin <= merged.back().end) {
      merged.back().end = std::max(merged.back().end, s.end);
    } else {
      merged.push_back(s);
    }
  }
  return merged;
}

void mask_field(std::string_view text, const std::vector<Span>& spans,
                std::vector<std::string>& tokens) {
  std::size_t pos = 0;
  for (const Span& s : spans) {
    for (auto& t : normalize(text.substr(pos, s.begin - pos))) tokens.push_back(std::move(t));
    tokens.emplace_back(kLocationPlaceholder);
    pos = s.end;
  }
  for (auto& t : normalize(text.substr(pos))) tokens.push_back(std::move(t));
}

}  // namespace

TokenizedArticle mask_locations(const Article& article, const std::vector<LocationMention>& mentions,
                                const Blocklist& blocklist) {
  TokenizedArticle out;
  out.article_id = article.id;
  for (TextField field : {TextField::title, TextField::body}) {
    const std::string& text = field == TextField::title ? article.title : article.body;
    const auto spans = merged_spans(mentions, field, text.size());
    mask_field(text, spans, out.tokens);
    for (const Span& s : spans) out.masked_spans.emplace_back(field, s);
  }
  out.distinct_mention_count = distinct_resolved_surfaces(mentions, blocklist);
  return out;
}

std::vector<std::size_t> filter_articles(const std::vector<Article>& articles,
                                         const std::vector<std::vector<LocationMention>>& mentions,
                                         const Blocklist& blocklist,
                                         std::size_t max_distinct_mentions) {
  if (mentions.size() != articles.size()) {
    throw Error("filter_articles: mention lists do not match the article list");
  }
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < articles.size(); ++i) {
    if (distinct_resolved_surfaces(mentions[i], blocklist) <= max_distinct_mentions) {
      kept.push_back(i);
    }
  }
  return kept;
}

}  // namespace newsloc
