#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "newsloc/corpus.hpp"
#include "newsloc/geoparse.hpp"

namespace newsloc {

// Inserted for masked location spans. normalize() strips underscores from
// token edges, so running text can never produce this token.
inline constexpr std::string_view kLocationPlaceholder = "__loc__";

inline constexpr std::size_t kMaxTokenLength = 25;

// Lowercase, split on whitespace, drop space-delimited tokens longer than
// kMaxTokenLength code points, strip leading/trailing punctuation, drop
// tokens left empty.
std::vector<std::string> normalize(std::string_view text);

enum class PosCategory {
  determiner,
  conjunction,
  symbol,
  pronoun,
  adverb,
  adposition,
  auxiliary,
  noun,
  verb,
  adjective,
  numeral,
  particle,
  interjection,
  other,
};

PosCategory parse_pos_category(std::string_view s);
bool is_removed_category(PosCategory c);

// word -> set of POS categories it can take.
class FunctionWordLexicon {
 public:
  FunctionWordLexicon() = default;

  void add(std::string word, PosCategory category);
  // True when every category listed for the word is a removed one. Unknown
  // words are never removable.
  bool removable(const std::string& word) const;
  std::size_t size() const noexcept { return words_.size(); }

  // Closed-class English function words shipped with the library.
  static const FunctionWordLexicon& builtin();

 private:
  std::map<std::string, std::set<PosCategory>, std::less<>> words_;
};

// CSV rows: word,category. Throws Error when the file cannot be opened.
FunctionWordLexicon load_lexicon(const std::filesystem::path& path);
FunctionWordLexicon read_lexicon_csv(std::istream& in);

std::vector<std::string> pos_filter(const std::vector<std::string>& tokens,
                                    const FunctionWordLexicon& lexicon);

struct TokenizedArticle {
  std::string article_id;
  std::vector<std::string> tokens;
  // Merged masked spans per field (title spans first).
  std::vector<std::pair<TextField, Span>> masked_spans;
  std::size_t distinct_mention_count = 0;
};

// Replaces every mention span (broad ones included, overlaps merged) by the
// placeholder and normalizes title then body. The count is of distinct
// resolved, non-broad surface keys.
TokenizedArticle mask_locations(const Article& article, const std::vector<LocationMention>& mentions,
                                const Blocklist& blocklist = {});

std::size_t distinct_resolved_surfaces(const std::vector<LocationMention>& mentions,
                                       const Blocklist& blocklist);

// Keeps articles with at most max_distinct_mentions distinct resolved,
// non-broad surfaces. `mentions` is parallel to `articles`. Returns kept
// positions.
std::vector<std::size_t> filter_articles(const std::vector<Article>& articles,
                                         const std::vector<std::vector<LocationMention>>& mentions,
                                         const Blocklist& blocklist,
                                         std::size_t max_distinct_mentions = 40);

}  // namespace newsloc
