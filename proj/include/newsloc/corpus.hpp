#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "newsloc/kernels.hpp"

namespace newsloc {

// Half-open byte range [begin, end) into some text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const Span&) const = default;
};

struct Article {
  std::string id;
  std::string title;
  std::string body;
  std::string published;  // ISO-8601 date, YYYY-MM-DD[Thh:mm...]
  std::vector<std::string> keywords;
  // Covers `body` exactly, in order, without overlap.
  std::vector<Span> sentences;

  std::string_view sentence(std::size_t i) const {
    return std::string_view(body).substr(sentences[i].begin, sentences[i].size());
  }
};

enum class CorpusFormat { jsonl, csv };

CorpusFormat parse_corpus_format(std::string_view name);

// Loads articles in file order and segments their bodies. Throws
// RecordError naming the offending line (JSONL) or row (CSV).
std::vector<Article> load_corpus(const std::filesystem::path& path, CorpusFormat format);
std::vector<Article> read_corpus_jsonl(std::istream& in);
std::vector<Article> read_corpus_csv(std::istream& in);

void write_corpus_jsonl(std::ostream& out, const std::vector<Article>& articles);

bool is_iso_date(std::string_view s);

// Sentence boundaries: a '.', '!' or '?' followed by whitespace and then an
// uppercase letter, or by whitespace running to the end of the text. The
// whitespace after a terminator belongs to the sentence it closes, so the
// spans tile the input.
std::vector<Span> sentence_spans(std::string_view text);

// Trimmed, non-empty sentences.
std::vector<std::string> split_sentences(std::string_view text);

void segment(Article& article);

struct DedupOptions {
  double min_shared_fraction = 0.5;
  std::size_t min_sentence_words = 10;
  // Sentences found in more than this many articles are boilerplate.
  std::size_t boilerplate_doc_count = 20;
  kernels::Exec exec = kernels::Exec::parallel;
};

struct DuplicateGroup {
  std::string kept_id;
  std::vector<std::string> dropped_ids;  // sorted
};

struct DedupReport {
  std::size_t retrieved_count = 0;
  std::size_t unique_count = 0;
  std::vector<DuplicateGroup> duplicate_groups;  // sorted by kept_id
};

struct DedupResult {
  std::vector<Article> unique;  // input order preserved
  DedupReport report;
};

// Sentence identity for overlap comparison: lowercased, whitespace collapsed.
std::string sentence_key(std::string_view sentence);

DedupResult dedup(const std::vector<Article>& articles, const DedupOptions& options = {});

nlohmann::json to_json(const DedupReport& report);
DedupReport dedup_report_from_json(const nlohmann::json& j);

}  // namespace newsloc
