#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mathkg {

/// One encyclopedia entry as crawled: the title plus the five captured
/// resources (categories, abstract, body, infobox, related-entry links).
/// Formulas are opaque LaTeX strings and are never tokenized.
struct Document {
  std::string id;
  std::string title;
  std::vector<std::string> categories;
  std::string abstract;
  std::string body;
  std::map<std::string, std::string> infobox;
  std::vector<std::string> links;
  std::vector<std::string> formulas;

  bool operator==(const Document&) const = default;
};

/// Offsets are in code points relative to the sentence text, end exclusive.
struct Token {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::string doc_id;
  std::size_t index = 0;
  std::string text;
  std::vector<Token> tokens;
};

/// Reads documents.jsonl. Blank lines are skipped; missing keys default to
/// empty. Throws ParseError naming the line for malformed JSON and Error
/// naming the id for duplicates.
std::vector<Document> ingest_corpus(const std::filesystem::path& path);
std::vector<Document> read_documents(std::istream& in, const std::string& source = "<stream>");

Document parse_document(std::string_view json_line);
/// Serializes with a fixed key order (id, title, categories, abstract,
/// body, infobox, links, formulas), no trailing newline.
std::string document_to_json(const Document& doc);
void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs);

/// Splits after . ! ? when followed by whitespace or end of text, and after
/// the full-width 。！？ unconditionally. Terminators stay with their
/// sentence; surrounding whitespace is trimmed and empty pieces dropped.
std::vector<std::string> split_sentences(std::string_view text);

/// Runs of Latin letters/digits form one token, every CJK character and every
/// other non-space character is a token of its own, whitespace separates.
std::vector<Token> tokenize(std::string_view sentence);

std::vector<std::string> surfaces(const std::vector<Token>& tokens);

/// Tokenized, ASCII-lowercased surface joined with single spaces; two
/// strings with the same key name the same token sequence.
std::string token_key(std::string_view surface);

/// Abstract sentences first, then body sentences, indexed consecutively.
std::vector<Sentence> make_sentences(const Document& doc);

/// The text between consecutive tokens; size() == tokens.size() + 1.
std::vector<std::string> separators(const Sentence& s);
/// Interleaves separators and token surfaces; equals s.text for any
/// sentence produced by tokenize.
std::string reconstruct(const Sentence& s);

}  // namespace mathkg
