#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clustop {

/// Half-open range of code points [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  bool contains(const Span& inner) const { return start <= inner.start && inner.end <= end; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct Token {
  std::string piece;
  Span span;
  bool special = false;

  friend bool operator==(const Token&, const Token&) = default;
};

/// One input text with its word segmentation and (optionally) the backend's
/// tokenization. All spans count code points, not bytes.
class Document {
 public:
  Document() = default;
  /// Validates `words`; an empty `words` list is kept as-is.
  Document(std::string id, std::string text, std::vector<Span> words);

  /// Builds a document whose words are the whitespace-delimited runs of `text`.
  static Document with_whitespace_words(std::string id, std::string text);

  const std::string& id() const { return id_; }
  const std::string& text() const { return text_; }
  std::size_t length() const { return offsets_.size() - 1; }

  const std::vector<Span>& words() const { return words_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  bool has_tokens() const { return !tokens_.empty(); }

  /// Replaces the tokenization after checking every span against the text.
  void set_tokens(std::vector<Token> tokens);

  /// Code-point substring.
  std::string slice(const Span& span) const;
  std::string word(std::size_t index) const { return slice(words_.at(index)); }

  /// Index of the word containing `span`, if exactly one does.
  std::optional<std::size_t> containing_word(const Span& span) const;

 private:
  std::string id_;
  std::string text_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Span> words_;
  std::vector<Token> tokens_;
};

/// Whitespace-delimited word spans of `text`.
std::vector<Span> whitespace_spans(std::string_view text);

class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Document> documents, std::filesystem::path source = {});

  const std::vector<Document>& documents() const { return documents_; }
  std::size_t size() const { return documents_.size(); }
  const Document& operator[](std::size_t i) const { return documents_[i]; }
  const std::filesystem::path& source() const { return source_; }

  /// Position of the document with `id`, if present.
  std::optional<std::size_t> index_of(const std::string& id) const;

  /// Stable content hash over ids, texts, and word spans (hex string).
  const std::string& fingerprint() const { return fingerprint_; }

  /// Mutable access used when attaching tokens.
  Document& document(std::size_t i) { return documents_[i]; }

 private:
  std::vector<Document> documents_;
  std::filesystem::path source_;
  std::unordered_map<std::string, std::size_t> index_;
  std::string fingerprint_;
};

/// Reads the corpus JSONL format: `{"id": str, "text": str, "words": [[s,e],...]?}`.
Corpus load_corpus(const std::filesystem::path& path);

/// Writes the corpus JSONL format, always including the `words` field.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Reads a token JSONL file and returns a copy of `corpus` with tokens attached.
Corpus attach_tokens(const Corpus& corpus, const std::filesystem::path& token_file);

/// Writes tokens of every document in the token JSONL format.
void save_tokens(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace clustop
