#include "clustop/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "clustop/error.hpp"
#include "clustop/utf8.hpp"

namespace clustop {

using nlohmann::json;

namespace {

std::vector<Span> parse_spans(const json& value) {
  std::vector<Span> spans;
  spans.reserve(value.size());
  for (const auto& pair : value) {
    if (!pair.is_array() || pair.size() != 2) throw FormatError("span must be [start,end]");
    const auto s = pair[0].get<long long>();
    const auto e = pair[1].get<long long>();
    if (s < 0 || e < 0) throw FormatError("negative span offset");
    spans.push_back({static_cast<std::size_t>(s), static_cast<std::size_t>(e)});
  }
  return spans;
}

}  // namespace

std::vector<Span> whitespace_spans(std::string_view text) {
  const auto cps = utf8::decode(text);
  std::vector<Span> spans;
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && utf8::is_space(cps[i])) ++i;
    const std::size_t start = i;
    while (i < cps.size() && !utf8::is_space(cps[i])) ++i;
    if (i > start) spans.push_back({start, i});
  }
  return spans;
}

Document::Document(std::string id, std::string text, std::vector<Span> words)
    : id_(std::move(id)),
      text_(std::move(text)),
      offsets_(utf8::code_point_offsets(text_)),
      words_(std::move(words)) {
  std::size_t prev_end = 0;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    const Span& s = words_[w];
    if (s.start >= s.end || s.end > length()) {
      throw InvalidArgument("document " + id_ + ": word span out of range");
    }
    if (w > 0 && s.start < prev_end) {
      throw InvalidArgument("document " + id_ + ": overlapping word spans");
    }
    prev_end = s.end;
  }
}

Document Document::with_whitespace_words(std::string id, std::string text) {
  auto spans = whitespace_spans(text);
  return Document(std::move(id), std::move(text), std::move(spans));
}

void Document::set_tokens(std::vector<Token> tokens) {
  for (const auto& t : tokens) {
    if (t.special) {
      if (t.span.start != 0 || t.span.end != 0) {
        throw InvalidArgument("document " + id_ + ": special token '" + t.piece +
                              "' must carry span (0,0)");
      }
    } else if (t.span.start >= t.span.end || t.span.end > length()) {
      throw InvalidArgument("document " + id_ + ": token span (" + std::to_string(t.span.start) +
                            "," + std::to_string(t.span.end) + ") exceeds text length " +
                            std::to_string(length()));
    }
  }
  tokens_ = std::move(tokens);
}

std::string Document::slice(const Span& span) const {
  if (span.start > span.end || span.end > length()) {
    throw InvalidArgument("document " + id_ + ": slice out of range");
  }
  return text_.substr(offsets_[span.start], offsets_[span.end] - offsets_[span.start]);
}

std::optional<std::size_t> Document::containing_word(const Span& span) const {
  // Words are sorted and disjoint: the candidate is the last word starting at or before span.start.
  auto it = std::upper_bound(words_.begin(), words_.end(), span.start,
                             [](std::size_t pos, const Span& w) { return pos < w.start; });
  if (it == words_.begin()) return std::nullopt;
  --it;
  if (it->contains(span)) return static_cast<std::size_t>(it - words_.begin());
  return std::nullopt;
}

Corpus::Corpus(std::vector<Document> documents, std::filesystem::path source)
    : documents_(std::move(documents)), source_(std::move(source)) {
  std::uint64_t h = utf8::fnv1a("clustop-corpus-v1");
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const auto& doc = documents_[i];
    if (!index_.emplace(doc.id(), i).second) {
      throw InvalidArgument("duplicate document id: " + doc.id());
    }
    // Length-prefix each field so concatenations cannot collide.
    auto mix = [&h](std::string_view s) {
      const std::string len = std::to_string(s.size()) + ":";
      h = utf8::fnv1a(len, h);
      h = utf8::fnv1a(s, h);
    };
    mix(doc.id());
    mix(doc.text());
    std::string spans;
    for (const auto& w : doc.words()) {
      spans += std::to_string(w.start) + "," + std::to_string(w.end) + ";";
    }
    mix(spans);
  }
  fingerprint_ = utf8::hex64(h);
}

std::optional<std::size_t> Corpus::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open corpus file " + path.string());

  std::vector<Document> docs;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    std::string id;
    std::string text;
    std::optional<std::vector<Span>> words;
    try {
      record = json::parse(line);
      id = record.at("id").get<std::string>();
      text = record.at("text").get<std::string>();
      if (record.contains("words") && !record["words"].is_null()) {
        words = parse_spans(record["words"]);
      }
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.emplace(id, line_no).second) {
      throw InvalidArgument("duplicate document id: " + id);
    }
    if (words) {
      docs.emplace_back(std::move(id), std::move(text), std::move(*words));
    } else {
      docs.push_back(Document::with_whitespace_words(std::move(id), std::move(text)));
    }
  }
  return Corpus(std::move(docs), path);
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write corpus file " + path.string());
  for (const auto& doc : corpus.documents()) {
    json words = json::array();
    for (const auto& w : doc.words()) words.push_back({w.start, w.end});
    json record = {{"id", doc.id()}, {"text", doc.text()}, {"words", std::move(words)}};
    out << record.dump() << '\n';
  }
}

Corpus attach_tokens(const Corpus& corpus, const std::filesystem::path& token_file) {
  std::ifstream in(token_file);
  if (!in) throw FormatError("cannot open token file " + token_file.string());

  std::unordered_map<std::string, std::vector<Token>> by_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json record = json::parse(line);
      std::vector<Token> tokens;
      for (const auto& t : record.at("tokens")) {
        const auto start = t.at("start").get<long long>();
        const auto end = t.at("end").get<long long>();
        if (start < 0 || end < 0) throw FormatError("negative token offset");
        tokens.push_back({t.at("piece").get<std::string>(),
                          {static_cast<std::size_t>(start), static_cast<std::size_t>(end)},
                          t.value("special", false)});
      }
      by_id[record.at("id").get<std::string>()] = std::move(tokens);
    } catch (const json::exception& e) {
      throw FormatError(token_file.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  Corpus result = corpus;
  for (std::size_t i = 0; i < result.size(); ++i) {
    auto it = by_id.find(result[i].id());
    if (it == by_id.end()) {
      throw InvalidArgument("token file has no entry for document " + result[i].id());
    }
    result.document(i).set_tokens(std::move(it->second));
  }
  return result;
}

void save_tokens(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write token file " + path.string());
  for (const auto& doc : corpus.documents()) {
    json tokens = json::array();
    for (const auto& t : doc.tokens()) {
      tokens.push_back(
          {{"piece", t.piece}, {"start", t.span.start}, {"end", t.span.end}, {"special", t.special}});
    }
    out << json{{"id", doc.id()}, {"tokens", std::move(tokens)}}.dump() << '\n';
  }
}

}  // namespace clustop
