#include "clustop/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "clustop/cluster.hpp"
#include "clustop/error.hpp"
#include "clustop/utf8.hpp"

namespace clustop {

using nlohmann::json;

namespace {

constexpr std::string_view kPrefix = "fixture:";
constexpr const char* kModelFile = "fixture_model.json";

const std::vector<std::string>& filler_vocabulary() {
  static const std::vector<std::string> words = {
      "the",    "report", "city",  "people", "said",   "today", "local", "new",
      "office", "week",   "plan",  "public", "issue",  "group", "area",  "year",
      "case",   "street", "house", "water",  "notice", "time",  "part",  "day"};
  return words;
}

// Uniform in [0, 1) from the top 53 bits; identical on every platform.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double gaussian(std::mt19937_64& rng) {
  double u = unit(rng);
  while (u <= 0.0) u = unit(rng);
  const double v = unit(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

FixtureOptions FixtureOptions::parse(std::string_view model_id) {
  if (model_id.substr(0, kPrefix.size()) != kPrefix) {
    throw InvalidArgument("not a fixture model id: " + std::string(model_id));
  }
  FixtureOptions o;
  for (const auto& part : split(model_id.substr(kPrefix.size()), ';')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw InvalidArgument("fixture option without value: " + part);
    const std::string key = part.substr(0, eq);
    const std::string value = part.substr(eq + 1);
    try {
      if (key == "markers") {
        o.markers = split(value, ',');
      } else if (key == "seed") {
        o.seed = std::stoull(value);
      } else if (key == "dims") {
        o.dims = std::stoul(value);
      } else if (key == "noise") {
        o.original_noise = std::stod(value);
      } else if (key == "enhanced_noise") {
        o.enhanced_noise = std::stod(value);
      } else if (key == "drop_last") {
        o.drop_last_row = value == "1";
      } else if (key == "fail") {
        o.fail_op = value;
      } else {
        throw InvalidArgument("unknown fixture option: " + key);
      }
    } catch (const std::logic_error&) {
      throw InvalidArgument("bad value for fixture option " + key + ": " + value);
    }
  }
  if (o.markers.empty() || std::any_of(o.markers.begin(), o.markers.end(), [](auto& m) { return m.empty(); })) {
    throw InvalidArgument("fixture model id needs markers=a,b,...");
  }
  if (o.dims == 0) throw InvalidArgument("fixture dims must be positive");
  return o;
}

std::string FixtureOptions::model_id() const {
  std::ostringstream s;
  s << kPrefix << "markers=";
  for (std::size_t i = 0; i < markers.size(); ++i) s << (i ? "," : "") << markers[i];
  s << ";seed=" << seed;
  if (drop_last_row) s << ";drop_last=1";
  if (!fail_op.empty()) s << ";fail=" << fail_op;
  return s.str();
}

FixtureModel resolve_fixture_model(const std::string& model) {
  const std::filesystem::path dir(model);
  if (std::filesystem::is_directory(dir)) {
    std::ifstream in(dir / kModelFile);
    if (!in) throw InvalidArgument("model directory lacks " + std::string(kModelFile) + ": " + model);
    const json meta = json::parse(in);
    return {FixtureOptions::parse(meta.at("base").get<std::string>()), Stage::Enhanced};
  }
  return {FixtureOptions::parse(model), Stage::Original};
}

void fixture_finetune(const Corpus& corpus, const std::filesystem::path& labels,
                      const FixtureModel& base, int epochs, const std::filesystem::path& out_dir) {
  const LabeledIds pseudo = read_labels(labels);
  if (pseudo.ids.empty()) throw InvalidArgument("finetune: empty label file");
  std::set<int> classes;
  for (std::size_t i = 0; i < pseudo.ids.size(); ++i) {
    if (!corpus.index_of(pseudo.ids[i])) throw InvalidArgument("finetune: unknown id " + pseudo.ids[i]);
    if (pseudo.labels[i] < 0) throw InvalidArgument("finetune: negative label for " + pseudo.ids[i]);
    classes.insert(pseudo.labels[i]);
  }
  if (epochs <= 0) throw InvalidArgument("finetune: epochs must be positive");
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / kModelFile);
  out << json{{"base", base.options.model_id()},
              {"stage", "enhanced"},
              {"epochs", epochs},
              {"labeled", pseudo.ids.size()},
              {"classes", classes.size()}}
             .dump(2)
      << '\n';
  if (!out) throw FormatError("cannot write fine-tuned model to " + out_dir.string());
}

std::vector<Token> fixture_tokenize(const Document& doc) {
  std::vector<Token> tokens;
  tokens.push_back({"[CLS]", {0, 0}, true});
  for (const Span& w : doc.words()) {
    for (std::size_t s = w.start; s < w.end; s += 2) {
      const Span piece{s, std::min(s + 2, w.end)};
      tokens.push_back({doc.slice(piece), piece, false});
    }
  }
  tokens.push_back({"[SEP]", {0, 0}, true});
  return tokens;
}

std::optional<std::size_t> fixture_class(const Document& doc, const FixtureOptions& options) {
  for (std::size_t w = 0; w < doc.words().size(); ++w) {
    const std::string word = doc.word(w);
    const auto it = std::find(options.markers.begin(), options.markers.end(), word);
    if (it != options.markers.end()) return static_cast<std::size_t>(it - options.markers.begin());
  }
  return std::nullopt;
}

std::vector<double> fixture_centroid(std::string_view marker, const FixtureOptions& options) {
  std::mt19937_64 rng(utf8::fnv1a(marker) ^ options.seed);
  std::vector<double> c(options.dims);
  for (double& v : c) v = options.centroid_scale * gaussian(rng);
  return c;
}

EmbeddingMatrix fixture_embed(const Corpus& corpus, Stage stage, const FixtureOptions& options) {
  std::vector<std::vector<double>> centroids;
  for (const auto& m : options.markers) centroids.push_back(fixture_centroid(m, options));
  const double noise = stage == Stage::Enhanced ? options.enhanced_noise : options.original_noise;
  const std::uint64_t salt = stage == Stage::Enhanced ? 0x9e3779b97f4a7c15ULL : 0;

  const std::size_t rows = corpus.size() - (options.drop_last_row && corpus.size() > 0 ? 1 : 0);
  EmbeddingMatrix out(rows, options.dims, stage);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto cls = fixture_class(corpus[i], options);
    std::mt19937_64 rng(utf8::fnv1a(corpus[i].id(), options.seed ^ salt ^ 0xcbf29ce484222325ULL));
    for (std::size_t j = 0; j < options.dims; ++j) {
      const double base = cls ? centroids[*cls][j] : 0.0;
      out(i, j) = base + noise * gaussian(rng);
    }
  }
  return out;
}

Corpus fixture_tokenized(const Corpus& corpus) {
  std::vector<Document> docs = corpus.documents();
  for (auto& d : docs) d.set_tokens(fixture_tokenize(d));
  return Corpus(std::move(docs), corpus.source());
}

std::vector<BetaProfile> fixture_attention(const Corpus& tokenized, const FixtureOptions& options) {
  std::vector<BetaProfile> out;
  out.reserve(tokenized.size());
  for (const Document& doc : tokenized.documents()) {
    const auto& tokens = doc.tokens();
    const std::size_t n = tokens.size();
    BetaProfile p;
    p.id = doc.id();
    p.beta.assign(options.layers, std::vector<double>(n, 1.0));
    for (const auto& t : tokens) p.special.push_back(t.special);

    std::optional<std::size_t> peak;
    if (const auto cls = fixture_class(doc, options)) {
      const std::string& marker = options.markers[*cls];
      for (std::size_t w = 0; w < doc.words().size() && !peak; ++w) {
        if (doc.word(w) != marker) continue;
        for (std::size_t t = 0; t < n; ++t) {
          if (!tokens[t].special && tokens[t].span.start == doc.words()[w].start) {
            peak = t;
            break;
          }
        }
      }
    }
    if (peak && n > 1 && options.peaked_layer < options.layers) {
      auto& layer = p.beta[options.peaked_layer];
      const double rest = 0.1 * static_cast<double>(n) / static_cast<double>(n - 1);
      std::fill(layer.begin(), layer.end(), rest);
      layer[*peak] = 0.9 * static_cast<double>(n);
    }
    out.push_back(std::move(p));
  }
  return out;
}

PlantedCorpus make_planted_corpus(const std::vector<std::string>& markers, std::size_t docs_per_class,
                                  std::uint64_t seed, std::size_t filler_words) {
  if (markers.empty()) throw InvalidArgument("planted corpus needs at least one marker");
  const auto& vocab = filler_vocabulary();
  for (const auto& m : markers) {
    if (std::find(vocab.begin(), vocab.end(), m) != vocab.end()) {
      throw InvalidArgument("marker collides with filler vocabulary: " + m);
    }
  }
  std::mt19937_64 rng(seed);
  PlantedCorpus out;
  std::vector<Document> docs;
  const std::size_t n = markers.size() * docs_per_class;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i % markers.size();
    std::vector<std::string> words;
    for (std::size_t w = 0; w < filler_words; ++w) words.push_back(vocab[rng() % vocab.size()]);
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng() % (filler_words + 1)), markers[cls]);
    std::string text;
    for (std::size_t w = 0; w < words.size(); ++w) text += (w ? " " : "") + words[w];
    char id[32];
    std::snprintf(id, sizeof id, "doc%05zu", i);
    docs.push_back(Document::with_whitespace_words(id, text));
    out.classes.push_back(static_cast<int>(cls));
  }
  out.corpus = Corpus(std::move(docs));
  return out;
}

}  // namespace clustop
