#include <fstream>
#include <set>
#include <unordered_map>

#include "clustop/cluster.hpp"
#include "clustop/error.hpp"

namespace clustop {

using nlohmann::json;

std::size_t ClusterAssignment::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

void ClusterAssignment::validate() const {
  std::vector<bool> used(static_cast<std::size_t>(std::max(k, 0)), false);
  for (int l : labels) {
    if (l == kNoise) continue;
    if (l < 0 || l >= k) throw InvalidArgument("assignment: label " + std::to_string(l) + " out of range");
    used[static_cast<std::size_t>(l)] = true;
  }
  for (std::size_t c = 0; c < used.size(); ++c) {
    if (!used[c]) throw InvalidArgument("assignment: cluster " + std::to_string(c) + " is empty");
  }
}

ClusterAssignment make_assignment(std::vector<int> labels, std::string algorithm, json params) {
  std::unordered_map<int, int> remap;
  for (int& l : labels) {
    if (l < 0) {
      l = kNoise;
      continue;
    }
    auto [it, inserted] = remap.emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  return {std::move(labels), static_cast<int>(remap.size()), std::move(algorithm), std::move(params)};
}

std::filesystem::path assignment_sidecar(const std::filesystem::path& path) {
  auto side = path;
  side.replace_extension(".meta.json");
  return side;
}

void write_assignment(const ClusterAssignment& a, const Corpus& corpus,
                      const std::filesystem::path& path) {
  if (a.labels.size() != corpus.size()) {
    throw InvalidArgument("assignment length does not match corpus size");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out << json{{"id", corpus[i].id()}, {"label", a.labels[i]}}.dump() << '\n';
  }
  std::ofstream meta(assignment_sidecar(path), std::ios::binary);
  if (!meta) throw FormatError("cannot write assignment sidecar");
  meta << json{{"k", a.k}, {"algorithm", a.algorithm}, {"params", a.params}, {"noise", a.noise_count()}}
              .dump(2)
       << '\n';
}

LabeledIds read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  LabeledIds out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json record = json::parse(line);
      auto id = record.at("id").get<std::string>();
      if (!seen.insert(id).second) throw FormatError("duplicate id " + id);
      out.ids.push_back(std::move(id));
      out.labels.push_back(record.at("label").get<int>());
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

ClusterAssignment read_assignment(const std::filesystem::path& path, std::vector<std::string>* ids) {
  LabeledIds file = read_labels(path);
  ClusterAssignment a;
  const auto side = assignment_sidecar(path);
  if (std::filesystem::exists(side)) {
    std::ifstream in(side);
    const json meta = json::parse(in);
    a.algorithm = meta.value("algorithm", "");
    a.params = meta.value("params", json::object());
  }
  a.labels = std::move(file.labels);
  std::set<int> distinct;
  for (int l : a.labels) {
    if (l < kNoise) throw FormatError("assignment: invalid label " + std::to_string(l));
    if (l != kNoise) distinct.insert(l);
  }
  a.k = static_cast<int>(distinct.size());
  a.validate();
  if (ids) *ids = std::move(file.ids);
  return a;
}

std::vector<int> align_labels(const LabeledIds& file, const std::vector<std::string>& corpus_ids) {
  if (file.ids.size() != corpus_ids.size()) {
    throw InvalidArgument("id mismatch: " + std::to_string(file.ids.size()) + " labeled ids vs " +
                          std::to_string(corpus_ids.size()));
  }
  std::unordered_map<std::string, int> by_id;
  for (std::size_t i = 0; i < file.ids.size(); ++i) by_id[file.ids[i]] = file.labels[i];
  std::vector<int> out;
  out.reserve(corpus_ids.size());
  for (const auto& id : corpus_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw InvalidArgument("id mismatch: no label for " + id);
    out.push_back(it->second);
  }
  return out;
}

}  // namespace clustop
