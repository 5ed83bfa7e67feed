#include <fstream>

#include "clustop/error.hpp"
#include "clustop/topics.hpp"

namespace clustop {

using nlohmann::json;

std::vector<BetaProfile> read_beta_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<BetaProfile> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json record = json::parse(line);
      BetaProfile p;
      p.id = record.at("id").get<std::string>();
      p.beta = record.at("beta").get<std::vector<std::vector<double>>>();
      const auto layers = record.at("layers").get<std::size_t>();
      if (layers != p.beta.size()) throw FormatError("layers field disagrees with beta rows");
      for (const auto& row : p.beta) {
        if (row.size() != p.beta.front().size()) throw FormatError("ragged beta rows");
      }
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_beta_profiles(const std::vector<BetaProfile>& profiles, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& p : profiles) {
    out << json{{"id", p.id}, {"layers", p.layers()}, {"beta", p.beta}}.dump() << '\n';
  }
}

json TopicReport::to_json() const {
  json clusters_json = json::array();
  for (const auto& c : clusters) {
    json words_json = json::array();
    for (const auto& [w, s] : c.words) words_json.push_back({w, s});
    clusters_json.push_back({{"label", c.label}, {"words", std::move(words_json)}, {"unmapped", c.unmapped}});
  }
  json out = {{"clusters", std::move(clusters_json)}, {"method", method}};
  if (layer) out["layer"] = *layer;
  return out;
}

void write_topic_report(const TopicReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << report.to_json().dump(2) << '\n';
}

}  // namespace clustop
