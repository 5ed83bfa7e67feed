#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "clustop/embedding.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("clustop-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Isotropic Gaussian blobs; centers drawn from N(0, center_sd^2).
struct Blobs {
  clustop::EmbeddingMatrix x;
  std::vector<int> labels;
};

inline Blobs make_blobs(std::size_t per_blob, std::size_t blobs, std::size_t dims, double center_sd,
                        double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> centers(blobs, std::vector<double>(dims));
  for (auto& c : centers) {
    for (double& v : c) v = center_sd * g(rng);
  }
  Blobs b{clustop::EmbeddingMatrix(per_blob * blobs, dims), {}};
  for (std::size_t i = 0; i < per_blob * blobs; ++i) {
    const std::size_t c = i % blobs;
    for (std::size_t j = 0; j < dims; ++j) b.x(i, j) = centers[c][j] + sd * g(rng);
    b.labels.push_back(static_cast<int>(c));
  }
  return b;
}

}  // namespace testutil
