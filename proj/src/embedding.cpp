#include "clustop/embedding.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "clustop/error.hpp"

namespace clustop {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'T', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw FormatError("CTEM: truncated header");
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= std::uint64_t{bytes[i]} << (8 * i);
  return static_cast<T>(value);
}

}  // namespace

std::string_view to_string(Stage stage) {
  return stage == Stage::Enhanced ? "enhanced" : "original";
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t cols, Stage stage)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0), stage_(stage) {}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                                 Stage stage)
    : rows_(rows), cols_(cols), values_(std::move(values)), stage_(stage) {
  if (values_.size() != rows * cols) {
    throw InvalidArgument("embedding value count does not match shape");
  }
}

bool EmbeddingMatrix::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> order) const {
  EmbeddingMatrix out(order.size(), cols_, stage_);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto src = row(order[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void write_ctem(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint64_t>(out, matrix.rows());
  put_le<std::uint64_t>(out, matrix.cols());
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(matrix.stage()));
  for (double v : matrix.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    put_le<std::uint32_t>(out, bits);
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

EmbeddingMatrix read_ctem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("CTEM: bad magic in " + path.string());
  const auto version = get_le<std::uint32_t>(in);
  if (version != kVersion) {
    throw FormatError("CTEM: unsupported version " + std::to_string(version));
  }
  const auto n = get_le<std::uint64_t>(in);
  const auto d = get_le<std::uint64_t>(in);
  const auto tag = get_le<std::uint8_t>(in);
  if (tag > 1) throw FormatError("CTEM: unknown stage tag " + std::to_string(tag));

  std::vector<double> values(n * d);
  std::vector<unsigned char> raw(n * d * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw FormatError("CTEM: truncated payload in " + path.string());
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= std::uint32_t{raw[4 * i + b]} << (8 * b);
    values[i] = std::bit_cast<float>(bits);
  }
  EmbeddingMatrix m(n, d, std::move(values), static_cast<Stage>(tag));
  if (!m.all_finite()) throw FormatError("CTEM: non-finite values in " + path.string());
  return m;
}

}  // namespace clustop
