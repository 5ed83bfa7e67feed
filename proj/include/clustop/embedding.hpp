#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace clustop {

/// Which model produced an embedding.
enum class Stage : std::uint8_t { Original = 0, Enhanced = 1 };

std::string_view to_string(Stage stage);

/// Dense row-major n×d matrix; row i is document i.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t cols, Stage stage = Stage::Original);
  EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                  Stage stage = Stage::Original);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Stage stage() const { return stage_; }
  void set_stage(Stage stage) { stage_ = stage; }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool all_finite() const;

  /// Rows in the given order.
  EmbeddingMatrix select_rows(std::span<const std::size_t> order) const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  Stage stage_ = Stage::Original;
};

/// Binary "CTEM" format: magic, u32 version 1, u64 n, u64 d, u8 stage,
/// then n·d little-endian float32 values, row-major.
void write_ctem(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix read_ctem(const std::filesystem::path& path);

}  // namespace clustop
