#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace uma {

struct Cell {
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// Row-major dense real matrix. Entries are always finite; constructors reject
// NaN/Inf and arithmetic that would produce them is caught by the callers
// that can diverge (the solver).
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  std::span<double> values() noexcept { return entries_; }
  std::span<const double> values() const noexcept { return entries_; }
  std::span<double> row(std::size_t i) { return {entries_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {entries_.data() + i * cols_, cols_}; }

  bool same_shape(const DenseMatrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const noexcept;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  DenseMatrix& operator*=(double factor);

  // Exact (bitwise for finite values) equality of shape and entries.
  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double factor, DenseMatrix a);
DenseMatrix operator*(DenseMatrix a, double factor);

DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

// Set of observed cells, stored as a row-major byte map for O(1) lookups.
class ObservationMask {
 public:
  // Empty 0 x 0 placeholder; every other constructor enforces count() > 0.
  ObservationMask() = default;
  ObservationMask(std::size_t rows, std::size_t cols, std::span<const Cell> observed);
  static ObservationMask full(std::size_t rows, std::size_t cols);
  static ObservationMask from_bitmap(std::size_t rows, std::size_t cols,
                                     std::vector<std::uint8_t> bitmap);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t count() const noexcept { return count_; }
  bool contains(std::size_t i, std::size_t j) const { return bitmap_[i * cols_ + j] != 0; }
  std::span<const std::uint8_t> bitmap() const noexcept { return bitmap_; }
  bool matches(const DenseMatrix& a) const noexcept {
    return a.rows() == rows_ && a.cols() == cols_;
  }
  // Observed cells in row-major order.
  std::vector<Cell> cells() const;

  // Returns a copy with `extra_rows` appended rows holding `observed` cells.
  ObservationMask with_rows_appended(std::size_t extra_rows, std::span<const Cell> observed) const;

  friend bool operator==(const ObservationMask&, const ObservationMask&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t count_ = 0;
  std::vector<std::uint8_t> bitmap_;
};

}  // namespace uma
