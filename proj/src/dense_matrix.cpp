#include "uma/dense_matrix.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "uma/error.hpp"
#include "uma/kernels.hpp"

namespace uma {

namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {
  if (!std::isfinite(fill)) throw DomainError("DenseMatrix: non-finite fill value");
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.size() != rows * cols)
    throw DimensionError("DenseMatrix: " + std::to_string(entries_.size()) +
                         " entries for a " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " matrix");
  if (!all_finite()) throw DomainError("DenseMatrix: non-finite entry");
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> entries;
  entries.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("DenseMatrix::from_rows: ragged rows");
    entries.insert(entries.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(entries));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> values) {
  DenseMatrix out(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out(i, i) = values[i];
  return out;
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(entries_.begin(), entries_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  require_same_shape(*this, other, "operator+=");
  kernels::axpy<kernels::Parallel>(entries_, 1.0, other.entries_, entries_);
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  require_same_shape(*this, other, "operator-=");
  kernels::axpy<kernels::Parallel>(entries_, -1.0, other.entries_, entries_);
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double factor) {
  kernels::Parallel::map(entries_, [factor](double v) { return v * factor; },
                         std::span<const double>(entries_));
  return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double factor, DenseMatrix a) { return a *= factor; }
DenseMatrix operator*(DenseMatrix a, double factor) { return a *= factor; }

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.rows()));
  DenseMatrix out(a.rows(), b.cols());
  if (a.empty() || b.empty()) return out;
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(a.rows()),
              static_cast<int>(b.cols()), static_cast<int>(a.cols()), 1.0, a.values().data(),
              static_cast<int>(a.cols()), b.values().data(), static_cast<int>(b.cols()), 0.0,
              out.values().data(), static_cast<int>(b.cols()));
  return out;
}

ObservationMask::ObservationMask(std::size_t rows, std::size_t cols,
                                 std::span<const Cell> observed)
    : rows_(rows), cols_(cols), bitmap_(rows * cols, 0) {
  for (const Cell& c : observed) {
    if (c.row >= rows || c.col >= cols)
      throw DimensionError("ObservationMask: cell (" + std::to_string(c.row) + "," +
                           std::to_string(c.col) + ") out of range");
    auto& slot = bitmap_[c.row * cols + c.col];
    if (slot) throw DomainError("ObservationMask: duplicate cell (" + std::to_string(c.row) + "," +
                                std::to_string(c.col) + ")");
    slot = 1;
  }
  count_ = observed.size();
  if (count_ == 0) throw DomainError("ObservationMask: no observed cells");
}

ObservationMask ObservationMask::full(std::size_t rows, std::size_t cols) {
  return from_bitmap(rows, cols, std::vector<std::uint8_t>(rows * cols, 1));
}

ObservationMask ObservationMask::from_bitmap(std::size_t rows, std::size_t cols,
                                             std::vector<std::uint8_t> bitmap) {
  if (bitmap.size() != rows * cols) throw DimensionError("ObservationMask: bitmap size mismatch");
  ObservationMask out;
  out.rows_ = rows;
  out.cols_ = cols;
  for (auto& b : bitmap) b = b ? 1 : 0;
  out.count_ = static_cast<std::size_t>(std::count(bitmap.begin(), bitmap.end(), 1));
  out.bitmap_ = std::move(bitmap);
  if (out.count_ == 0) throw DomainError("ObservationMask: no observed cells");
  return out;
}

std::vector<Cell> ObservationMask::cells() const {
  std::vector<Cell> out;
  out.reserve(count_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      if (bitmap_[i * cols_ + j]) out.push_back({i, j});
  return out;
}

ObservationMask ObservationMask::with_rows_appended(std::size_t extra_rows,
                                                    std::span<const Cell> observed) const {
  std::vector<std::uint8_t> bitmap = bitmap_;
  bitmap.resize((rows_ + extra_rows) * cols_, 0);
  for (const Cell& c : observed) {
    if (c.row < rows_ || c.row >= rows_ + extra_rows || c.col >= cols_)
      throw DimensionError("ObservationMask::with_rows_appended: cell outside appended rows");
    bitmap[c.row * cols_ + c.col] = 1;
  }
  return from_bitmap(rows_ + extra_rows, cols_, std::move(bitmap));
}

}  // namespace uma
