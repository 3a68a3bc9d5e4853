#pragma once

// Entrywise kernels over contiguous storage.
//
// Every map kernel exists twice: `serial` is the reference loop and `omp`
// splits the same loop across OpenMP threads. Each output element depends on
// the matching input elements only, through the same expression, so the two
// flavours are bit-identical. Reductions have a single serial flavour with
// left-to-right accumulation; that order is part of the numerical contract.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>

namespace uma::kernels {

inline double shrink(double t, double tau) noexcept {
  const double mag = std::abs(t) - tau;
  if (mag <= 0.0) return 0.0;
  return t > 0.0 ? mag : -mag;
}

namespace serial {

template <class F, class... In>
void map(std::span<double> out, F f, std::span<const In>... in) {
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = f(in[i]...);
}

}  // namespace serial

namespace omp {

template <class F, class... In>
void map(std::span<double> out, F f, std::span<const In>... in) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = f(in[i]...);
}

}  // namespace omp

// Named kernels. `Exec` is one of the two namespaces above, picked through the
// tag types so tests and benchmarks can instantiate both.
struct Serial {
  template <class F, class... In>
  static void map(std::span<double> out, F f, std::span<const In>... in) {
    serial::map(out, f, in...);
  }
};
struct Parallel {
  template <class F, class... In>
  static void map(std::span<double> out, F f, std::span<const In>... in) {
    omp::map(out, f, in...);
  }
};

template <class Exec>
void soft_threshold(std::span<const double> in, double tau, std::span<double> out) {
  Exec::map(out, [tau](double t) { return shrink(t, tau); }, in);
}

// out = shrink(in, tau) * scale
template <class Exec>
void soft_threshold_scaled(std::span<const double> in, double tau, double scale,
                           std::span<double> out) {
  Exec::map(out, [tau, scale](double t) { return shrink(t, tau) * scale; }, in);
}

// out = mask ? in : 0
template <class Exec>
void mask_project(std::span<const double> in, std::span<const std::uint8_t> mask,
                  std::span<double> out) {
  Exec::map(out, [](double v, std::uint8_t m) { return m ? v : 0.0; }, in, mask);
}

// out = mask ? in * factor : in
template <class Exec>
void mask_scale(std::span<const double> in, std::span<const std::uint8_t> mask, double factor,
                std::span<double> out) {
  Exec::map(out, [factor](double v, std::uint8_t m) { return m ? v * factor : v; }, in, mask);
}

// out = ca*a + cb*b - c - d, evaluated left to right.
template <class Exec>
void combine4(double ca, std::span<const double> a, double cb, std::span<const double> b,
              std::span<const double> c, std::span<const double> d, std::span<double> out) {
  Exec::map(
      out,
      [ca, cb](double va, double vb, double vc, double vd) { return ca * va + cb * vb - vc - vd; },
      a, b, c, d);
}

// out = a + b + c - d
template <class Exec>
void sum3_minus(std::span<const double> a, std::span<const double> b, std::span<const double> c,
                std::span<const double> d, std::span<double> out) {
  Exec::map(out, [](double va, double vb, double vc, double vd) { return va + vb + vc - vd; },
            a, b, c, d);
}

// out = a + factor*b
template <class Exec>
void axpy(std::span<const double> a, double factor, std::span<const double> b,
          std::span<double> out) {
  Exec::map(out, [factor](double va, double vb) { return va + factor * vb; }, a, b);
}

// Serial reductions.

inline double sum_squares(std::span<const double> a) noexcept {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

inline double masked_sum_squares(std::span<const double> a,
                                 std::span<const std::uint8_t> mask) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (mask[i]) s += a[i] * a[i];
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double abs_sum(std::span<const double> a) noexcept {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

inline double abs_max(std::span<const double> a) noexcept {
  double s = 0.0;
  for (double v : a) s = std::max(s, std::abs(v));
  return s;
}

inline double diff_sum_squares(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace uma::kernels
