#pragma once

#include <cstddef>
#include <vector>

#include "uma/dense_matrix.hpp"

namespace uma {

// Reconstruction/orthogonality tolerance of `svd`, relative to max(1, ||A||_F).
inline constexpr double kSvdTolerance = 1e-10;

// svt switches from a full SVD to the Gram eigen route at this min(m, n).
inline constexpr std::size_t kSvtGramMinDim = 200;

struct SvdFactors {
  DenseMatrix left;                     // m x r, orthonormal columns
  std::vector<double> singular_values;  // nonincreasing, >= 0
  DenseMatrix right;                    // n x r, orthonormal columns
};

double frobenius_norm(const DenseMatrix& a);
double inner_product(const DenseMatrix& a, const DenseMatrix& b);
double l1_norm(const DenseMatrix& a);
double inf_norm(const DenseMatrix& a);
double operator_norm(const DenseMatrix& a);
double nuclear_norm(const DenseMatrix& a);

std::vector<double> singular_values(const DenseMatrix& a);

// Thin SVD, r = min(m, n). Throws NumericalError if LAPACK fails to converge.
SvdFactors svd(const DenseMatrix& a);

// Entries on the mask copied, everything else exactly 0.
DenseMatrix project_omega(const DenseMatrix& a, const ObservationMask& mask);

// Entrywise prox of tau*||.||_1: sign(t) * max(|t| - tau, 0).
DenseMatrix soft_threshold(const DenseMatrix& t, double tau);

// Singular value thresholding: prox of mu*||.||_*.
DenseMatrix svt(const DenseMatrix& y, double mu);

struct SvtResult {
  DenseMatrix value;
  // Singular values of `value`, i.e. the input spectrum after shrinkage,
  // zeros dropped. Their sum is the nuclear norm of `value`.
  std::vector<double> shrunk_values;
};
SvtResult svt_with_spectrum(const DenseMatrix& y, double mu);

// Projection onto {Z : ||P_Omega Z||_F <= delta}; off-mask entries pass through.
DenseMatrix ball_project_z(const DenseMatrix& n, const ObservationMask& mask, double delta);

}  // namespace uma
