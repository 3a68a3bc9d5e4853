#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uma/dense_matrix.hpp"
#include "uma/error.hpp"

namespace uma {

struct SolverConfig {
  double tau = 1.0;    // weight of ||Y||_1
  double alpha = 0.0;  // weight of the -<M, Y> term
  double kappa = 1.0;  // weight of (1/2)||Y||_F^2
  double beta = 1.0;   // augmented Lagrangian penalty
  double delta = 1.0;  // radius of the noise ball on the observed cells
  double tol_residual = 1e-6;
  double tol_change = 1e-6;
  std::size_t max_iters = 1000;
  bool record_ergodic = false;

  // Throws ParameterError on a violated invariant.
  void validate() const;

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

// Parameter defaults for an m x n rating matrix (m users).
SolverConfig default_config(std::size_t m, std::size_t n);

// Near robust-PCA limit: alpha = 0 and kappa shrunk by 1e-3, beta kept inside
// the rate range of the shrunken kappa.
SolverConfig rpca_preset(std::size_t m, std::size_t n);

// 2(sqrt5 - 2) and (sqrt33 - 5)/2: upper bounds on beta/kappa.
inline const double kBetaConvergenceFactor = 2.0 * (2.2360679774997896964 - 2.0);
inline const double kBetaRateFactor = (5.7445626465380286598 - 5.0) / 2.0;

struct BetaCheck {
  bool convergence_ok = false;
  bool rate_ok = false;
};
BetaCheck validate_beta(const SolverConfig& config);

struct SolverState {
  DenseMatrix x;
  DenseMatrix y;
  DenseMatrix z;
  DenseMatrix lambda;
  DenseMatrix y_prev;
  std::size_t iteration = 0;

  static SolverState zeros(std::size_t m, std::size_t n);
};

struct Diagnostics {
  // ||X + Y + Z - M||_F after each iteration.
  std::vector<double> residual_history;
  // ||dY||^2 + ||dX||^2 + ||dLambda||^2 between consecutive iterates.
  std::vector<double> change_history;
  std::vector<double> objective_history;
  // Residual of the running averages of X, Y, Z; empty unless recorded.
  std::vector<double> ergodic_residual_history;
  bool ergodic_recorded = false;
  bool beta_convergence_ok = false;
  bool beta_rate_ok = false;
  // Norm of the observed data, the scale used by the stopping rule.
  double data_norm = 0.0;

  friend bool operator==(const Diagnostics&, const Diagnostics&) = default;
};

struct DecompositionResult {
  DenseMatrix x;
  DenseMatrix y;
  DenseMatrix z;
  DenseMatrix lambda;
  Diagnostics diagnostics;
  bool converged = false;
  std::size_t iterations_used = 0;
};

// A non-finite value appeared. Carries what was recorded up to that point.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& step, Diagnostics diagnostics, double residual)
      : NumericalError("solver diverged: non-finite value in " + step, residual),
        step_(step),
        diagnostics_(std::move(diagnostics)) {}
  const std::string& step() const noexcept { return step_; }
  const Diagnostics& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string step_;
  Diagnostics diagnostics_;
};

// One pass of the Z, X, Y, Lambda updates. `observed` must already be zero off
// the mask.
SolverState step(const SolverState& state, const DenseMatrix& observed,
                 const ObservationMask& mask, const SolverConfig& config);

// Objective ||X||_* + tau||Y||_1 - alpha<M, Y> + (kappa/2)||Y||_F^2.
double objective(const SolverState& state, const DenseMatrix& observed,
                 const SolverConfig& config);

struct IterationReport {
  std::size_t iteration = 0;
  double residual = 0.0;
  double change = 0.0;
  double objective = 0.0;
};
using ProgressCallback = std::function<void(const IterationReport&)>;

DecompositionResult solve(const DenseMatrix& observed, const ObservationMask& mask,
                          const SolverConfig& config, const ProgressCallback& progress = {});

// Running sums of X, Y, Z for the ergodic averages, O(mn) memory.
class ErgodicAccumulator {
 public:
  ErgodicAccumulator(std::size_t rows, std::size_t cols);
  void add(const DenseMatrix& x, const DenseMatrix& y, const DenseMatrix& z);
  std::size_t count() const noexcept { return count_; }
  // ||(sum X + sum Y + sum Z)/t - M||_F
  double residual(const DenseMatrix& observed) const;

 private:
  DenseMatrix sum_;
  std::size_t count_ = 0;
};

// Ergodic residual sequence of a solve run with record_ergodic set; throws
// StateError otherwise.
const std::vector<double>& ergodic_averages(const DecompositionResult& result);

// Least-squares slope of log(values[t-1]) against log(t) for t in [first, last].
double loglog_slope(const std::vector<double>& values, std::size_t first, std::size_t last);

struct KktResiduals {
  double primal = 0.0;
  double x_fix = 0.0;
  double y_fix = 0.0;
  double z_fix = 0.0;
};
KktResiduals kkt_residuals(const DecompositionResult& result, const DenseMatrix& observed,
                           const ObservationMask& mask, const SolverConfig& config);

}  // namespace uma
