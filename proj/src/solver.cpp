#include "uma/solver.hpp"

#include <cmath>
#include <limits>

#include "uma/kernels.hpp"
#include "uma/numerics.hpp"

namespace uma {

namespace {

using Exec = kernels::Parallel;

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

void require_finite(const DenseMatrix& m, const char* step) {
  if (!m.all_finite())
    throw DivergenceError(step, {}, std::numeric_limits<double>::quiet_NaN());
}

void require_inputs(const SolverState& state, const DenseMatrix& observed,
                    const ObservationMask& mask) {
  if (!mask.matches(observed)) throw DimensionError("solver: mask does not match data shape");
  for (const DenseMatrix* m : {&state.x, &state.y, &state.z, &state.lambda})
    if (!m->same_shape(observed)) throw DimensionError("solver: state does not match data shape");
}

struct StepOutput {
  SolverState state;
  double nuclear_x = 0.0;  // ||X^{k+1}||_*, read off the shrunk spectrum
  double residual = 0.0;   // ||X + Y + Z - M||_F of the new iterate
};

StepOutput advance(const SolverState& s, const DenseMatrix& observed, const ObservationMask& mask,
                   const SolverConfig& c) {
  const std::size_t m = observed.rows();
  const std::size_t n = observed.cols();
  const double inv_beta = 1.0 / c.beta;
  StepOutput out;
  SolverState& next = out.state;
  DenseMatrix work(m, n);

  // Z: project Lambda/beta + M - X - Y onto the noise ball.
  kernels::combine4<Exec>(inv_beta, s.lambda.values(), 1.0, observed.values(), s.x.values(),
                          s.y.values(), work.values());
  require_finite(work, "z-update");
  next.z = ball_project_z(work, mask, c.delta);

  // X: singular value thresholding of Lambda/beta + M - Y - Z at 1/beta.
  kernels::combine4<Exec>(inv_beta, s.lambda.values(), 1.0, observed.values(), s.y.values(),
                          next.z.values(), work.values());
  require_finite(work, "x-update");
  SvtResult x = svt_with_spectrum(work, inv_beta);
  next.x = std::move(x.value);
  for (double v : x.shrunk_values) out.nuclear_x += v;
  require_finite(next.x, "x-update");

  // Y: shrink ((alpha+beta)/beta) M + Lambda/beta - Z - X at tau/beta, scale by beta/(beta+kappa).
  kernels::combine4<Exec>((c.alpha + c.beta) * inv_beta, observed.values(), inv_beta,
                          s.lambda.values(), next.z.values(), next.x.values(), work.values());
  next.y = DenseMatrix(m, n);
  kernels::soft_threshold_scaled<Exec>(work.values(), c.tau * inv_beta, c.beta / (c.beta + c.kappa),
                                       next.y.values());
  require_finite(next.y, "y-update");

  // Lambda <- Lambda - beta (X + Y + Z - M)
  kernels::sum3_minus<Exec>(next.x.values(), next.y.values(), next.z.values(), observed.values(),
                            work.values());
  out.residual = std::sqrt(kernels::sum_squares(work.values()));
  next.lambda = DenseMatrix(m, n);
  kernels::axpy<Exec>(s.lambda.values(), -c.beta, work.values(), next.lambda.values());
  require_finite(next.lambda, "multiplier-update");

  next.y_prev = s.y;
  next.iteration = s.iteration + 1;
  return out;
}

double objective_from(double nuclear_x, const DenseMatrix& y, const DenseMatrix& observed,
                      const SolverConfig& c) {
  return nuclear_x + c.tau * l1_norm(y) - c.alpha * inner_product(observed, y) +
         0.5 * c.kappa * kernels::sum_squares(y.values());
}

}  // namespace

void SolverConfig::validate() const {
  if (!positive_finite(tau)) throw ParameterError("solver config: tau must be > 0");
  if (!(std::isfinite(alpha) && alpha >= 0.0))
    throw ParameterError("solver config: alpha must be >= 0");
  if (!positive_finite(kappa)) throw ParameterError("solver config: kappa must be > 0");
  if (!positive_finite(beta)) throw ParameterError("solver config: beta must be > 0");
  if (!positive_finite(delta)) throw ParameterError("solver config: delta must be > 0");
  if (!positive_finite(tol_residual))
    throw ParameterError("solver config: tol_residual must be > 0");
  if (!positive_finite(tol_change)) throw ParameterError("solver config: tol_change must be > 0");
  if (max_iters < 1) throw ParameterError("solver config: max_iters must be >= 1");
}

SolverConfig default_config(std::size_t m, std::size_t n) {
  if (m < 1 || n < 1) throw ParameterError("default_config: m and n must be >= 1");
  SolverConfig c;
  const double md = static_cast<double>(m);
  c.tau = 10.0 / std::sqrt(md);
  c.alpha = 10.0 / md;
  c.delta = std::sqrt(md * static_cast<double>(n)) / 200.0;
  c.beta = c.tau / 3.0;
  c.kappa = c.tau;
  return c;
}

SolverConfig rpca_preset(std::size_t m, std::size_t n) {
  SolverConfig c = default_config(m, n);
  c.alpha = 0.0;
  c.kappa = c.tau * 1e-3;
  c.beta = std::min(c.beta, 0.37 * c.kappa);
  return c;
}

BetaCheck validate_beta(const SolverConfig& config) {
  BetaCheck out;
  out.convergence_ok = config.beta > 0.0 && config.beta < kBetaConvergenceFactor * config.kappa;
  out.rate_ok = config.beta > 0.0 && config.beta < kBetaRateFactor * config.kappa;
  return out;
}

SolverState SolverState::zeros(std::size_t m, std::size_t n) {
  return {DenseMatrix(m, n), DenseMatrix(m, n), DenseMatrix(m, n), DenseMatrix(m, n),
          DenseMatrix(m, n), 0};
}

SolverState step(const SolverState& state, const DenseMatrix& observed,
                 const ObservationMask& mask, const SolverConfig& config) {
  config.validate();
  require_inputs(state, observed, mask);
  return advance(state, observed, mask, config).state;
}

double objective(const SolverState& state, const DenseMatrix& observed,
                 const SolverConfig& config) {
  if (!state.x.same_shape(observed) || !state.y.same_shape(observed))
    throw DimensionError("objective: state does not match data shape");
  return objective_from(nuclear_norm(state.x), state.y, observed, config);
}

ErgodicAccumulator::ErgodicAccumulator(std::size_t rows, std::size_t cols) : sum_(rows, cols) {}

void ErgodicAccumulator::add(const DenseMatrix& x, const DenseMatrix& y, const DenseMatrix& z) {
  sum_ += x;
  sum_ += y;
  sum_ += z;
  ++count_;
}

double ErgodicAccumulator::residual(const DenseMatrix& observed) const {
  if (count_ == 0) throw StateError("ErgodicAccumulator: no iterates added");
  if (!sum_.same_shape(observed)) throw DimensionError("ErgodicAccumulator: shape mismatch");
  const double t = static_cast<double>(count_);
  double s = 0.0;
  const auto sum = sum_.values();
  const auto obs = observed.values();
  for (std::size_t i = 0; i < sum.size(); ++i) {
    const double d = sum[i] / t - obs[i];
    s += d * d;
  }
  return std::sqrt(s);
}

DecompositionResult solve(const DenseMatrix& observed_in, const ObservationMask& mask,
                          const SolverConfig& config, const ProgressCallback& progress) {
  config.validate();
  if (!mask.matches(observed_in)) throw DimensionError("solve: mask does not match data shape");
  if (!observed_in.all_finite()) throw DomainError("solve: non-finite observed entry");
  const DenseMatrix observed = project_omega(observed_in, mask);
  const std::size_t m = observed.rows();
  const std::size_t n = observed.cols();

  DecompositionResult result;
  Diagnostics& diag = result.diagnostics;
  const BetaCheck beta = validate_beta(config);
  diag.beta_convergence_ok = beta.convergence_ok;
  diag.beta_rate_ok = beta.rate_ok;
  diag.ergodic_recorded = config.record_ergodic;
  diag.data_norm = frobenius_norm(observed);
  const double residual_scale = 1.0 + diag.data_norm;
  const double change_scale = 1.0 + diag.data_norm * diag.data_norm;

  std::optional<ErgodicAccumulator> ergodic;
  if (config.record_ergodic) ergodic.emplace(m, n);

  SolverState state = SolverState::zeros(m, n);
  for (std::size_t k = 0; k < config.max_iters; ++k) {
    StepOutput out;
    try {
      out = advance(state, observed, mask, config);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.step(), diag, e.residual());
    }
    const double change = kernels::diff_sum_squares(state.y.values(), out.state.y.values()) +
                          kernels::diff_sum_squares(state.x.values(), out.state.x.values()) +
                          kernels::diff_sum_squares(state.lambda.values(), out.state.lambda.values());
    const double obj = objective_from(out.nuclear_x, out.state.y, observed, config);
    state = std::move(out.state);

    diag.residual_history.push_back(out.residual);
    diag.change_history.push_back(change);
    diag.objective_history.push_back(obj);
    if (ergodic) {
      ergodic->add(state.x, state.y, state.z);
      diag.ergodic_residual_history.push_back(ergodic->residual(observed));
    }
    if (!std::isfinite(out.residual) || !std::isfinite(change) || !std::isfinite(obj))
      throw DivergenceError("history", diag, out.residual);
    if (progress) progress({state.iteration, out.residual, change, obj});

    if (out.residual / residual_scale <= config.tol_residual &&
        change / change_scale <= config.tol_change) {
      result.converged = true;
      break;
    }
  }

  result.iterations_used = state.iteration;
  result.x = std::move(state.x);
  result.y = std::move(state.y);
  result.z = std::move(state.z);
  result.lambda = std::move(state.lambda);
  return result;
}

const std::vector<double>& ergodic_averages(const DecompositionResult& result) {
  if (!result.diagnostics.ergodic_recorded)
    throw StateError("ergodic_averages: solve ran without record_ergodic");
  return result.diagnostics.ergodic_residual_history;
}

double loglog_slope(const std::vector<double>& values, std::size_t first, std::size_t last) {
  if (first < 1) first = 1;
  last = std::min(last, values.size());
  if (last <= first) throw DomainError("loglog_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t t = first; t <= last; ++t) {
    const double v = values[t - 1];
    if (!(v > 0.0)) throw DomainError("loglog_slope: non-positive value");
    const double lx = std::log(static_cast<double>(t));
    const double ly = std::log(v);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  const double cnt = static_cast<double>(count);
  return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

KktResiduals kkt_residuals(const DecompositionResult& result, const DenseMatrix& observed_in,
                           const ObservationMask& mask, const SolverConfig& config) {
  config.validate();
  const DenseMatrix observed = project_omega(observed_in, mask);
  const std::size_t m = observed.rows();
  const std::size_t n = observed.cols();
  const double inv_beta = 1.0 / config.beta;
  KktResiduals out;
  DenseMatrix work(m, n);

  kernels::sum3_minus<Exec>(result.x.values(), result.y.values(), result.z.values(),
                            observed.values(), work.values());
  out.primal = frobenius_norm(work);

  kernels::combine4<Exec>(inv_beta, result.lambda.values(), 1.0, observed.values(),
                          result.x.values(), result.y.values(), work.values());
  out.z_fix = std::sqrt(
      kernels::diff_sum_squares(result.z.values(), ball_project_z(work, mask, config.delta).values()));

  kernels::combine4<Exec>(inv_beta, result.lambda.values(), 1.0, observed.values(),
                          result.y.values(), result.z.values(), work.values());
  out.x_fix = std::sqrt(kernels::diff_sum_squares(result.x.values(), svt(work, inv_beta).values()));

  kernels::combine4<Exec>((config.alpha + config.beta) * inv_beta, observed.values(), inv_beta,
                          result.lambda.values(), result.z.values(), result.x.values(),
                          work.values());
  DenseMatrix y(m, n);
  kernels::soft_threshold_scaled<Exec>(work.values(), config.tau * inv_beta,
                                       config.beta / (config.beta + config.kappa), y.values());
  out.y_fix = std::sqrt(kernels::diff_sum_squares(result.y.values(), y.values()));
  return out;
}

}  // namespace uma
