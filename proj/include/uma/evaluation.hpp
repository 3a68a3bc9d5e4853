#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "uma/attack_sim.hpp"
#include "uma/dense_matrix.hpp"
#include "uma/solver.hpp"

namespace uma {

using Labels = std::vector<std::uint8_t>;

struct DetectionReport {
  Labels labels;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t true_negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const DetectionReport&, const DetectionReport&) = default;
};

// User i is an attacker iff some |Y_ij| > threshold. The default 0 is an
// exact nonzero test.
Labels label_users(const DenseMatrix& y, double threshold = 0.0);

// Precision is 0 when nothing is detected, recall is 0 when truth has no
// attacker, F1 is 0 when P + R = 0.
DetectionReport score(const Labels& labels, const Labels& truth);

enum class Detector { Uma, RpcaPreset };
std::string to_string(Detector d);

SolverConfig detector_config(Detector d, std::size_t m, std::size_t n);

struct SweepCell {
  double ratio = 0.0;
  std::uint64_t seed = 0;
  Detector detector = Detector::Uma;
  std::optional<DetectionReport> report;  // empty when `error` is set
  std::string error;
  bool converged = false;
  std::size_t iterations = 0;
};

struct SweepSummary {
  double ratio = 0.0;
  Detector detector = Detector::Uma;
  std::size_t runs = 0;  // cells that produced a report
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;
};

struct SweepResult {
  std::vector<double> spam_ratios;
  std::vector<std::uint64_t> seeds;
  std::vector<Detector> detectors;
  // Ordered by ratio, then seed, then detector.
  std::vector<SweepCell> cells;
  // Ordered by ratio, then detector.
  std::vector<SweepSummary> summaries;

  const SweepSummary& summary(double ratio, Detector d) const;
  // Population standard deviation of the per-ratio mean F1.
  double f1_std_across_ratios(Detector d) const;
};

struct SweepOptions {
  AttackSpec attack;  // spam_ratio and seed are overwritten per cell
  std::size_t jobs = 1;
  std::size_t max_iters = 1000;
};

// Holds `clean` fixed and regenerates the attacks for every ratio x seed; each
// detector then runs on the same attacked instance. Failures are recorded in
// the cell.
SweepResult sweep_spam_ratio(const AttackedDataset& clean, const std::vector<double>& ratios,
                             const std::vector<Detector>& detectors,
                             const std::vector<std::uint64_t>& seeds, const SweepOptions& options);

// Columns ratio,seed,detector,precision,recall,f1; failed cells print nan.
std::string sweep_csv(const SweepResult& result);

nlohmann::json config_json(const SolverConfig& config);
// Labels, confusion counts and metrics.
nlohmann::json report_json(const DetectionReport& report);
// Adds the config echo and a diagnostics summary of the run.
nlohmann::json report_json(const DetectionReport& report, const SolverConfig& config,
                           const DecompositionResult& result);

}  // namespace uma
