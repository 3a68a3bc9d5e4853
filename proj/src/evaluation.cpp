#include "uma/evaluation.hpp"

#include <cmath>
#include <limits>

#include "uma/data_io.hpp"
#include "uma/error.hpp"

namespace uma {

namespace {

double ratio_or_zero(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Labels label_users(const DenseMatrix& y, double threshold) {
  if (!(threshold >= 0.0)) throw ParameterError("label_users: threshold must be >= 0");
  Labels labels(y.rows(), 0);
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (double v : y.row(i))
      if (std::abs(v) > threshold) {
        labels[i] = 1;
        break;
      }
  return labels;
}

DetectionReport score(const Labels& labels, const Labels& truth) {
  if (labels.size() != truth.size())
    throw DimensionError("score: " + std::to_string(labels.size()) + " labels vs " +
                         std::to_string(truth.size()) + " truth entries");
  DetectionReport r;
  r.labels = labels;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = labels[i] != 0;
    const bool actual = truth[i] != 0;
    if (predicted && actual) ++r.true_positives;
    else if (predicted) ++r.false_positives;
    else if (actual) ++r.false_negatives;
    else ++r.true_negatives;
  }
  r.precision = ratio_or_zero(r.true_positives, r.true_positives + r.false_positives);
  r.recall = ratio_or_zero(r.true_positives, r.true_positives + r.false_negatives);
  const double sum = r.precision + r.recall;
  r.f1 = sum > 0.0 ? 2.0 * r.precision * r.recall / sum : 0.0;
  return r;
}

std::string to_string(Detector d) { return d == Detector::Uma ? "uma" : "rpca"; }

SolverConfig detector_config(Detector d, std::size_t m, std::size_t n) {
  return d == Detector::Uma ? default_config(m, n) : rpca_preset(m, n);
}

const SweepSummary& SweepResult::summary(double ratio, Detector d) const {
  for (const SweepSummary& s : summaries)
    if (s.ratio == ratio && s.detector == d) return s;
  throw DomainError("sweep: no summary for ratio " + format_double(ratio));
}

double SweepResult::f1_std_across_ratios(Detector d) const {
  std::vector<double> means;
  for (const SweepSummary& s : summaries)
    if (s.detector == d) means.push_back(s.mean_f1);
  if (means.empty()) throw DomainError("sweep: detector not part of the sweep");
  double mean = 0.0;
  for (double v : means) mean += v;
  mean /= static_cast<double>(means.size());
  double var = 0.0;
  for (double v : means) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(means.size()));
}

SweepResult sweep_spam_ratio(const AttackedDataset& clean, const std::vector<double>& ratios,
                             const std::vector<Detector>& detectors,
                             const std::vector<std::uint64_t>& seeds, const SweepOptions& options) {
  if (ratios.empty()) throw ParameterError("sweep: ratio list is empty");
  if (seeds.empty()) throw ParameterError("sweep: seed list is empty");
  if (detectors.empty()) throw ParameterError("sweep: detector list is empty");
  for (double r : ratios)
    if (!(r > 0.0 && r < 1.0)) throw ParameterError("sweep: ratios must lie in (0, 1)");
  if (options.jobs < 1) throw ParameterError("sweep: jobs must be >= 1");

  SweepResult result;
  result.spam_ratios = ratios;
  result.seeds = seeds;
  result.detectors = detectors;
  const std::size_t nd = detectors.size();
  const std::size_t units = ratios.size() * seeds.size();
  result.cells.resize(units * nd);

#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(options.jobs))
  for (std::size_t u = 0; u < units; ++u) {
    const double ratio = ratios[u / seeds.size()];
    const std::uint64_t seed = seeds[u % seeds.size()];
    SweepCell* cells = &result.cells[u * nd];
    for (std::size_t d = 0; d < nd; ++d) {
      cells[d].ratio = ratio;
      cells[d].seed = seed;
      cells[d].detector = detectors[d];
    }
    AttackedDataset attacked;
    try {
      AttackSpec spec = options.attack;
      spec.spam_ratio = ratio;
      spec.seed = seed;
      attacked = apply_attacks(clean, spec);
    } catch (const std::exception& e) {
      for (std::size_t d = 0; d < nd; ++d) cells[d].error = e.what();
      continue;
    }
    const std::size_t m = attacked.ratings.rows();
    const std::size_t n = attacked.ratings.cols();
    for (std::size_t d = 0; d < nd; ++d) {
      try {
        SolverConfig config = detector_config(detectors[d], m, n);
        config.max_iters = options.max_iters;
        const DecompositionResult r = solve(attacked.ratings, attacked.mask, config);
        cells[d].report = score(label_users(r.y), attacked.truth_labels);
        cells[d].converged = r.converged;
        cells[d].iterations = r.iterations_used;
      } catch (const std::exception& e) {
        cells[d].error = e.what();
      }
    }
  }

  for (double ratio : ratios)
    for (Detector det : detectors) {
      SweepSummary s;
      s.ratio = ratio;
      s.detector = det;
      std::vector<double> f1s;
      for (const SweepCell& c : result.cells) {
        if (c.ratio != ratio || c.detector != det || !c.report) continue;
        s.mean_precision += c.report->precision;
        s.mean_recall += c.report->recall;
        f1s.push_back(c.report->f1);
      }
      s.runs = f1s.size();
      if (s.runs > 0) {
        const double k = static_cast<double>(s.runs);
        for (double v : f1s) s.mean_f1 += v;
        s.mean_precision /= k;
        s.mean_recall /= k;
        s.mean_f1 /= k;
        for (double v : f1s) s.std_f1 += (v - s.mean_f1) * (v - s.mean_f1);
        s.std_f1 = std::sqrt(s.std_f1 / k);
      }
      result.summaries.push_back(s);
    }
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::string out = "ratio,seed,detector,precision,recall,f1\n";
  for (const SweepCell& c : result.cells) {
    out += format_double(c.ratio) + ',' + std::to_string(c.seed) + ',' + to_string(c.detector);
    for (double v : {c.report ? c.report->precision : nan, c.report ? c.report->recall : nan,
                     c.report ? c.report->f1 : nan})
      out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

nlohmann::json config_json(const SolverConfig& c) {
  return {{"tau", c.tau},
          {"alpha", c.alpha},
          {"kappa", c.kappa},
          {"beta", c.beta},
          {"delta", c.delta},
          {"tol_residual", c.tol_residual},
          {"tol_change", c.tol_change},
          {"max_iters", c.max_iters},
          {"record_ergodic", c.record_ergodic}};
}

nlohmann::json report_json(const DetectionReport& report) {
  return {{"labels", report.labels},
          {"confusion",
           {{"true_positives", report.true_positives},
            {"false_positives", report.false_positives},
            {"false_negatives", report.false_negatives},
            {"true_negatives", report.true_negatives}}},
          {"metrics", {{"precision", report.precision}, {"recall", report.recall}, {"f1", report.f1}}}};
}

nlohmann::json report_json(const DetectionReport& report, const SolverConfig& config,
                           const DecompositionResult& result) {
  const Diagnostics& d = result.diagnostics;
  auto last = [](const std::vector<double>& v) -> nlohmann::json {
    return v.empty() ? nlohmann::json(nullptr) : nlohmann::json(v.back());
  };
  nlohmann::json j = report_json(report);
  j["config"] = config_json(config);
  j["diagnostics"] = {{"converged", result.converged},
                      {"iterations", result.iterations_used},
                      {"final_residual", last(d.residual_history)},
                      {"final_change", last(d.change_history)},
                      {"final_objective", last(d.objective_history)},
                      {"data_norm", d.data_norm},
                      {"beta_convergence_ok", d.beta_convergence_ok},
                      {"beta_rate_ok", d.beta_rate_ok}};
  return j;
}

}  // namespace uma
