// Command-line front end: simulate, detect, evaluate, sweep, bench.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "uma/attack_sim.hpp"
#include "uma/data_io.hpp"
#include "uma/error.hpp"
#include "uma/evaluation.hpp"
#include "uma/numerics.hpp"
#include "uma/solver.hpp"

namespace fs = std::filesystem;
using namespace uma;

namespace {

enum Exit : int {
  kOk = 0,
  kNotConverged = 1,
  kUsage = 2,
  kDiverged = 3,
  kIo = 4,
  kFailed = 5,
};

struct Common {
  std::string output_dir;
  int verbosity = 0;
};

struct SyntheticOptions {
  std::size_t m = 500;
  std::size_t n = 300;
  std::size_t rank = 5;
  double sigma = 0.1;
  double density = 0.2;
  double bound = 2.0;
};

struct InputOptions {
  std::string path;
  std::string format = "tab";
  double center = 3.0;
  double bound = 2.0;
};

struct AttackOptions {
  double spam_ratio = 0.2;
  double filler_ratio = 0.01;
  std::string direction = "push";
  std::string experiment = "paper-1";
  std::vector<double> mix;
  std::optional<std::size_t> gamma;
  double epsilon = 3.0;
  std::size_t profiles_per_attacker = 1;
};

struct SolverOverrides {
  std::optional<double> tau, alpha, kappa, beta, delta, beta_factor;
  std::optional<double> tol_residual, tol_change;
  std::optional<std::size_t> max_iters;
  bool rpca = false;
};

fs::path output_path(const Common& c, const std::string& name) {
  fs::path dir = c.output_dir;
  if (dir.empty()) {
    const char* env = std::getenv("UMA_OUTPUT_DIR");
    dir = env && *env ? fs::path(env) : fs::path(".");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
  return dir / name;
}

void add_synthetic(CLI::App* app, SyntheticOptions& s) {
  app->add_option("--m", s.m, "Users of the synthetic base")->check(CLI::PositiveNumber);
  app->add_option("--n", s.n, "Items of the synthetic base")->check(CLI::PositiveNumber);
  app->add_option("--rank", s.rank, "Rank of the ground truth")->check(CLI::PositiveNumber);
  app->add_option("--sigma", s.sigma, "Noise standard deviation");
  app->add_option("--density", s.density, "Observed fraction of cells");
  app->add_option("--bound", s.bound, "Rating bound R of the centered scale");
}

void add_input(CLI::App* app, InputOptions& in, bool required) {
  auto* opt = app->add_option("--input", in.path, "Ratings file");
  if (required) opt->required();
  app->add_option("--format", in.format, "Ratings format: tab, colon or csv");
  app->add_option("--center", in.center, "Value subtracted from every rating");
  app->add_option("--scale-bound", in.bound, "Bound R on the centered ratings");
}

void add_attack(CLI::App* app, AttackOptions& a) {
  app->add_option("--spam-ratio", a.spam_ratio, "Attack profiles over all profiles, in (0, 1)");
  app->add_option("--filler-ratio", a.filler_ratio, "Filler items per profile over all items");
  app->add_option("--direction", a.direction, "push or nuke")
      ->check(CLI::IsMember({"push", "nuke"}));
  app->add_option("--experiment", a.experiment, "paper-1 (injected) or paper-2 (25% injected, 75% hijacked)")
      ->check(CLI::IsMember({"paper-1", "paper-2"}));
  app->add_option("--mix", a.mix, "Weights random,average,bandwagon,hijack")->delimiter(',')->expected(4);
  app->add_option("--gamma", a.gamma, "Max attackers per item");
  app->add_option("--epsilon", a.epsilon, "Deviation that counts as an attack rating");
  app->add_option("--profiles-per-attacker", a.profiles_per_attacker, "Profiles controlled by one attacker");
}

void add_solver(CLI::App* app, SolverOverrides& o) {
  app->add_option("--tau", o.tau, "Weight of ||Y||_1 (default 10/sqrt(m))");
  app->add_option("--alpha", o.alpha, "Weight of -<M, Y> (default 10/m)");
  app->add_option("--kappa", o.kappa, "Weight of ||Y||_F^2 / 2 (default tau)");
  auto* beta = app->add_option("--beta", o.beta, "Penalty (default tau/3)");
  app->add_option("--beta-factor", o.beta_factor, "Set beta = f * kappa")->excludes(beta);
  app->add_option("--delta", o.delta, "Noise ball radius (default sqrt(mn)/200)");
  app->add_option("--tol-residual", o.tol_residual, "Relative residual tolerance");
  app->add_option("--tol-change", o.tol_change, "Relative change tolerance");
  app->add_option("--max-iters", o.max_iters, "Iteration cap");
  app->add_flag("--rpca", o.rpca, "Use the robust-PCA limit preset");
}

AttackSpec build_spec(const AttackOptions& a, std::uint64_t seed) {
  AttackSpec spec;
  spec.spam_ratio = a.spam_ratio;
  spec.filler_ratio = a.filler_ratio;
  spec.direction = a.direction == "nuke" ? Direction::Nuke : Direction::Push;
  if (a.experiment == "paper-2") spec.mix = hijack_heavy_mix();
  if (!a.mix.empty()) {
    double total = 0.0;
    for (double w : a.mix) {
      if (!(w >= 0.0)) throw ParameterError("--mix weights must be >= 0");
      total += w;
    }
    if (!(total > 0.0)) throw ParameterError("--mix weights must not all be 0");
    spec.mix = {a.mix[0] / total, a.mix[1] / total, a.mix[2] / total, a.mix[3] / total};
  }
  spec.gamma = a.gamma;
  spec.epsilon = a.epsilon;
  spec.profiles_per_attacker = a.profiles_per_attacker;
  spec.seed = seed;
  spec.validate();
  return spec;
}

SolverConfig build_config(const SolverOverrides& o, std::size_t m, std::size_t n) {
  SolverConfig c = o.rpca ? rpca_preset(m, n) : default_config(m, n);
  if (o.tau) c.tau = *o.tau;
  if (o.alpha) c.alpha = *o.alpha;
  if (o.kappa) c.kappa = *o.kappa;
  if (o.beta) c.beta = *o.beta;
  if (o.beta_factor) c.beta = *o.beta_factor * c.kappa;
  if (o.delta) c.delta = *o.delta;
  if (o.tol_residual) c.tol_residual = *o.tol_residual;
  if (o.tol_change) c.tol_change = *o.tol_change;
  if (o.max_iters) c.max_iters = *o.max_iters;
  c.validate();
  const BetaCheck check = validate_beta(c);
  if (!check.convergence_ok)
    std::cerr << "warning: beta outside convergence range (beta = " << c.beta << ", limit "
              << kBetaConvergenceFactor * c.kappa << ")\n";
  else if (!check.rate_ok)
    std::cerr << "warning: beta outside rate range (beta = " << c.beta << ", limit "
              << kBetaRateFactor * c.kappa << ")\n";
  return c;
}

AttackedDataset synthetic_clean(const SyntheticOptions& s, std::uint64_t seed) {
  GroundTruthParams p;
  p.m = s.m;
  p.n = s.n;
  p.rank = s.rank;
  p.sigma = s.sigma;
  p.density = s.density;
  p.bound = s.bound;
  p.seed = seed;
  const GeneratedTruth truth = generate_ground_truth(p);
  return make_clean_dataset(truth.ground, truth.mask, observe(truth.ground, truth.mask, true));
}

RatingMatrix read_matrix(const InputOptions& in, int verbosity) {
  const ParsedRatings parsed = load_ratings(in.path, parse_rating_format(in.format));
  for (std::size_t line : parsed.malformed_lines)
    std::cerr << "warning: " << in.path << ":" << line << ": malformed line skipped\n";
  RatingMatrix rm = build_matrix(parsed.records, in.center, in.bound);
  if (rm.duplicates > 0)
    std::cerr << "warning: " << rm.duplicates << " duplicate ratings, last occurrence kept\n";
  if (verbosity > 0)
    std::cerr << "loaded " << rm.matrix.rows() << " x " << rm.matrix.cols() << " with "
              << rm.mask.count() << " ratings\n";
  return rm;
}

std::vector<std::string> numbered_ids(std::size_t count) {
  std::vector<std::string> ids(count);
  for (std::size_t i = 0; i < count; ++i) ids[i] = std::to_string(i + 1);
  return ids;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::vector<double> parse_ratios(const std::string& text) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw ParameterError("--ratios: bad number '" + s + "'");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw ParameterError("--ratios expects first:last:step");
    const double first = number(parts[0]);
    const double last = number(parts[1]);
    const double step = number(parts[2]);
    if (!(step > 0.0) || last < first) throw ParameterError("--ratios: need step > 0 and last >= first");
    const auto count = static_cast<std::size_t>(std::floor((last - first) / step + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k)
      out.push_back(std::round((first + static_cast<double>(k) * step) * 1e12) / 1e12);
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
  }
  return out;
}

ProgressCallback progress_printer(int verbosity) {
  if (verbosity <= 0) return {};
  return [](const IterationReport& r) {
    if (r.iteration % 50 == 0)
      std::cerr << "iter " << r.iteration << "  residual " << r.residual << "  change " << r.change
                << "\n";
  };
}

nlohmann::json diagnostics_json(const SolverConfig& config, const Diagnostics& d, bool converged,
                                std::size_t iterations) {
  return {{"config", config_json(config)},
          {"converged", converged},
          {"iterations", iterations},
          {"beta_convergence_ok", d.beta_convergence_ok},
          {"beta_rate_ok", d.beta_rate_ok},
          {"data_norm", d.data_norm},
          {"residual_history", d.residual_history},
          {"change_history", d.change_history},
          {"objective_history", d.objective_history}};
}

int cmd_simulate(const Common& common, const SyntheticOptions& syn, const InputOptions& in,
                 const AttackOptions& atk, std::uint64_t seed) {
  const AttackSpec spec = build_spec(atk, seed);
  AttackedDataset clean;
  std::vector<std::string> ids, items;
  if (in.path.empty()) {
    clean = synthetic_clean(syn, seed);
  } else {
    const RatingMatrix rm = read_matrix(in, common.verbosity);
    clean = make_clean_dataset(rm.matrix, rm.mask, rm.bound);
    ids = rm.user_ids;
    items = rm.item_ids;
  }
  const AttackedDataset attacked = apply_attacks(clean, spec);
  const std::size_t extra = attacked.ratings.rows() - clean.ratings.rows();
  if (ids.empty()) {
    ids = numbered_ids(attacked.ratings.rows());
  } else {
    // Injected rows get ids that cannot collide with numeric source ids.
    for (std::size_t k = 0; k < extra; ++k) ids.push_back("attacker-" + std::to_string(k + 1));
  }

  const double center = in.path.empty() ? 3.0 : in.center;
  const fs::path ratings = output_path(common, "ratings.data");
  if (in.path.empty()) {
    write_ratings(ratings, attacked.ratings, attacked.mask, center);
  } else {
    std::string out;
    for (const Cell& c : attacked.mask.cells())
      out += ids[c.row] + '\t' + items[c.col] + '\t' +
             format_double(attacked.ratings(c.row, c.col) + center) + "\t0\n";
    write_file_atomic(ratings, out);
  }
  write_labels(output_path(common, "truth.csv"), ids, attacked.truth_labels);
  write_file_atomic(output_path(common, "manifest.json"), dump(attack_manifest(attacked, spec)));

  std::size_t attackers = 0;
  for (auto l : attacked.truth_labels) attackers += l;
  std::cout << "users " << attacked.ratings.rows() << "  items " << attacked.ratings.cols()
            << "  ratings " << attacked.mask.count() << "\n"
            << "attackers " << attackers << " (" << extra << " injected, " << attackers - extra
            << " hijacked)  weak cells " << attacked.weak_cells.size() << "\n"
            << "wrote " << ratings.parent_path().string() << "/{ratings.data,truth.csv,manifest.json}\n";
  return kOk;
}

int cmd_detect(const Common& common, const InputOptions& in, const SolverOverrides& o,
               double threshold) {
  const RatingMatrix rm = read_matrix(in, common.verbosity);
  const SolverConfig config = build_config(o, rm.matrix.rows(), rm.matrix.cols());
  DecompositionResult result;
  try {
    result = solve(rm.matrix, rm.mask, config, progress_printer(common.verbosity));
  } catch (const DivergenceError& e) {
    const Diagnostics& d = e.diagnostics();
    write_file_atomic(output_path(common, "diagnostics.json"),
                      dump(diagnostics_json(config, d, false, d.residual_history.size())));
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  }
  save_result(output_path(common, "checkpoint.uma1"), result, config, rm.mask);
  const Labels labels = label_users(result.y, threshold);
  write_labels(output_path(common, "labels.csv"), rm.user_ids, labels);
  write_file_atomic(output_path(common, "diagnostics.json"),
                    dump(diagnostics_json(config, result.diagnostics, result.converged,
                                          result.iterations_used)));
  std::size_t flagged = 0;
  for (auto l : labels) flagged += l;
  std::cout << (result.converged ? "converged" : "not converged") << " after "
            << result.iterations_used << " iterations\n"
            << "flagged " << flagged << " of " << labels.size() << " users\n";
  return result.converged ? kOk : kNotConverged;
}

int cmd_evaluate(const Common& common, const std::string& labels_path, const std::string& truth_path,
                 const std::string& checkpoint_path) {
  const auto truth_rows = read_labels(truth_path);
  const auto predicted_rows = read_labels(labels_path);
  std::map<std::string, std::size_t> position;
  Labels truth(truth_rows.size()), predicted(truth_rows.size(), 0);
  for (std::size_t i = 0; i < truth_rows.size(); ++i) {
    position[truth_rows[i].first] = i;
    truth[i] = truth_rows[i].second;
  }
  for (const auto& [id, flag] : predicted_rows) {
    const auto it = position.find(id);
    if (it == position.end()) throw FormatError("user " + id + " is not in " + truth_path);
    predicted[it->second] = flag;
  }
  const DetectionReport report = score(predicted, truth);
  nlohmann::json j = report_json(report);
  if (!checkpoint_path.empty()) {
    const Checkpoint cp = load_result(checkpoint_path);
    j = report_json(report, cp.config, cp.result);
  }
  write_file_atomic(output_path(common, "report.json"), dump(j));
  std::cout << "precision " << report.precision << "  recall " << report.recall << "  f1 "
            << report.f1 << "\n"
            << "tp " << report.true_positives << "  fp " << report.false_positives << "  fn "
            << report.false_negatives << "  tn " << report.true_negatives << "\n";
  return kOk;
}

int cmd_sweep(const Common& common, const SyntheticOptions& syn, const InputOptions& in,
              const AttackOptions& atk, const std::string& ratios_text, std::size_t seed_count,
              std::uint64_t base_seed, std::size_t jobs, const std::vector<std::string>& detector_names,
              std::size_t max_iters) {
  const std::vector<double> ratios = parse_ratios(ratios_text);
  std::vector<Detector> detectors;
  for (const std::string& d : detector_names) detectors.push_back(d == "rpca" ? Detector::RpcaPreset : Detector::Uma);
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < seed_count; ++k) seeds.push_back(base_seed + k);

  AttackedDataset clean;
  if (in.path.empty()) {
    clean = synthetic_clean(syn, base_seed);
  } else {
    const RatingMatrix rm = read_matrix(in, common.verbosity);
    clean = make_clean_dataset(rm.matrix, rm.mask, rm.bound);
  }
  SweepOptions options;
  options.attack = build_spec(atk, base_seed);
  options.jobs = jobs;
  options.max_iters = max_iters;
  const SweepResult result = sweep_spam_ratio(clean, ratios, detectors, seeds, options);
  const fs::path csv = output_path(common, "sweep.csv");
  write_file_atomic(csv, sweep_csv(result));

  bool failures = false;
  for (const SweepCell& c : result.cells)
    if (!c.report) {
      failures = true;
      std::cerr << "cell ratio " << c.ratio << " seed " << c.seed << " " << to_string(c.detector)
                << " failed: " << c.error << "\n";
    }
  std::cout << "ratio     detector  mean_f1   std_f1    runs\n";
  for (const SweepSummary& s : result.summaries) {
    char line[128];
    std::snprintf(line, sizeof line, "%-9.4g %-9s %-9.4f %-9.4f %zu\n", s.ratio,
                  to_string(s.detector).c_str(), s.mean_f1, s.std_f1, s.runs);
    std::cout << line;
  }
  std::cout << "wrote " << csv.string() << "\n";
  return failures ? kFailed : kOk;
}

int cmd_bench(const Common& common, const InputOptions& in, const SolverOverrides& o,
              std::uint64_t seed, std::size_t iters, std::size_t fit_first, std::size_t fit_last) {
  DenseMatrix observed;
  ObservationMask mask;
  if (in.path.empty()) {
    SpikedInstance inst = reference_instance(seed);
    observed = std::move(inst.observed);
    mask = std::move(inst.mask);
  } else {
    RatingMatrix rm = read_matrix(in, common.verbosity);
    observed = std::move(rm.matrix);
    mask = std::move(rm.mask);
  }
  SolverOverrides fixed = o;
  if (!fixed.beta && !fixed.beta_factor) fixed.beta_factor = 0.3;
  fixed.max_iters = iters;
  // Run the full horizon: the rate is measured, not the stopping rule.
  fixed.tol_residual = fixed.tol_residual.value_or(1e-300);
  fixed.tol_change = fixed.tol_change.value_or(1e-300);
  SolverConfig config = build_config(fixed, observed.rows(), observed.cols());
  config.record_ergodic = true;
  const DecompositionResult r = solve(observed, mask, config, progress_printer(common.verbosity));
  const auto& erg = ergodic_averages(r);
  const auto& res = r.diagnostics.residual_history;

  std::string csv = "t,residual,ergodic_residual,t2_ergodic2\n";
  for (std::size_t t = 1; t <= erg.size(); ++t) {
    const double e = erg[t - 1];
    csv += std::to_string(t) + ',' + format_double(res[t - 1]) + ',' + format_double(e) + ',' +
           format_double(static_cast<double>(t * t) * e * e) + '\n';
  }
  write_file_atomic(output_path(common, "bench.csv"), csv);

  std::cout << "t        residual       ergodic        t^2*ergodic^2\n";
  for (std::size_t t : {1, 10, 50, 100, 200, 500, 1000}) {
    if (t > erg.size()) break;
    char line[128];
    std::snprintf(line, sizeof line, "%-8zu %-14.6e %-14.6e %-14.6e\n", t, res[t - 1], erg[t - 1],
                  static_cast<double>(t * t) * erg[t - 1] * erg[t - 1]);
    std::cout << line;
  }
  const std::size_t last = std::min(fit_last, erg.size());
  std::cout << "log-log ergodic slope over [" << fit_first << ", " << last
            << "]: " << loglog_slope(erg, fit_first, last) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect unorganized malicious attacks in rating matrices"};
  app.fallthrough();
  app.require_subcommand(1);
  Common common;
  app.add_option("--output-dir", common.output_dir, "Output directory (default $UMA_OUTPUT_DIR or .)");
  app.add_flag("-v,--verbose", common.verbosity, "Progress on standard error");

  std::uint64_t seed = 0;
  SyntheticOptions syn;
  InputOptions in;
  AttackOptions atk;
  SolverOverrides over;

  auto* simulate = app.add_subcommand("simulate", "Generate an attacked rating dataset");
  add_synthetic(simulate, syn);
  add_input(simulate, in, false);
  add_attack(simulate, atk);
  simulate->add_option("--seed", seed, "Random seed");

  auto* detect = app.add_subcommand("detect", "Decompose a rating file and label attackers");
  add_input(detect, in, true);
  add_solver(detect, over);
  double threshold = 0.0;
  detect->add_option("--threshold", threshold, "Flag users with some |Y_ij| above this (default exact nonzero)");

  auto* evaluate = app.add_subcommand("evaluate", "Score predicted labels against truth");
  std::string labels_path, truth_path, checkpoint_path;
  evaluate->add_option("--labels", labels_path, "Predicted labels CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--truth", truth_path, "Truth labels CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--checkpoint", checkpoint_path, "Checkpoint for the config and diagnostics echo")
      ->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "F1 of each detector across spam ratios");
  add_synthetic(sweep, syn);
  add_input(sweep, in, false);
  add_attack(sweep, atk);
  std::string ratios = "0.02:0.2:0.02";
  std::size_t seed_count = 5, jobs = 1, sweep_iters = 1000;
  std::vector<std::string> detectors{"uma", "rpca"};
  std::uint64_t sweep_seed = 1;
  sweep->add_option("--ratios", ratios, "first:last:step or a comma list");
  sweep->add_option("--seeds", seed_count, "Number of seeds per ratio")->check(CLI::PositiveNumber);
  sweep->add_option("--seed", sweep_seed, "First seed");
  sweep->add_option("--jobs", jobs, "Parallel sweep cells")->check(CLI::PositiveNumber);
  sweep->add_option("--detectors", detectors, "uma,rpca")->delimiter(',')->check(CLI::IsMember({"uma", "rpca"}));
  sweep->add_option("--max-iters", sweep_iters, "Iteration cap per solve")->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "Ergodic residual rate on the reference instance");
  add_input(bench, in, false);
  add_solver(bench, over);
  std::size_t fit_first = 10, fit_last = 500;
  std::uint64_t bench_seed = 1;
  bench->add_option("--seed", bench_seed, "Seed of the reference instance");
  bench->add_option("--fit-first", fit_first, "First t of the slope fit")->check(CLI::PositiveNumber);
  bench->add_option("--fit-last", fit_last, "Last t of the slope fit")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(common, syn, in, atk, seed);
    if (*detect) return cmd_detect(common, in, over, threshold);
    if (*evaluate) return cmd_evaluate(common, labels_path, truth_path, checkpoint_path);
    if (*sweep)
      return cmd_sweep(common, syn, in, atk, ratios, seed_count, sweep_seed, jobs, detectors, sweep_iters);
    if (*bench)
      return cmd_bench(common, in, over, bench_seed, over.max_iters.value_or(500), fit_first, fit_last);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const RangeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const VersionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const IntegrityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}
