#include "uma/attack_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "uma/error.hpp"
#include "uma/numerics.hpp"

namespace uma {

namespace {

// Independent deterministic streams derived from one user-facing seed.
enum Stream : std::uint32_t {
  kFactors = 1,
  kMask = 2,
  kNoise = 3,
  kSpikes = 4,
  kInject = 5,
  kHijack = 6,
};

std::mt19937_64 make_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t size) {
  return std::uniform_int_distribution<std::size_t>(0, size - 1)(rng);
}

// First `k` entries of a partial Fisher-Yates shuffle of `items`.
template <class T>
std::vector<T> sample_without_replacement(std::vector<T> items, std::size_t k,
                                          std::mt19937_64& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, items.size() - i);
    std::swap(items[i], items[j]);
  }
  items.resize(k);
  return items;
}

double grid_round(double v, double bound) { return std::clamp(std::round(v), -bound, bound); }

struct ItemStats {
  std::vector<std::size_t> count;
  std::vector<double> mean;
  std::vector<double> stddev;
  double global_mean = 0.0;
  double global_std = 0.0;
};

// Statistics over the observed cells of normal users only.
ItemStats item_stats(const AttackedDataset& d) {
  const std::size_t n = d.ratings.cols();
  ItemStats s;
  s.count.assign(n, 0);
  s.mean.assign(n, 0.0);
  s.stddev.assign(n, 0.0);
  std::vector<double> sum(n, 0.0), sumsq(n, 0.0);
  double gsum = 0.0, gsumsq = 0.0;
  std::size_t gcount = 0;
  for (std::size_t i = 0; i < d.ratings.rows(); ++i) {
    if (d.truth_labels[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!d.mask.contains(i, j)) continue;
      const double v = d.ratings(i, j);
      ++s.count[j];
      sum[j] += v;
      sumsq[j] += v * v;
      gsum += v;
      gsumsq += v * v;
      ++gcount;
    }
  }
  if (gcount > 0) {
    s.global_mean = gsum / static_cast<double>(gcount);
    s.global_std = std::sqrt(std::max(0.0, gsumsq / static_cast<double>(gcount) -
                                               s.global_mean * s.global_mean));
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (s.count[j] == 0) continue;
    const double c = static_cast<double>(s.count[j]);
    s.mean[j] = sum[j] / c;
    s.stddev[j] = s.count[j] > 1 ? std::sqrt(std::max(0.0, sumsq[j] / c - s.mean[j] * s.mean[j]))
                                 : s.global_std;
  }
  return s;
}

std::vector<std::size_t> popular_items(const ItemStats& stats, double fraction) {
  const std::size_t n = stats.count.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return stats.count[a] > stats.count[b]; });
  const auto size = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  order.resize(std::min(size, n));
  return order;
}

std::vector<std::size_t> deviating_counts(const AttackedDataset& d, double epsilon) {
  std::vector<std::size_t> counts(d.ratings.cols(), 0);
  for (std::size_t i = 0; i < d.ratings.rows(); ++i)
    for (std::size_t j = 0; j < d.ratings.cols(); ++j)
      if (d.mask.contains(i, j) && std::abs(d.ratings(i, j) - d.reference(i, j)) >= epsilon)
        ++counts[j];
  return counts;
}

std::size_t normal_user_count(const AttackedDataset& d) {
  return static_cast<std::size_t>(std::count(d.truth_labels.begin(), d.truth_labels.end(), 0));
}

}  // namespace

GeneratedTruth generate_ground_truth(const GroundTruthParams& p) {
  if (p.m < 1 || p.n < 1) throw ParameterError("generate_ground_truth: m and n must be >= 1");
  if (p.rank < 1 || p.rank > std::min(p.m, p.n))
    throw ParameterError("generate_ground_truth: rank must lie in [1, min(m, n)]");
  if (!(p.bound > 0.0)) throw ParameterError("generate_ground_truth: bound must be > 0");
  if (!(p.sigma >= 0.0)) throw ParameterError("generate_ground_truth: sigma must be >= 0");
  if (!(p.density > 0.0 && p.density <= 1.0))
    throw ParameterError("generate_ground_truth: density must lie in (0, 1]");

  auto rng = make_rng(p.seed, kFactors);
  // var(sum_k g h) = r s^4 = (bound/2)^2
  const double s = std::sqrt(p.bound / 2.0) / std::pow(static_cast<double>(p.rank), 0.25);
  std::normal_distribution<double> gauss(0.0, s);
  DenseMatrix g(p.m, p.rank), h(p.rank, p.n);
  for (double& v : g.values()) v = gauss(rng);
  for (double& v : h.values()) v = gauss(rng);
  DenseMatrix x0 = matmul(g, h);
  const double peak = inf_norm(x0);
  if (peak > p.bound) {
    if (p.policy == BoundPolicy::Rescale) x0 *= p.bound / peak;
    for (double& v : x0.values()) v = std::clamp(v, -p.bound, p.bound);
  }

  auto mask_rng = make_rng(p.seed, kMask);
  std::vector<std::uint8_t> bitmap(p.m * p.n, 1);
  if (p.density < 1.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto& b : bitmap) b = unit(mask_rng) < p.density ? 1 : 0;
    if (std::find(bitmap.begin(), bitmap.end(), 1) == bitmap.end())
      bitmap[uniform_index(mask_rng, bitmap.size())] = 1;
  }
  return {GroundTruth{std::move(x0), p.rank, p.sigma, p.bound, p.seed},
          ObservationMask::from_bitmap(p.m, p.n, std::move(bitmap))};
}

DenseMatrix observe(const GroundTruth& ground, const ObservationMask& mask, bool round_to_grid) {
  if (!mask.matches(ground.x0)) throw DimensionError("observe: mask does not match ground truth");
  auto rng = make_rng(ground.seed, kNoise);
  std::normal_distribution<double> noise(0.0, ground.sigma > 0.0 ? ground.sigma : 1.0);
  DenseMatrix out(ground.x0.rows(), ground.x0.cols());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) {
      if (!mask.contains(i, j)) continue;
      double v = ground.x0(i, j);
      if (ground.sigma > 0.0) v += noise(rng);
      out(i, j) = round_to_grid ? grid_round(v, ground.bound) : v;
    }
  return out;
}

IncoherenceStats incoherence_stats(const DenseMatrix& x0) {
  const SvdFactors f = svd(x0);
  if (f.singular_values.empty() || f.singular_values.front() == 0.0)
    throw DomainError("incoherence_stats: zero matrix has no singular subspace");
  const double cutoff = 1e-8 * f.singular_values.front();
  std::size_t r = 0;
  while (r < f.singular_values.size() && f.singular_values[r] > cutoff) ++r;

  const std::size_t m = x0.rows();
  const std::size_t n = x0.cols();
  auto max_row_energy = [r](const DenseMatrix& basis) {
    double best = 0.0;
    for (std::size_t i = 0; i < basis.rows(); ++i) {
      double e = 0.0;
      for (std::size_t k = 0; k < r; ++k) e += basis(i, k) * basis(i, k);
      best = std::max(best, e);
    }
    return best;
  };
  double cross = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < r; ++k) v += f.left(i, k) * f.right(j, k);
      cross = std::max(cross, std::abs(v));
    }
  const double rd = static_cast<double>(r);
  IncoherenceStats s;
  s.rank = r;
  s.mu_row = static_cast<double>(m) * max_row_energy(f.left) / rd;
  s.mu_col = static_cast<double>(n) * max_row_energy(f.right) / rd;
  s.mu_cross = static_cast<double>(m) * static_cast<double>(n) * cross * cross / rd;
  return s;
}

SpikedInstance generate_spiked_instance(const GroundTruthParams& params, double spike_fraction,
                                        double spike_magnitude) {
  if (!(spike_fraction >= 0.0 && spike_fraction <= 1.0))
    throw ParameterError("generate_spiked_instance: spike_fraction must lie in [0, 1]");
  if (!(spike_magnitude > 0.0))
    throw ParameterError("generate_spiked_instance: spike_magnitude must be > 0");
  GeneratedTruth truth = generate_ground_truth(params);
  const auto cells = truth.mask.cells();
  const auto k = static_cast<std::size_t>(
      std::llround(spike_fraction * static_cast<double>(cells.size())));
  auto rng = make_rng(params.seed, kSpikes);
  std::vector<Cell> spike_cells = sample_without_replacement(cells, k, rng);
  std::sort(spike_cells.begin(), spike_cells.end());

  DenseMatrix spikes(params.m, params.n);
  std::bernoulli_distribution coin(0.5);
  for (const Cell& c : spike_cells) spikes(c.row, c.col) = coin(rng) ? spike_magnitude : -spike_magnitude;
  DenseMatrix observed = observe(truth.ground, truth.mask, false) + spikes;
  return {std::move(truth.ground), std::move(truth.mask), std::move(observed), std::move(spikes),
          std::move(spike_cells)};
}

SpikedInstance reference_instance(std::uint64_t seed) {
  GroundTruthParams p;
  p.m = 50;
  p.n = 50;
  p.rank = 2;
  p.bound = 2.0;
  p.sigma = 0.01;
  p.density = 1.0;
  p.seed = seed;
  return generate_spiked_instance(p, 0.02, 3.0);
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Random: return "random";
    case Strategy::Average: return "average";
    case Strategy::Bandwagon: return "bandwagon";
    case Strategy::Hijack: return "hijack";
  }
  return "unknown";
}

std::string to_string(Direction d) { return d == Direction::Push ? "push" : "nuke"; }

void AttackSpec::validate() const {
  const double w[] = {mix.random, mix.average, mix.bandwagon, mix.hijack};
  double total = 0.0;
  for (double v : w) {
    if (!(std::isfinite(v) && v >= 0.0)) throw ParameterError("attack spec: negative strategy weight");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ParameterError("attack spec: strategy weights must sum to 1");
  if (!(spam_ratio > 0.0 && spam_ratio < 1.0))
    throw ParameterError("attack spec: spam_ratio must lie in (0, 1)");
  if (!(filler_ratio > 0.0 && filler_ratio < 1.0))
    throw ParameterError("attack spec: filler_ratio must lie in (0, 1)");
  if (!(popular_fraction > 0.0 && popular_fraction <= 1.0))
    throw ParameterError("attack spec: popular_fraction must lie in (0, 1]");
  if (profiles_per_attacker < 1) throw ParameterError("attack spec: profiles_per_attacker must be >= 1");
  if (gamma && *gamma < 1) throw ParameterError("attack spec: gamma must be >= 1");
  if (!(epsilon > 0.0)) throw ParameterError("attack spec: epsilon must be > 0");
}

std::size_t default_gamma(std::size_t total_users) {
  return std::max<std::size_t>(2, static_cast<std::size_t>(
                                      std::llround(0.01 * static_cast<double>(total_users))));
}

AttackedDataset make_clean_dataset(const GroundTruth& ground, const ObservationMask& mask,
                                   const DenseMatrix& observed) {
  if (!mask.matches(observed) || !ground.x0.same_shape(observed))
    throw DimensionError("make_clean_dataset: shape mismatch");
  AttackedDataset d;
  d.ratings = project_omega(observed, mask);
  d.mask = mask;
  d.bound = ground.bound;
  d.truth_labels.assign(observed.rows(), 0);
  d.reference = ground.x0;
  d.ground = ground;
  d.original_users = observed.rows();
  return d;
}

AttackedDataset make_clean_dataset(const DenseMatrix& observed, const ObservationMask& mask,
                                   double bound) {
  GroundTruth ground{project_omega(observed, mask), 0, 0.0, bound, 0};
  return make_clean_dataset(ground, mask, observed);
}

std::size_t injected_profile_count(std::size_t normal_users, double spam_ratio) {
  if (!(spam_ratio >= 0.0 && spam_ratio < 1.0))
    throw ParameterError("injected_profile_count: spam_ratio must lie in [0, 1)");
  return static_cast<std::size_t>(
      std::llround(spam_ratio / (1.0 - spam_ratio) * static_cast<double>(normal_users)));
}

AttackedDataset inject_profile_attacks(const AttackedDataset& dataset, const AttackSpec& spec) {
  spec.validate();
  return inject_profiles(dataset, spec,
                         injected_profile_count(normal_user_count(dataset), spec.spam_ratio));
}

AttackedDataset inject_profiles(const AttackedDataset& dataset, const AttackSpec& spec,
                                std::size_t count) {
  spec.validate();
  if (count == 0) return dataset;
  const std::size_t m = dataset.ratings.rows();
  const std::size_t n = dataset.ratings.cols();
  const double bound = dataset.bound;

  const double w_total = spec.mix.random + spec.mix.average + spec.mix.bandwagon;
  if (!(w_total > 0.0))
    throw ParameterError("inject_profiles: mix has no weight on injectable strategies");
  std::discrete_distribution<int> pick_strategy({spec.mix.random, spec.mix.average,
                                                 spec.mix.bandwagon});
  constexpr Strategy kStrategies[] = {Strategy::Random, Strategy::Average, Strategy::Bandwagon};

  const ItemStats stats = item_stats(dataset);
  const std::vector<std::size_t> pool = popular_items(stats, spec.popular_fraction);
  const auto filler_count =
      static_cast<std::size_t>(std::llround(spec.filler_ratio * static_cast<double>(n)));
  const bool push = spec.direction == Direction::Push;
  const double target_rating = push ? bound : -bound;

  std::vector<std::size_t> eligible;
  for (std::size_t j = 0; j < n; ++j)
    if (stats.count[j] > 0 && (push ? stats.mean[j] < 0.0 : stats.mean[j] > 0.0)) eligible.push_back(j);
  if (eligible.empty())
    throw GenerationError(std::string("inject_profiles: no item with average rating ") +
                          (push ? "below" : "above") + " 0 to target");

  const std::size_t gamma = spec.gamma.value_or(default_gamma(m + count));
  std::vector<std::size_t> deviating = deviating_counts(dataset, spec.epsilon);
  std::vector<std::size_t> attacked_on(n, 0);
  for (const Cell& c : dataset.attack_cells) ++attacked_on[c.col];

  auto rng = make_rng(spec.seed, kInject);
  std::normal_distribution<double> unit_normal(0.0, 1.0);

  AttackedDataset out = dataset;
  DenseMatrix rows(count, n);
  std::vector<Cell> new_cells;
  std::vector<double> reference_row(n);
  for (std::size_t j = 0; j < n; ++j) reference_row[j] = stats.mean[j];

  std::size_t produced = 0;
  while (produced < count) {
    const Strategy strategy = kStrategies[pick_strategy(rng)];
    const std::size_t profiles = std::min(spec.profiles_per_attacker, count - produced);

    std::size_t target = 0;
    double deviation = 0.0;
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
      target = eligible[uniform_index(rng, eligible.size())];
      deviation = std::abs(target_rating - reference_row[target]);
      const bool counts_toward_u = deviation >= spec.epsilon;
      placed = attacked_on[target] + profiles < gamma &&
               (!counts_toward_u || deviating[target] + profiles < gamma);
    }
    if (!placed)
      throw GenerationError("inject_profiles: could not place a target without reaching gamma = " +
                            std::to_string(gamma) + " attackers on one item");

    std::vector<std::size_t> candidates;
    for (std::size_t j : pool)
      if (j != target) candidates.push_back(j);
    const std::size_t selected_count = strategy == Strategy::Bandwagon ? spec.selected_count : 0;
    if (candidates.size() < selected_count + filler_count)
      throw GenerationError("inject_profiles: popular pool of " + std::to_string(candidates.size()) +
                            " items cannot hold " + std::to_string(selected_count + filler_count) +
                            " selected and filler items");

    for (std::size_t p = 0; p < profiles; ++p) {
      const std::size_t local = produced + p;
      const std::size_t user = m + local;
      std::vector<std::size_t> picked =
          sample_without_replacement(candidates, selected_count + filler_count, rng);
      AttackerRecord rec;
      rec.user = user;
      rec.strategy = strategy;
      rec.target = target;
      rec.target_rating = target_rating;
      rec.deviation = deviation;
      rec.selected.assign(picked.begin(), picked.begin() + static_cast<std::ptrdiff_t>(selected_count));
      rec.fillers.assign(picked.begin() + static_cast<std::ptrdiff_t>(selected_count), picked.end());
      std::sort(rec.selected.begin(), rec.selected.end());
      std::sort(rec.fillers.begin(), rec.fillers.end());

      for (std::size_t j : rec.selected) {
        rows(local, j) = bound;
        new_cells.push_back({user, j});
        if (std::abs(bound - reference_row[j]) >= spec.epsilon) ++deviating[j];
      }
      for (std::size_t j : rec.fillers) {
        const bool per_item = strategy == Strategy::Average;
        const double center = per_item ? stats.mean[j] : stats.global_mean;
        const double spread = per_item ? stats.stddev[j] : stats.global_std;
        const double v = grid_round(center + spread * unit_normal(rng), bound);
        rows(local, j) = v;
        new_cells.push_back({user, j});
        if (std::abs(v - reference_row[j]) >= spec.epsilon) ++deviating[j];
      }
      rows(local, target) = target_rating;
      new_cells.push_back({user, target});

      out.attack_cells.push_back({user, target});
      if (deviation < spec.epsilon) out.weak_cells.push_back({user, target});
      out.target_items.push_back(target);
      out.attackers.push_back(std::move(rec));
    }
    attacked_on[target] += profiles;
    if (deviation >= spec.epsilon) deviating[target] += profiles;
    produced += profiles;
  }

  std::vector<double> ratings(out.ratings.values().begin(), out.ratings.values().end());
  ratings.insert(ratings.end(), rows.values().begin(), rows.values().end());
  out.ratings = DenseMatrix(m + count, n, std::move(ratings));
  std::vector<double> reference(out.reference.values().begin(), out.reference.values().end());
  for (std::size_t i = 0; i < count; ++i) reference.insert(reference.end(), reference_row.begin(), reference_row.end());
  out.reference = DenseMatrix(m + count, n, std::move(reference));
  out.mask = dataset.mask.with_rows_appended(count, new_cells);
  out.truth_labels.resize(m + count, 1);

  AttackSpec check = spec;
  check.gamma = gamma;
  const UnorganizedCheck verdict = verify_unorganized(out, check);
  if (!verdict.ok)
    throw GenerationError("inject_profiles: item " + std::to_string(verdict.violations.front().item) +
                          " reached gamma = " + std::to_string(gamma) + " deviating ratings");
  return out;
}

AttackedDataset hijack_existing_users(const AttackedDataset& dataset, std::size_t count,
                                      std::uint64_t seed, double epsilon) {
  if (!(epsilon > 0.0)) throw ParameterError("hijack_existing_users: epsilon must be > 0");
  if (count == 0) return dataset;
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < dataset.original_users; ++i) {
    if (dataset.truth_labels[i]) continue;
    for (std::size_t j = 0; j < dataset.ratings.cols(); ++j)
      if (dataset.mask.contains(i, j) && dataset.ratings(i, j) < 0.0) {
        eligible.push_back(i);
        break;
      }
  }
  if (eligible.size() < count)
    throw GenerationError("hijack_existing_users: " + std::to_string(count) +
                          " users requested, only " + std::to_string(eligible.size()) +
                          " have a negative rating");

  auto rng = make_rng(seed, kHijack);
  const std::vector<std::size_t> chosen = sample_without_replacement(eligible, count, rng);
  AttackedDataset out = dataset;
  for (std::size_t user : chosen) {
    std::vector<std::size_t> negative;
    for (std::size_t j = 0; j < out.ratings.cols(); ++j)
      if (out.mask.contains(user, j) && out.ratings(user, j) < 0.0) negative.push_back(j);
    const std::size_t item = negative[uniform_index(rng, negative.size())];
    out.ratings(user, item) = out.bound;
    out.truth_labels[user] = 1;

    AttackerRecord rec;
    rec.user = user;
    rec.strategy = Strategy::Hijack;
    rec.target = item;
    rec.target_rating = out.bound;
    rec.deviation = std::abs(out.bound - out.reference(user, item));
    out.attack_cells.push_back({user, item});
    if (rec.deviation < epsilon) out.weak_cells.push_back({user, item});
    out.target_items.push_back(item);
    out.attackers.push_back(std::move(rec));
  }
  return out;
}

MixtureCounts mixture_counts(std::size_t normal_users, double spam_ratio, double injected_share) {
  if (!(spam_ratio > 0.0 && spam_ratio < 1.0))
    throw ParameterError("mixture_counts: spam_ratio must lie in (0, 1)");
  if (!(injected_share >= 0.0 && injected_share <= 1.0))
    throw ParameterError("mixture_counts: injected_share must lie in [0, 1]");
  // A = rho (m + s A)
  const double total = spam_ratio * static_cast<double>(normal_users) / (1.0 - spam_ratio * injected_share);
  const auto all = static_cast<std::size_t>(std::llround(total));
  MixtureCounts c;
  c.injected = static_cast<std::size_t>(std::llround(injected_share * total));
  c.hijacked = all - std::min(all, c.injected);
  return c;
}

StrategyMix hijack_heavy_mix() {
  StrategyMix mix;
  mix.random = mix.average = mix.bandwagon = 0.25 / 3.0;
  mix.hijack = 0.75;
  return mix;
}

AttackedDataset apply_attacks(const AttackedDataset& clean, const AttackSpec& spec) {
  spec.validate();
  const double total = spec.mix.random + spec.mix.average + spec.mix.bandwagon + spec.mix.hijack;
  const double hijack_share = spec.mix.hijack / total;
  if (hijack_share == 0.0) return inject_profile_attacks(clean, spec);
  const MixtureCounts counts = mixture_counts(normal_user_count(clean), spec.spam_ratio, 1.0 - hijack_share);
  AttackedDataset out = counts.injected > 0 ? inject_profiles(clean, spec, counts.injected) : clean;
  return hijack_existing_users(out, counts.hijacked, spec.seed, spec.epsilon);
}

UnorganizedCheck verify_unorganized(const AttackedDataset& attacked, const AttackSpec& spec) {
  UnorganizedCheck check;
  check.gamma = spec.gamma.value_or(default_gamma(attacked.ratings.rows()));
  const std::vector<std::size_t> counts = deviating_counts(attacked, spec.epsilon);
  for (std::size_t j = 0; j < counts.size(); ++j)
    if (counts[j] >= check.gamma) check.violations.push_back({j, counts[j]});
  check.ok = check.violations.empty();
  return check;
}

nlohmann::json attack_manifest(const AttackedDataset& attacked, const AttackSpec& spec) {
  using nlohmann::json;
  auto cells = [](const std::vector<Cell>& v) {
    json a = json::array();
    for (const Cell& c : v) a.push_back({c.row, c.col});
    return a;
  };
  json attackers = json::array();
  for (const AttackerRecord& r : attacked.attackers)
    attackers.push_back({{"user", r.user},
                         {"strategy", to_string(r.strategy)},
                         {"target", r.target},
                         {"target_rating", r.target_rating},
                         {"deviation", r.deviation},
                         {"selected", r.selected},
                         {"fillers", r.fillers}});
  return {
      {"format", "uma-attack-manifest"},
      {"version", 1},
      {"spec",
       {{"mix",
         {{"random", spec.mix.random},
          {"average", spec.mix.average},
          {"bandwagon", spec.mix.bandwagon},
          {"hijack", spec.mix.hijack}}},
        {"spam_ratio", spec.spam_ratio},
        {"filler_ratio", spec.filler_ratio},
        {"direction", to_string(spec.direction)},
        {"profiles_per_attacker", spec.profiles_per_attacker},
        {"gamma", spec.gamma.value_or(default_gamma(attacked.ratings.rows()))},
        {"epsilon", spec.epsilon},
        {"popular_fraction", spec.popular_fraction},
        {"selected_count", spec.selected_count},
        {"seed", spec.seed}}},
      {"users", attacked.ratings.rows()},
      {"items", attacked.ratings.cols()},
      {"original_users", attacked.original_users},
      {"attackers", std::move(attackers)},
      {"attack_cells", cells(attacked.attack_cells)},
      {"weak_cells", cells(attacked.weak_cells)},
      {"target_items", attacked.target_items},
  };
}

}  // namespace uma
