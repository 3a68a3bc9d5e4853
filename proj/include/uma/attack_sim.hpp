#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "uma/dense_matrix.hpp"

namespace uma {

// How entries of G H^T beyond the rating bound are handled.
enum class BoundPolicy {
  Rescale,  // shrink the whole product until it fits; rank stays exact
  Clamp,    // clamp entrywise; keeps the entry spread, may perturb rank
};

struct GroundTruthParams {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t rank = 1;
  double bound = 2.0;    // ratings live in [-bound, bound]
  double sigma = 0.0;    // std of the additive Gaussian noise
  double density = 1.0; // probability that a cell is observed
  BoundPolicy policy = BoundPolicy::Rescale;
  std::uint64_t seed = 0;
};

struct GroundTruth {
  DenseMatrix x0;
  std::size_t rank = 0;
  double sigma = 0.0;
  double bound = 2.0;
  std::uint64_t seed = 0;
};

struct GeneratedTruth {
  GroundTruth ground;
  ObservationMask mask;
};

// X0 from G H^T with Gaussian factors sized so the product has std bound/2,
// brought into [-bound, bound] per `policy`. The mask is Bernoulli(density);
// at least one cell is always observed.
GeneratedTruth generate_ground_truth(const GroundTruthParams& params);

// X0 + N(0, sigma^2) on the mask, zero elsewhere. With `round_to_grid` the
// values are rounded to integers and clamped to [-bound, bound].
DenseMatrix observe(const GroundTruth& ground, const ObservationMask& mask, bool round_to_grid);

struct IncoherenceStats {
  double mu_row = 0.0;
  double mu_col = 0.0;
  double mu_cross = 0.0;
  std::size_t rank = 0;
};
// Throws DomainError for the zero matrix.
IncoherenceStats incoherence_stats(const DenseMatrix& x0);

// Low-rank ground truth plus sparse spikes on observed cells.
struct SpikedInstance {
  GroundTruth ground;
  ObservationMask mask;
  DenseMatrix observed;
  DenseMatrix spikes;
  std::vector<Cell> spike_cells;
};
// round(spike_fraction * |mask|) observed cells get +/- spike_magnitude.
SpikedInstance generate_spiked_instance(const GroundTruthParams& params, double spike_fraction,
                                        double spike_magnitude);
// 50 x 50, rank 2, 2% spikes of magnitude 3, sigma 0.01, fully observed.
SpikedInstance reference_instance(std::uint64_t seed = 1);

enum class Strategy { Random, Average, Bandwagon, Hijack };
enum class Direction { Push, Nuke };

std::string to_string(Strategy s);
std::string to_string(Direction d);

struct StrategyMix {
  double random = 1.0 / 3.0;
  double average = 1.0 / 3.0;
  double bandwagon = 1.0 / 3.0;
  double hijack = 0.0;
};

struct AttackSpec {
  StrategyMix mix;
  double spam_ratio = 0.2;
  double filler_ratio = 0.01;
  Direction direction = Direction::Push;
  std::size_t profiles_per_attacker = 1;
  std::optional<std::size_t> gamma;  // default_gamma(total users) when unset
  double epsilon = 3.0;
  double popular_fraction = 0.10;
  std::size_t selected_count = 5;    // |I_S| for bandwagon profiles
  std::uint64_t seed = 0;

  void validate() const;
};

// max(2, round(0.01 * total_users))
std::size_t default_gamma(std::size_t total_users);

struct AttackerRecord {
  std::size_t user = 0;
  Strategy strategy = Strategy::Random;
  std::size_t target = 0;
  std::vector<std::size_t> selected;
  std::vector<std::size_t> fillers;
  double target_rating = 0.0;
  double deviation = 0.0;  // |target rating - reference| at the target cell
};

struct AttackedDataset {
  DenseMatrix ratings;  // observed, zero off the mask
  ObservationMask mask;
  double bound = 2.0;
  std::vector<std::uint8_t> truth_labels;
  // Per-cell baseline for deviation tests: ground truth for original users,
  // item means of the clean data for injected profiles.
  DenseMatrix reference;
  GroundTruth ground;
  std::size_t original_users = 0;
  std::vector<std::size_t> target_items;
  std::vector<Cell> attack_cells;
  // Attack cells whose deviation from `reference` is below epsilon.
  std::vector<Cell> weak_cells;
  std::vector<AttackerRecord> attackers;
};

// Clean dataset (no attackers) from synthetic ground truth.
AttackedDataset make_clean_dataset(const GroundTruth& ground, const ObservationMask& mask,
                                   const DenseMatrix& observed);
// Clean dataset from real ratings; the observed ratings act as reference.
AttackedDataset make_clean_dataset(const DenseMatrix& observed, const ObservationMask& mask,
                                   double bound);

// Number of injected rows that makes them a fraction `spam_ratio` of all rows.
std::size_t injected_profile_count(std::size_t normal_users, double spam_ratio);

// Appends round(spam_ratio/(1-spam_ratio) * normal users) attack profiles.
AttackedDataset inject_profile_attacks(const AttackedDataset& dataset, const AttackSpec& spec);
// Appends exactly `count` attack profiles.
AttackedDataset inject_profiles(const AttackedDataset& dataset, const AttackSpec& spec,
                                std::size_t count);

// Turns `count` existing normal users into attackers by raising one of their
// negative ratings to +bound.
AttackedDataset hijack_existing_users(const AttackedDataset& dataset, std::size_t count,
                                      std::uint64_t seed, double epsilon = 3.0);

struct MixtureCounts {
  std::size_t injected = 0;
  std::size_t hijacked = 0;
};
// Splits the attack profiles so that (injected + hijacked) / (normal + injected)
// equals spam_ratio and injected is `injected_share` of the attack profiles.
MixtureCounts mixture_counts(std::size_t normal_users, double spam_ratio,
                             double injected_share = 0.25);

// A quarter of the attack profiles injected
// with the three classic strategies, three quarters hijacked existing users.
StrategyMix hijack_heavy_mix();

// Applies `spec` to a clean dataset. With zero hijack weight every attack
// profile is injected; otherwise the hijack share of the normalized mix sets
// the split computed by mixture_counts.
AttackedDataset apply_attacks(const AttackedDataset& clean, const AttackSpec& spec);

struct ItemViolation {
  std::size_t item = 0;
  std::size_t count = 0;
};
struct UnorganizedCheck {
  bool ok = true;
  std::vector<ItemViolation> violations;
  std::size_t gamma = 0;
};
// Counts, per item, the observed cells deviating from the reference by at
// least epsilon; ok iff every count is below gamma.
UnorganizedCheck verify_unorganized(const AttackedDataset& attacked, const AttackSpec& spec);

nlohmann::json attack_manifest(const AttackedDataset& attacked, const AttackSpec& spec);

}  // namespace uma
