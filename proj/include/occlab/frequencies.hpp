#pragma once
// Frequency models: decreasing probability sequences (p_j, j >= 1) with lazy
// per-index access, solved normalization constants, and certified upper
// bounds on the power tails sum_{i > k} p_i^r that drive every downstream
// series truncation.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace occlab {

// p_j = (1 - q) q^{j-1}
struct Geometric {
  double ratio = 0.5;
};

// p_j = c j^{-exponent}; auto-normalized (c = 1/zeta(exponent)) unless a
// prefactor is supplied.
struct PowerLaw {
  double exponent = 2.0;
  std::optional<double> prefactor;
};

// p_j = c e^{-j^beta}, 0 < beta < 1
struct StretchedExp {
  double beta = 0.5;
};

// p_j = c lambda^j / j!, auto-normalized; lambda <= 2 keeps the sequence
// nonincreasing from j = 1.
struct PoissonWeights {
  double lambda = 1.0;
};

enum class BlockRule { karlin_ex1, bgy_ex2, gen_ex, factorial, explicit_blocks };

// Frequencies constant within consecutive blocks: m_i boxes at level q_i.
//   karlin_ex1:      m_i = i,                       q_i = c 2^{-2^i}
//   bgy_ex2:         m_i = 2^{2^i},                 q_i = c 2^{-2^{i+1}}
//   gen_ex:          m_i = floor(2^{(1-beta)^{-i}}) q_i = c m_i^{-(1+alpha)}
//   factorial:       m_i = (i-2)!, q_i = 1/i!, i >= 2 (normalization is 1)
//   explicit_blocks: user-supplied (m_i, q_i), q normalized
struct Blocks {
  BlockRule rule = BlockRule::gen_ex;
  double beta = 0.5;   // gen_ex
  double alpha = 1.0;  // gen_ex
  std::vector<std::pair<double, double>> blocks;  // explicit_blocks: (m_i, q_i)
};

// Finite decreasing positive list, taken verbatim.
struct ExplicitList {
  std::vector<double> probs;
};

struct FrequencySpec {
  std::variant<Geometric, PowerLaw, StretchedExp, PoissonWeights, Blocks, ExplicitList> model;
  // Relaxes the sum-to-one requirement (Poissonized sampling only).
  bool subprobability = false;

  static FrequencySpec geometric(double q) { return {Geometric{q}, false}; }
  static FrequencySpec power_law(double exponent) { return {PowerLaw{exponent, std::nullopt}, false}; }
  static FrequencySpec stretched_exp(double beta) { return {StretchedExp{beta}, false}; }
  static FrequencySpec poisson_weights(double lambda) { return {PoissonWeights{lambda}, false}; }
  static FrequencySpec blocks(BlockRule rule, double beta = 0.5, double alpha = 1.0) {
    Blocks b;
    b.rule = rule;
    b.beta = beta;
    b.alpha = alpha;
    return {b, false};
  }
  static FrequencySpec explicit_list(std::vector<double> probs, bool subprob = false) {
    return {ExplicitList{std::move(probs)}, subprob};
  }
};

// One resolved block. Levels and sizes are carried in log2 space since the
// constructions overflow doubles within a handful of blocks; exact integer
// mirrors are kept while they remain representable.
struct BlockInfo {
  double log2_m = 0;     // log2 of the block size
  double log2_q = 0;     // log2 of the level
  double log2_mass = 0;  // log2(m_i q_i)
  double q = 0;          // level as a double, 0 when below the double range
  std::uint64_t m = 0;   // exact size, 0 when > 2^62
  std::uint64_t cum_boxes = 0;  // M_i = sum_{l<=i} m_l, valid while cum_exact
  bool cum_exact = false;
};

struct TailBound {
  double value = 0;
  bool exact = false;
};

enum class FamilyTag { geometric, power_law, stretched_exp, poisson_weights, blocks, explicit_list };

class FrequencyView {
 public:
  explicit FrequencyView(FrequencySpec spec);

  const FrequencySpec& spec() const { return spec_; }
  FamilyTag family() const;
  double normalization() const { return norm_c_; }
  double log_normalization() const { return log_norm_c_; }
  // sum_j p_j (exactly 1 unless the spec is a subprobability)
  double total_mass() const { return total_mass_; }
  bool subprobability() const { return spec_.subprobability; }

  bool finite_support() const { return finite_support_; }
  std::uint64_t support_size() const { return support_size_; }  // finite views only

  /// Largest box index reachable through prob()/log_prob(). Unbounded
  /// families report UINT64_MAX; block constructions are capped where the
  /// cumulative box count leaves the exact integer range.
  std::uint64_t addressable_boxes() const;

  bool is_blocks() const;
  const std::vector<BlockInfo>& blocks() const { return blocks_; }
  // Cheap upper bound on sum_{l > i} m_l q_l^r over blocks beyond position i
  // (0-based into blocks()); exact for the factorial rule at r = 1 and for
  // explicit block lists.
  TailBound block_tail_bound(std::size_t i, int r) const;
  // Accurate variant: explicit partial sums over the generated blocks plus a
  // domination term past the generation cap.
  double block_tail_sum(std::size_t i, int r) const;
  // log2 of the same quantity; stays finite far past the double range.
  double block_tail_sum_log2(std::size_t i, int r) const;

  double prob(std::uint64_t j) const;      // p_j, j >= 1
  double log_prob(std::uint64_t j) const;  // ln p_j (finite even when p_j underflows)

  /// Certified upper bound on sum_{i > k} p_i^r, with an exactness flag
  /// (closed form for geometric and explicit views).
  TailBound tail_bound(std::uint64_t k, int r) const;

  /// Exact partial sum sum_{i = k+1}^{k+terms} p_i^r; pairs with tail_bound
  /// for two-sided refinement.
  double tail_partial(std::uint64_t k, int r, std::uint64_t terms) const;

  /// rho_{j,r} = p_j^{-r} sum_{i>j} p_i^r to ~1e-9 relative accuracy;
  /// +inf when it overflows, 0 beyond a finite support.
  double rho(std::uint64_t j, int r) const;

  /// Smallest j with p_j < x (support_size + 1 when no such index exists in
  /// a finite view; 1 when even p_1 < x).
  std::uint64_t first_index_below(double x) const;

  const std::vector<double>& explicit_probs() const { return explicit_probs_; }

  /// p_j^r without intermediate underflow.
  double prob_pow_r(std::uint64_t j, int r) const;

  // family parameters, exposed for the summation kernels
  double geo_log_ratio() const { return geo_log_ratio_; }
  double powerlaw_exponent() const { return pl_exponent_; }
  double stretched_beta() const { return se_beta_; }
  double poisson_log_lambda() const { return pw_log_lambda_; }

 private:
  void build_geometric(const Geometric& g);
  void build_power_law(const PowerLaw& p);
  void build_stretched(const StretchedExp& s);
  void build_poisson(const PoissonWeights& p);
  void build_blocks(const Blocks& b);
  void build_explicit(const ExplicitList& e);
  std::size_t block_at(std::uint64_t j) const;
  double block_domination_log2(std::size_t pos, int r) const;

  FrequencySpec spec_;
  double norm_c_ = 1;
  double log_norm_c_ = 0;
  double total_mass_ = 1;
  bool finite_support_ = false;
  std::uint64_t support_size_ = 0;

  // family caches
  double geo_log_ratio_ = 0;
  double pl_exponent_ = 0;
  double se_beta_ = 0;
  double pw_log_lambda_ = 0;
  std::vector<BlockInfo> blocks_;
  std::optional<BlockInfo> block_preview_;  // one block past the cap, for bounds
  std::size_t last_exact_block_ = 0;
  std::vector<double> explicit_probs_;
};

FrequencyView build_frequencies(const FrequencySpec& spec);

}  // namespace occlab
