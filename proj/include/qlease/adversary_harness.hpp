#ifndef QLEASE_ADVERSARY_HARNESS_HPP
#define QLEASE_ADVERSARY_HARNESS_HPP

// Pirate strategies and the finite-term / infinite-term lessor-security experiments.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "json.hpp"
#include "qlease/evasive_circuits.hpp"
#include "qlease/ssl_scheme.hpp"
#include "qlease/subspace_sim.hpp"

namespace qlease {
class Rng;
}

namespace qlease::harness {

// Register 1 is handed back to the lessor; register 2 is what the pirate keeps.
struct PirateOutput {
  quantum::BipartiteState sigma;
  ssl::ClassicalPart classical1;
  std::optional<ssl::ClassicalPart> classical2;  // nullopt: no second copy at all
};

using StrategyFn = std::function<PirateOutput(const ssl::Crs&, const ssl::LeasedState&, Rng&)>;

enum class StrategyKind {
  honest_return,
  measure_reprepare_duplicate,
  fourier_measure_duplicate,
  classical_copy_fresh_subspace,
  budget_bruteforce_mauler,
  custom,
};

std::string to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(const std::string& s);

struct PirateStrategy {
  StrategyKind kind = StrategyKind::honest_return;
  std::uint64_t budget = 0;  // guesses, for the mauler
  StrategyFn custom;         // for StrategyKind::custom
  std::string label;         // report name for custom strategies

  std::string name() const;
  PirateOutput operator()(const ssl::Crs& crs, const ssl::LeasedState& lease, Rng& rng) const;
};

PirateStrategy make_strategy(StrategyKind kind, std::uint64_t budget = 0);
PirateStrategy make_custom_strategy(std::string label, StrategyFn fn);

// ---------------------------------------------------------------- mauler

class ToyModeRequired : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct MaulerResult {
  bool success = false;
  std::uint64_t guesses = 0;
  std::optional<BitString> accepting_input;
  std::optional<ssl::SecretKey> own_key;
  std::optional<ssl::LeasedState> fabricated;
  circuits::ProgramPtr recovered_program;
};

// Spends up to `budget` digest-preimage guesses against the leased cnc handle
// (every input, in order, when budget >= 2^n); on a hit rebuilds the circuit
// and leases it under a self-generated subspace with an honestly produced proof.
MaulerResult bruteforce_mauler(const ssl::Crs& crs, const ssl::LeasedState& lease, std::uint64_t budget, Rng& rng);

// ---------------------------------------------------------------- statistics

struct RateEstimate {
  std::uint64_t count = 0;
  std::uint64_t trials = 0;
  double rate() const { return trials ? static_cast<double>(count) / static_cast<double>(trials) : 0.0; }
  double standard_error() const;
  // 95% Wilson score interval.
  std::pair<double, double> wilson() const;
  nlohmann::json to_json() const;
};

struct AgreementEstimate {
  double min_agreement;  // exact minimum over x (exhaustive) or a Wilson lower bound (sampled)
  bool exhaustive;
  std::uint64_t inputs_checked;
};

enum class AgreementMode { exhaustive, sampled };

// Pr[Run(copy, x) = C(x)]; exhaustive uses the exact acceptance probability
// for every x (n <= 8), sampled runs `trials` Runs at random x.
AgreementEstimate estimate_run_agreement(const ssl::Crs& crs, const ssl::LeasedState& copy,
                                         const circuits::Program& c, AgreementMode mode, std::uint64_t trials,
                                         Rng& rng);

// ---------------------------------------------------------------- experiments

using ProgramSampler = std::function<circuits::ProgramPtr(Rng&)>;

struct ExperimentConfig {
  field::FieldParams params{2, 6};
  oracles::OracleMode mode = oracles::OracleMode::ideal;
  std::uint64_t seed = 1;
  std::size_t n = 6;
  std::uint64_t trials = 1000;
  double beta = 0.5;
  std::string sampler_name = "point";
  unsigned threads = 0;  // 0: hardware concurrency

  nlohmann::json to_json() const;
};

// Uniform point circuits, wildcard, or affine (over Z_2) testers on n input bits.
ProgramSampler named_sampler(const std::string& name, std::size_t n);

struct ExperimentReport {
  std::string experiment;  // "finite-term" or "infinite-term"
  std::string strategy;
  nlohmann::json config;
  std::uint64_t trials = 0;
  // finite-term: Check on register 1. infinite-term: Run of copy 1 agrees with C(x).
  std::uint64_t check_pass = 0;
  // Run of copy 2 (on the conditional state) agrees with C at a sampled input.
  std::uint64_t copy2_accept = 0;
  std::uint64_t joint_success = 0;
  // Register-1 pass and exact min-over-x agreement of copy 2 >= beta.
  std::uint64_t beta_success = 0;
  double agreement_sum_given_pass = 0.0;
  // Copy-2 agreement after a rejected register-1 branch (reported separately).
  std::uint64_t rejected_branch_trials = 0;
  std::uint64_t rejected_branch_copy2_accept = 0;
  bool exhaustive = true;

  // Associative and order-independent on the counts.
  void merge(const ExperimentReport& other);
  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

ExperimentReport finite_term_experiment(const PirateStrategy& strategy, const ExperimentConfig& config,
                                        const ProgramSampler& sampler);
ExperimentReport infinite_term_experiment(const PirateStrategy& strategy, const ExperimentConfig& config,
                                          const ProgramSampler& sampler);

}  // namespace qlease::harness

#endif  // QLEASE_ADVERSARY_HARNESS_HPP
