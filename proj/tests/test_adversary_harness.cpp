#include <cmath>

#include "doctest.h"
#include "qlease/adversary_harness.hpp"
#include "qlease/rng.hpp"

using namespace qlease;
using namespace qlease::harness;
using field::FieldParams;
using oracles::OracleMode;
using quantum::BipartiteState;
using quantum::PureState;

namespace {

ExperimentConfig config(std::uint64_t trials, std::uint64_t seed = 5, OracleMode mode = OracleMode::ideal) {
  ExperimentConfig c;
  c.params = FieldParams(2, 6);
  c.mode = mode;
  c.seed = seed;
  c.n = 6;
  c.trials = trials;
  return c;
}

bool within(const RateEstimate& r, double p, double k = 3.0) {
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(r.trials));
  return std::abs(r.rate() - p) <= k * sigma;
}

RateEstimate rate(std::uint64_t count, std::uint64_t trials) { return {count, trials}; }

void check_accounting(const ExperimentReport& r) {
  CHECK(r.joint_success <= r.check_pass);
  CHECK(r.check_pass <= r.trials);
  CHECK(r.joint_success <= r.copy2_accept);
  CHECK(r.beta_success <= r.check_pass);
}

// Keeps |A> in register 1 and finds some a in A by querying g.
PirateStrategy member_search_duplicator() {
  return make_custom_strategy("member_search_duplicator", [](const ssl::Crs&, const ssl::LeasedState& lease, Rng& rng) {
    const auto& psi = std::get<PureState>(lease.quantum);
    for (;;) {
      const auto v = field::FieldVector::random(psi.params(), rng);
      if (!v.is_zero() && lease.classical.g.eval(v)) {
        return PirateOutput{BipartiteState::product(psi, PureState::basis(v)), lease.classical, lease.classical};
      }
    }
  });
}

// (|A>|A> + |w>|v>)/sqrt2 with |w>, |v> basis states outside A.
PirateStrategy entangled_strategy() {
  return make_custom_strategy("entangled", [](const ssl::Crs&, const ssl::LeasedState& lease, Rng& rng) {
    const auto& psi = std::get<PureState>(lease.quantum);
    std::vector<field::FieldVector> outside;
    while (outside.size() < 2) {
      const auto v = field::FieldVector::random(psi.params(), rng);
      if (!lease.classical.g.eval(v)) outside.push_back(v);
    }
    const auto aa = BipartiteState::product(psi, psi).amplitudes();
    const auto wv = BipartiteState::product(PureState::basis(outside[0]), PureState::basis(outside[1])).amplitudes();
    return PirateOutput{BipartiteState(psi.params(), (aa + wv) / std::sqrt(2.0)), lease.classical, lease.classical};
  });
}

}  // namespace

TEST_CASE("strategy names round trip") {
  for (auto k : {StrategyKind::honest_return, StrategyKind::measure_reprepare_duplicate,
                 StrategyKind::fourier_measure_duplicate, StrategyKind::classical_copy_fresh_subspace,
                 StrategyKind::budget_bruteforce_mauler}) {
    CHECK(strategy_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS(strategy_kind_from_string("oracle"));
}

TEST_CASE("wilson interval and standard error") {
  const RateEstimate r{0, 100};
  const auto [lo, hi] = r.wilson();
  CHECK(lo == 0.0);
  CHECK(hi == doctest::Approx(0.037).epsilon(0.01));
  const RateEstimate h{50, 100};
  CHECK(h.standard_error() == doctest::Approx(0.05));
}

TEST_CASE("honest return: no second copy, perfect check") {
  const auto r = finite_term_experiment(make_strategy(StrategyKind::honest_return), config(300), named_sampler("point", 6));
  check_accounting(r);
  CHECK(r.check_pass == 300);
  CHECK(r.joint_success == 0);
  CHECK(r.beta_success == 0);
}

TEST_CASE("measure-and-reprepare duplicator matches 2^-3 rates") {
  const auto r = finite_term_experiment(make_strategy(StrategyKind::measure_reprepare_duplicate), config(10000),
                                        named_sampler("point", 6));
  check_accounting(r);
  CHECK(within(rate(r.check_pass, r.trials), 0.125));
  CHECK(within(rate(r.copy2_accept, r.trials), 0.125));
  CHECK(within(rate(r.joint_success, r.trials), 0.125 * 0.125));
  // Given a pass, the kept copy agrees with probability exactly 1/8 on every input.
  CHECK(r.to_json().at("run_agreement_rate_copy2").get<double>() == doctest::Approx(0.125).epsilon(1e-9));
  CHECK(r.beta_success == 0);
}

TEST_CASE("Fourier-basis duplicator matches 2^-3 rates") {
  const auto r = finite_term_experiment(make_strategy(StrategyKind::fourier_measure_duplicate), config(4000, 6),
                                        named_sampler("wildcard", 6));
  check_accounting(r);
  CHECK(within(rate(r.check_pass, r.trials), 0.125));
  CHECK(within(rate(r.copy2_accept, r.trials), 0.125));
}

TEST_CASE("classical copy with a fresh subspace never verifies") {
  const auto r = finite_term_experiment(make_strategy(StrategyKind::classical_copy_fresh_subspace), config(1000, 7),
                                        named_sampler("affine", 6));
  check_accounting(r);
  CHECK(r.check_pass == 1000);
  CHECK(r.copy2_accept == 0);
  CHECK(r.joint_success == 0);
}

TEST_CASE("brute-force mauler: small budget fails, full enumeration succeeds") {
  const auto crs = ssl::Crs::setup(FieldParams(2, 6), OracleMode::toy, 8);
  Rng rng(80);
  int wide_successes = 0;
  for (int i = 0; i < 100; ++i) {
    const auto sk = ssl::gen(*crs, rng);
    const auto lease = ssl::lessor(*crs, sk, std::make_shared<circuits::CncCircuit>(circuits::random_point(32, rng)), rng);
    const auto r = bruteforce_mauler(*crs, lease, 1024, rng);
    wide_successes += r.success;
    CHECK(r.guesses == 1024);
  }
  CHECK(wide_successes == 0);

  for (int i = 0; i < 20; ++i) {
    const auto c = i % 2 ? circuits::random_point(8, rng) : circuits::random_affine(2, 4, 8, rng);
    const auto sk = ssl::gen(*crs, rng);
    const auto lease = ssl::lessor(*crs, sk, std::make_shared<circuits::CncCircuit>(c), rng);
    const auto r = bruteforce_mauler(*crs, lease, 256, rng);
    REQUIRE(r.success);
    CHECK(c.accepts(*r.accepting_input));
    CHECK(r.own_key->a != sk.a);
    const auto est = estimate_run_agreement(*crs, *r.fabricated, c, AgreementMode::exhaustive, 0, rng);
    CHECK(est.min_agreement == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(circuits::is_functionally_equal(*r.recovered_program, c));
  }

  const auto sk = ssl::gen(*crs, rng);
  const auto lease = ssl::lessor(*crs, sk, std::make_shared<circuits::CncCircuit>(circuits::random_point(8, rng)), rng);
  const auto none = bruteforce_mauler(*crs, lease, 0, rng);
  CHECK_FALSE(none.success);
  CHECK(none.guesses == 0);

  const auto ideal = ssl::Crs::setup(FieldParams(2, 6), OracleMode::ideal, 8);
  CHECK_THROWS_AS(bruteforce_mauler(*ideal, lease, 256, rng), ToyModeRequired);
}

TEST_CASE("mauler experiment with full budget wins every trial") {
  auto cfg = config(30, 9, OracleMode::toy);
  cfg.n = 8;
  const auto r = finite_term_experiment(make_strategy(StrategyKind::budget_bruteforce_mauler, 256), cfg,
                                        named_sampler("point", 8));
  check_accounting(r);
  CHECK(r.joint_success == 30);
  CHECK(r.beta_success == 30);
}

TEST_CASE("estimate_run_agreement") {
  const auto crs = ssl::Crs::setup(FieldParams(2, 6), OracleMode::ideal, 10);
  Rng rng(81);
  const auto c = circuits::random_point(6, rng);
  const auto sk = ssl::gen(*crs, rng);
  const auto lease = ssl::lessor(*crs, sk, std::make_shared<circuits::CncCircuit>(c), rng);
  CHECK(estimate_run_agreement(*crs, lease, c, AgreementMode::exhaustive, 0, rng).min_agreement ==
        doctest::Approx(1.0).epsilon(1e-9));

  auto broken = lease;
  broken.classical.proof.tag[3] ^= 1;
  CHECK(estimate_run_agreement(*crs, broken, c, AgreementMode::exhaustive, 0, rng).min_agreement == 0.0);

  // cos(t)|A> + sin(t)|v> with v outside A: agreement cos^2 t.
  const auto a_state = quantum::subspace_state(sk.a);
  field::FieldVector v = field::FieldVector::random(sk.a.params(), rng);
  while (sk.a.contains(v)) v = field::FieldVector::random(sk.a.params(), rng);
  const double t = 0.6;
  const Eigen::VectorXcd amps = std::cos(t) * a_state.amplitudes() + std::sin(t) * PureState::basis(v).amplitudes();
  const ssl::LeasedState damaged{PureState(sk.a.params(), amps / amps.norm()), lease.classical};
  const double overlap = std::norm(a_state.inner(std::get<PureState>(damaged.quantum)));
  CHECK(estimate_run_agreement(*crs, damaged, c, AgreementMode::exhaustive, 0, rng).min_agreement ==
        doctest::Approx(overlap).epsilon(1e-9));
  const auto sampled = estimate_run_agreement(*crs, damaged, c, AgreementMode::sampled, 2000, rng);
  CHECK_FALSE(sampled.exhaustive);
  CHECK(sampled.min_agreement <= overlap + 0.01);
  CHECK(sampled.min_agreement > overlap - 0.06);
}

TEST_CASE("infinite-term: honest copy with garbage second register") {
  const auto r = infinite_term_experiment(make_strategy(StrategyKind::honest_return), config(300, 11),
                                          named_sampler("point", 6));
  check_accounting(r);
  CHECK(r.check_pass == 300);
  CHECK(r.joint_success == 0);
}

TEST_CASE("infinite-term: |A> x |a> duplicator bounded by q^(-lambda/2)") {
  const auto r = infinite_term_experiment(member_search_duplicator(), config(4000, 12), named_sampler("point", 6));
  check_accounting(r);
  CHECK(r.check_pass == 4000);
  CHECK(within(rate(r.copy2_accept, r.trials), 0.125));
  CHECK(within(rate(r.joint_success, r.trials), 0.125));
}

TEST_CASE("infinite-term: entangled strategy matches the Born rule") {
  // Copy 1 accepts with probability 1/2 (branch |A>|A>); then copy 2 holds |A> and always agrees.
  // On the rejected branch register 2 holds |v>, v outside A, and never agrees.
  const auto r = infinite_term_experiment(entangled_strategy(), config(4000, 13), named_sampler("point", 6));
  check_accounting(r);
  CHECK(within(rate(r.check_pass, r.trials), 0.5));
  CHECK(r.joint_success == r.check_pass);
  CHECK(r.rejected_branch_copy2_accept == 0);
  CHECK(r.rejected_branch_trials == r.trials - r.check_pass);
}

TEST_CASE("conditional state agrees with direct two-register simulation") {
  const auto crs = ssl::Crs::setup(FieldParams(2, 4), OracleMode::ideal, 14);
  Rng rng(82);
  const auto sk = ssl::gen(*crs, rng);
  const auto lease = ssl::lessor(*crs, sk, std::make_shared<circuits::CncCircuit>(circuits::random_point(4, rng)), rng);
  const auto sigma = entangled_strategy()(*crs, lease, rng).sigma;
  const auto cond = quantum::conditional_second_register_branch(sigma, sk.a, true);
  const auto p_pass = quantum::first_register_accept_probability(sigma, sk.a);

  const auto& g = lease.classical.g;
  const auto& gp = lease.classical.g_perp;
  constexpr int kTrials = 10000;
  std::vector<int> counts(16, 0);
  int passes = 0;
  for (int i = 0; i < kTrials; ++i) {
    auto m = quantum::two_step_projection_first(
        sigma, [&](const field::FieldVector& v) { return g.eval(v); },
        [&](const field::FieldVector& v) { return gp.eval(v); }, rng);
    if (!m.accepted()) continue;
    ++passes;
    ++counts[quantum::sample_second_register(m.post_state, rng)];
  }
  CHECK(within(rate(passes, kTrials), p_pass));
  for (std::size_t x = 0; x < 16; ++x) {
    const double p = cond.post.matrix()(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)).real();
    const double sigma_x = std::sqrt(std::max(p * (1 - p), 1e-12) / passes);
    CHECK(std::abs(counts[x] / double(passes) - p) <= 3 * sigma_x + 1e-12);
  }
}

TEST_CASE("reports are deterministic and independent of thread count") {
  auto a = config(200, 15);
  a.threads = 1;
  auto b = a;
  b.threads = 4;
  const auto s = make_strategy(StrategyKind::measure_reprepare_duplicate);
  const auto ra = finite_term_experiment(s, a, named_sampler("point", 6)).to_json().dump();
  const auto rb = finite_term_experiment(s, b, named_sampler("point", 6)).to_json().dump();
  CHECK(ra == rb);
  CHECK(ra == finite_term_experiment(s, a, named_sampler("point", 6)).to_json().dump());
  const auto other = config(200, 16);
  CHECK(ra != finite_term_experiment(s, other, named_sampler("point", 6)).to_json().dump());
}

TEST_CASE("quadrupling trials halves the standard error") {
  const auto s = make_strategy(StrategyKind::measure_reprepare_duplicate);
  const auto small = finite_term_experiment(s, config(1000, 17), named_sampler("point", 6));
  const auto large = finite_term_experiment(s, config(4000, 17), named_sampler("point", 6));
  const double ratio = rate(large.check_pass, large.trials).standard_error() /
                       rate(small.check_pass, small.trials).standard_error();
  CHECK(ratio == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("report merge is associative") {
  ExperimentReport a, b, c;
  a.trials = 3;
  a.check_pass = 2;
  b.trials = 5;
  b.joint_success = 1;
  b.check_pass = 1;
  c.trials = 7;
  c.copy2_accept = 4;
  ExperimentReport ab = a;
  ab.merge(b);
  ab.merge(c);
  ExperimentReport bc = b;
  bc.merge(c);
  ExperimentReport a_bc = a;
  a_bc.merge(bc);
  CHECK(ab.to_json() == a_bc.to_json());
  CHECK(ExperimentReport::csv_header().find("joint_success") != std::string::npos);
}
