#include "qlease/adversary_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>

#include "qlease/rng.hpp"

namespace qlease::harness {

using quantum::BipartiteState;
using quantum::PureState;

namespace {

constexpr std::uint64_t kSampledAgreementRuns = 64;

const PureState& pure_part(const ssl::LeasedState& lease) {
  const auto* p = std::get_if<PureState>(&lease.quantum);
  if (!p) throw std::invalid_argument("strategy expects a pure leased state");
  return *p;
}

std::uint64_t sample_index(const Eigen::VectorXcd& amps, Rng& rng) {
  double u = rng.uniform01();
  for (Eigen::Index i = 0; i < amps.size(); ++i) {
    const double p = std::norm(amps[i]);
    if (u < p) return static_cast<std::uint64_t>(i);
    u -= p;
  }
  return static_cast<std::uint64_t>(amps.size() - 1);
}

PureState non_member_state(const ssl::ClassicalPart& cp, Rng& rng) {
  for (;;) {
    const auto v = field::FieldVector::random(cp.g.params(), rng);
    if (!cp.g.eval(v)) return PureState::basis(v);
  }
}

PirateOutput honest_return(const ssl::LeasedState& lease, Rng& rng) {
  return {BipartiteState::product(pure_part(lease), non_member_state(lease.classical, rng)), lease.classical,
          std::nullopt};
}

PirateOutput measure_reprepare(const ssl::LeasedState& lease, Rng& rng) {
  const auto& psi = pure_part(lease);
  const auto a = PureState::basis(psi.params(), sample_index(psi.amplitudes(), rng));
  return {BipartiteState::product(a, a), lease.classical, lease.classical};
}

PirateOutput fourier_measure(const ssl::LeasedState& lease, Rng& rng) {
  const auto& psi = pure_part(lease);
  const auto rotated = quantum::qft(psi, false);
  const auto b = quantum::qft(PureState::basis(psi.params(), sample_index(rotated.amplitudes(), rng)), true);
  return {BipartiteState::product(b, b), lease.classical, lease.classical};
}

PirateOutput classical_copy_fresh_subspace(const ssl::Crs& crs, const ssl::LeasedState& lease, Rng& rng) {
  const auto own = ssl::gen(crs, rng);
  ssl::ClassicalPart forged{oracles::sho_obf(crs.suite(), own.a, rng), oracles::sho_obf(crs.suite(), own.a.dual(), rng),
                            lease.classical.c_obf, lease.classical.proof};
  return {BipartiteState::product(pure_part(lease), quantum::subspace_state(own.a)), lease.classical,
          std::move(forged)};
}

PirateOutput mauler(const ssl::Crs& crs, const ssl::LeasedState& lease, std::uint64_t budget, Rng& rng) {
  auto r = bruteforce_mauler(crs, lease, budget, rng);
  if (!r.success) return honest_return(lease, rng);
  return {BipartiteState::product(pure_part(lease), std::get<PureState>(r.fabricated->quantum)), lease.classical,
          r.fabricated->classical};
}

bool agrees(const std::optional<BitString>& out, const circuits::Program& c, const BitString& x) {
  return out.has_value() && *out == c.eval(x);
}

template <class Fn>
std::vector<ExperimentReport> run_trials(const ExperimentConfig& config, Fn&& trial) {
  std::vector<ExperimentReport> out(config.trials);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned threads =
      static_cast<unsigned>(std::min<std::uint64_t>(config.threads ? config.threads : hw, std::max<std::uint64_t>(config.trials, 1)));
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::uint64_t i = t; i < config.trials; i += threads) out[i] = trial(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

ExperimentReport aggregate(std::string experiment, const PirateStrategy& strategy, const ExperimentConfig& config,
                           const std::vector<ExperimentReport>& per_trial) {
  ExperimentReport r;
  r.experiment = std::move(experiment);
  r.strategy = strategy.name();
  r.config = config.to_json();
  for (const auto& t : per_trial) r.merge(t);
  return r;
}

struct TrialSetup {
  circuits::ProgramPtr c;
  ssl::SecretKey sk;
  PirateOutput pirate;
};

TrialSetup setup_trial(const ssl::Crs& crs, const PirateStrategy& strategy, const ProgramSampler& sampler, Rng& rng) {
  auto c = sampler(rng);
  auto sk = ssl::gen(crs, rng);
  const auto lease = ssl::lessor(crs, sk, c, rng);
  auto pirate = strategy(crs, lease, rng);
  return {std::move(c), std::move(sk), std::move(pirate)};
}

// Run of the kept copy at a random input, plus the exact (or sampled) min-over-x agreement.
std::pair<bool, AgreementEstimate> score_copy2(const ssl::Crs& crs, const PirateOutput& pirate,
                                               const quantum::DensityOperator& reg2, const circuits::Program& c,
                                               Rng& rng) {
  const bool exhaustive = c.input_bits() <= 8;
  if (!pirate.classical2) return {false, {0.0, exhaustive, 0}};
  const ssl::LeasedState copy{reg2, *pirate.classical2};
  if (copy.classical.c_obf.input_bits() != c.input_bits()) return {false, {0.0, exhaustive, 0}};
  const auto x = BitString::random(c.input_bits(), rng);
  const bool ok = agrees(ssl::run(crs, copy, x, rng).output, c, x);
  const auto est = estimate_run_agreement(crs, copy, c, exhaustive ? AgreementMode::exhaustive : AgreementMode::sampled,
                                          kSampledAgreementRuns, rng);
  return {ok, est};
}

}  // namespace

// ---------------------------------------------------------------- strategies

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::honest_return: return "honest_return";
    case StrategyKind::measure_reprepare_duplicate: return "measure_reprepare_duplicate";
    case StrategyKind::fourier_measure_duplicate: return "fourier_measure_duplicate";
    case StrategyKind::classical_copy_fresh_subspace: return "classical_copy_fresh_subspace";
    case StrategyKind::budget_bruteforce_mauler: return "budget_bruteforce_mauler";
    case StrategyKind::custom: return "custom";
  }
  return "custom";
}

StrategyKind strategy_kind_from_string(const std::string& s) {
  for (auto k : {StrategyKind::honest_return, StrategyKind::measure_reprepare_duplicate,
                 StrategyKind::fourier_measure_duplicate, StrategyKind::classical_copy_fresh_subspace,
                 StrategyKind::budget_bruteforce_mauler, StrategyKind::custom}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown strategy: " + s);
}

std::string PirateStrategy::name() const {
  if (kind == StrategyKind::custom) return label.empty() ? "custom" : label;
  if (kind == StrategyKind::budget_bruteforce_mauler) return to_string(kind) + "(B=" + std::to_string(budget) + ")";
  return to_string(kind);
}

PirateOutput PirateStrategy::operator()(const ssl::Crs& crs, const ssl::LeasedState& lease, Rng& rng) const {
  switch (kind) {
    case StrategyKind::honest_return: return honest_return(lease, rng);
    case StrategyKind::measure_reprepare_duplicate: return measure_reprepare(lease, rng);
    case StrategyKind::fourier_measure_duplicate: return fourier_measure(lease, rng);
    case StrategyKind::classical_copy_fresh_subspace: return classical_copy_fresh_subspace(crs, lease, rng);
    case StrategyKind::budget_bruteforce_mauler: return mauler(crs, lease, budget, rng);
    case StrategyKind::custom:
      if (!custom) throw std::invalid_argument("custom strategy without a function");
      return custom(crs, lease, rng);
  }
  throw std::logic_error("unreachable strategy kind");
}

PirateStrategy make_strategy(StrategyKind kind, std::uint64_t budget) { return {kind, budget, {}, {}}; }

PirateStrategy make_custom_strategy(std::string label, StrategyFn fn) {
  return {StrategyKind::custom, 0, std::move(fn), std::move(label)};
}

// ---------------------------------------------------------------- mauler

MaulerResult bruteforce_mauler(const ssl::Crs& crs, const ssl::LeasedState& lease, std::uint64_t budget, Rng& rng) {
  if (crs.mode() != oracles::OracleMode::toy) throw ToyModeRequired("the brute-force mauler needs toy oracles");
  MaulerResult r;
  const auto& h = lease.classical.c_obf;
  if (h.form() != "cnc" || budget == 0) return r;
  const auto& inner = *h.inner();
  const std::size_t n = h.input_bits();
  const bool enumerate = n < 64 && budget >= (std::uint64_t{1} << n);
  const std::uint64_t tries = enumerate ? (std::uint64_t{1} << n) : budget;
  std::optional<BitString> lock;
  for (std::uint64_t i = 0; i < tries; ++i) {
    const auto x = enumerate ? BitString::from_uint(i, n) : BitString::random(n, rng);
    const auto y = inner.eval(x);
    ++r.guesses;
    if (oracles::lock_digest(h.salt(), y) == h.digest()) {
      r.accepting_input = x;
      lock = y;
      break;
    }
  }
  if (!lock) return r;

  const auto out = h.eval(*r.accepting_input);
  std::optional<BitString> msg;
  if (!(h.output_bits() == 1 && out.get(0))) msg = out;
  auto program = std::make_shared<circuits::CncCircuit>(inner, *lock, msg,
                                                        circuits::SearchTag{circuits::SearchKind::custom, std::nullopt});
  auto own = ssl::gen(crs, rng);
  ssl::LeaseWitness w{own.a, rng.bytes16(), rng.bytes16(), rng.bytes16(), program, *r.accepting_input};
  ssl::ClassicalPart cp{oracles::sho_obf(crs.suite(), own.a, w.r_a),
                        oracles::sho_obf(crs.suite(), own.a.dual(), w.r_a_perp),
                        oracles::qiho_obf(crs.suite(), program, w.r_o), {}};
  cp.proof = crs.nizk().prove(crs.nizk_crs(), cp.statement(), w.to_json());
  r.fabricated = ssl::LeasedState{quantum::subspace_state(own.a), std::move(cp)};
  r.own_key = std::move(own);
  r.recovered_program = std::move(program);
  r.success = true;
  return r;
}

// ---------------------------------------------------------------- statistics

double RateEstimate::standard_error() const {
  if (trials == 0) return 0.0;
  const double p = rate();
  return std::sqrt(p * (1 - p) / static_cast<double>(trials));
}

std::pair<double, double> RateEstimate::wilson() const {
  if (trials == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = rate();
  const double denom = 1 + z * z / n;
  const double center = (p + z * z / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom;
  return {count == 0 ? 0.0 : std::max(0.0, center - half), count == trials ? 1.0 : std::min(1.0, center + half)};
}

nlohmann::json RateEstimate::to_json() const {
  const auto [lo, hi] = wilson();
  return {{"count", count}, {"trials", trials}, {"rate", rate()}, {"stderr", standard_error()},
          {"wilson95", {lo, hi}}};
}

AgreementEstimate estimate_run_agreement(const ssl::Crs& crs, const ssl::LeasedState& copy,
                                         const circuits::Program& c, AgreementMode mode, std::uint64_t trials,
                                         Rng& rng) {
  const std::size_t n = c.input_bits();
  const auto& h = copy.classical.c_obf;
  if (mode == AgreementMode::exhaustive) {
    if (n > 8) throw std::invalid_argument("exhaustive agreement needs n <= 8");
    if (h.input_bits() != n) return {0.0, true, 0};
    const double p = ssl::run_accept_probability(crs, copy);
    double worst = p;
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) {
      const auto x = BitString::from_uint(v, n);
      if (h.eval(x) != c.eval(x)) worst = 0.0;
    }
    return {worst, true, std::uint64_t{1} << n};
  }
  if (h.input_bits() != n) return {0.0, false, 0};
  RateEstimate k{0, trials};
  for (std::uint64_t i = 0; i < trials; ++i) {
    const auto x = BitString::random(n, rng);
    k.count += agrees(ssl::run(crs, copy, x, rng).output, c, x);
  }
  return {k.wilson().first, false, trials};
}

// ---------------------------------------------------------------- experiments

nlohmann::json ExperimentConfig::to_json() const {
  return {{"q", params.q},        {"lambda", params.lambda}, {"n", n},
          {"mode", oracles::to_string(mode)},                {"seed", seed},
          {"trials", trials},     {"beta", beta},            {"sampler", sampler_name},
          {"rng", Rng::kAlgorithm}, {"digest", kDigestAlgorithm}};
}

ProgramSampler named_sampler(const std::string& name, std::size_t n) {
  if (name == "point") return [n](Rng& rng) -> circuits::ProgramPtr { return std::make_shared<circuits::CncCircuit>(circuits::random_point(n, rng)); };
  if (name == "wildcard") {
    return [n](Rng& rng) -> circuits::ProgramPtr {
      return std::make_shared<circuits::CncCircuit>(circuits::random_wildcard(n, rng));
    };
  }
  if (name == "affine") {
    return [n](Rng& rng) -> circuits::ProgramPtr {
      return std::make_shared<circuits::CncCircuit>(circuits::random_affine(2, std::max<std::size_t>(1, n / 2), n, rng));
    };
  }
  throw std::invalid_argument("unknown circuit sampler: " + name);
}

void ExperimentReport::merge(const ExperimentReport& o) {
  trials += o.trials;
  check_pass += o.check_pass;
  copy2_accept += o.copy2_accept;
  joint_success += o.joint_success;
  beta_success += o.beta_success;
  agreement_sum_given_pass += o.agreement_sum_given_pass;
  rejected_branch_trials += o.rejected_branch_trials;
  rejected_branch_copy2_accept += o.rejected_branch_copy2_accept;
  exhaustive = exhaustive && o.exhaustive;
}

nlohmann::json ExperimentReport::to_json() const {
  const bool finite = experiment == "finite-term";
  nlohmann::json j = {{"experiment", experiment},
                      {"strategy", strategy},
                      {"config", config},
                      {"trials", trials},
                      {finite ? "check_pass" : "copy1_success", RateEstimate{check_pass, trials}.to_json()},
                      {"copy2_accept", RateEstimate{copy2_accept, trials}.to_json()},
                      {"joint_success", RateEstimate{joint_success, trials}.to_json()},
                      {"beta_success", RateEstimate{beta_success, trials}.to_json()},
                      {"agreement_method", exhaustive ? "exhaustive" : "sampled"}};
  if (check_pass > 0) {
    j["run_agreement_rate_copy2"] = agreement_sum_given_pass / static_cast<double>(check_pass);
  } else {
    j["run_agreement_rate_copy2"] = nullptr;
  }
  if (!finite) {
    j["rejected_branch"] = {{"trials", rejected_branch_trials},
                            {"copy2_accept", RateEstimate{rejected_branch_copy2_accept, rejected_branch_trials}.to_json()}};
  }
  return j;
}

std::string ExperimentReport::csv_header() {
  return "experiment,strategy,q,lambda,n,mode,seed,trials,check_pass,copy2_accept,joint_success,beta_success,"
         "check_rate,copy2_rate,joint_rate";
}

std::string ExperimentReport::csv_row() const {
  char rates[128];
  std::snprintf(rates, sizeof rates, "%.17g,%.17g,%.17g", RateEstimate{check_pass, trials}.rate(),
                RateEstimate{copy2_accept, trials}.rate(), RateEstimate{joint_success, trials}.rate());
  const auto& c = config;
  return experiment + "," + strategy + "," + c.at("q").dump() + "," + c.at("lambda").dump() + "," + c.at("n").dump() +
         "," + c.at("mode").get<std::string>() + "," + c.at("seed").dump() + "," + std::to_string(trials) + "," +
         std::to_string(check_pass) + "," + std::to_string(copy2_accept) + "," + std::to_string(joint_success) + "," +
         std::to_string(beta_success) + "," + rates;
}

ExperimentReport finite_term_experiment(const PirateStrategy& strategy, const ExperimentConfig& config,
                                        const ProgramSampler& sampler) {
  const auto crs = ssl::Crs::setup(config.params, config.mode, config.seed);
  auto per_trial = run_trials(config, [&](std::uint64_t i) {
    Rng rng(config.seed, i + 1);
    auto t = setup_trial(*crs, strategy, sampler, rng);
    ExperimentReport r;
    r.trials = 1;
    const double p1 = quantum::first_register_accept_probability(t.pirate.sigma, t.sk.a);
    const double u = rng.uniform01();
    const bool pass = 1 - p1 < quantum::kZeroProbability || (p1 >= quantum::kZeroProbability && u < p1);
    const auto cond = quantum::conditional_second_register_branch(t.pirate.sigma, t.sk.a, pass);
    const auto [copy2, est] = score_copy2(*crs, t.pirate, cond.post, *t.c, rng);
    r.exhaustive = est.exhaustive;
    r.check_pass = pass;
    r.copy2_accept = copy2;
    r.joint_success = pass && copy2;
    if (pass) {
      r.agreement_sum_given_pass = est.min_agreement;
      r.beta_success = est.min_agreement >= config.beta;
    }
    return r;
  });
  return aggregate("finite-term", strategy, config, per_trial);
}

ExperimentReport infinite_term_experiment(const PirateStrategy& strategy, const ExperimentConfig& config,
                                          const ProgramSampler& sampler) {
  const auto crs = ssl::Crs::setup(config.params, config.mode, config.seed);
  auto per_trial = run_trials(config, [&](std::uint64_t i) {
    Rng rng(config.seed, i + 1);
    auto t = setup_trial(*crs, strategy, sampler, rng);
    ExperimentReport r;
    r.trials = 1;
    const auto& cp1 = t.pirate.classical1;
    const auto x = BitString::random(t.c->input_bits(), rng);
    bool copy1 = false;
    BipartiteState post = t.pirate.sigma;
    if (cp1.c_obf.input_bits() == t.c->input_bits() &&
        crs->nizk().verify(crs->nizk_crs(), cp1.statement(), cp1.proof)) {
      auto m = quantum::two_step_projection_first(
          t.pirate.sigma, [&](const field::FieldVector& v) { return cp1.g.eval(v); },
          [&](const field::FieldVector& v) { return cp1.g_perp.eval(v); }, rng);
      copy1 = m.accepted() && cp1.c_obf.eval(x) == t.c->eval(x);
      post = std::move(m.post_state);
    }
    const auto reg2 = quantum::partial_trace_first(post);
    const auto [copy2, est] = score_copy2(*crs, t.pirate, reg2, *t.c, rng);
    r.exhaustive = est.exhaustive;
    r.check_pass = copy1;
    r.copy2_accept = copy2;
    r.joint_success = copy1 && copy2;
    if (copy1) {
      r.agreement_sum_given_pass = est.min_agreement;
      r.beta_success = est.min_agreement >= config.beta;
    } else {
      r.rejected_branch_trials = 1;
      r.rejected_branch_copy2_accept = copy2;
    }
    return r;
  });
  return aggregate("infinite-term", strategy, config, per_trial);
}

}  // namespace qlease::harness
