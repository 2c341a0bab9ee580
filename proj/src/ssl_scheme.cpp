#include "qlease/ssl_scheme.hpp"

#include <cmath>

#include "qlease/rng.hpp"

namespace qlease::ssl {

using quantum::DensityOperator;
using quantum::PureState;

namespace {

oracles::Coins coins_from_hex(const std::string& hex) {
  const auto raw = from_hex(hex);
  if (raw.size() != 16) throw std::invalid_argument("witness coins must be 16 bytes");
  oracles::Coins c{};
  std::copy(raw.begin(), raw.end(), c.begin());
  return c;
}

bool same(const nlohmann::json& a, const nlohmann::json& b) { return a.dump() == b.dump(); }

RelationCheck lease_relation(const oracles::OracleSuite& suite, const circuits::ProgramCodec& codec,
                             const field::FieldParams& params, const nlohmann::json& statement,
                             const nlohmann::json& w) {
  RelationCheck r{false, false, false, false};
  try {
    const auto a = field::Subspace::from_json(w.at("A")).subspace;
    if (a.params() != params || 2 * a.dim() != params.lambda) return r;
    r.g_matches = same(oracles::sho_obf(suite, a, coins_from_hex(w.at("r_A"))).to_json(), statement.at("g"));
    r.g_perp_matches =
        same(oracles::sho_obf(suite, a.dual(), coins_from_hex(w.at("r_A_perp"))).to_json(), statement.at("g_perp"));
    const auto c = codec.parse(w.at("C"));
    r.c_obf_matches = same(oracles::qiho_obf(suite, c, coins_from_hex(w.at("r_o"))).to_json(), statement.at("c_obf"));
    const auto x = BitString::from_hex(w.at("x").get<std::string>(), c->input_bits());
    r.x_accepts = c->accepts(x);
  } catch (const std::exception&) {
    // Malformed witnesses simply fail the relation.
  }
  return r;
}

double masked_weight(const Eigen::VectorXcd& v, const std::vector<bool>& mask) {
  double w = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) w += std::norm(v[i]);
  }
  return w;
}

double pure_accept_probability(const PureState& s, const quantum::Predicate& in_a, const quantum::Predicate& in_dual) {
  const double p1 = masked_weight(s.amplitudes(), quantum::membership_mask(s.params(), in_a));
  if (p1 < quantum::kZeroProbability) return 0.0;
  const auto first = quantum::membership_branch(s, in_a, 1);
  const auto rotated = quantum::qft(first.post_state, false);
  return p1 * masked_weight(rotated.amplitudes(), quantum::membership_mask(s.params(), in_dual));
}

}  // namespace

// ---------------------------------------------------------------- setup

Crs::Crs(field::FieldParams params, oracles::OracleSuite suite, std::shared_ptr<circuits::ProgramCodec> codec)
    : params_(params), suite_(suite), codec_(std::move(codec)), nizk_(std::make_shared<oracles::NizkOracle>(suite_)) {
  const auto s = suite_;
  const auto c = codec_;
  const auto p = params_;
  nizk_->register_relation(kLeaseRelation, [s, c, p](const nlohmann::json& statement, const nlohmann::json& witness) {
    return lease_relation(s, *c, p, statement, witness).all();
  });
  nizk_crs_ = nizk_->crsgen(kLeaseRelation);
}

std::shared_ptr<const Crs> Crs::setup(field::FieldParams params, oracles::OracleMode mode, std::uint64_t seed,
                                      circuits::ProgramCodec codec) {
  if (params.lambda % 2 != 0) throw std::invalid_argument("setup: lambda must be even");
  quantum::checked_dimension(params.q, params.lambda, quantum::kSingleRegisterCap);
  return std::make_shared<const Crs>(params, oracles::OracleSuite(mode, seed),
                                     std::make_shared<circuits::ProgramCodec>(std::move(codec)));
}

nlohmann::json Crs::to_json() const {
  return {{"q", params_.q},
          {"lambda", params_.lambda},
          {"mode", oracles::to_string(mode())},
          {"seed", seed()},
          {"nizk_crs", nizk_crs_.to_json()}};
}

RelationCheck check_lease_relation(const Crs& crs, const nlohmann::json& statement, const nlohmann::json& witness) {
  return lease_relation(crs.suite(), crs.codec(), crs.params(), statement, witness);
}

SecretKey gen(const Crs& crs, Rng& rng) { return {field::random_subspace(crs.params(), crs.params().lambda / 2, rng)}; }

// ---------------------------------------------------------------- classical parts

nlohmann::json ClassicalPart::statement() const {
  return {{"g", g.to_json()}, {"g_perp", g_perp.to_json()}, {"c_obf", c_obf.to_json()}};
}

nlohmann::json ClassicalPart::to_json() const {
  return {{"g", g.to_json()}, {"g_perp", g_perp.to_json()}, {"c_obf", c_obf.to_json()}, {"proof", proof.to_json()}};
}

ClassicalPart ClassicalPart::from_json(const nlohmann::json& j, const Crs& crs) {
  return {oracles::SubspaceObfHandle::from_json(j.at("g"), crs.suite()),
          oracles::SubspaceObfHandle::from_json(j.at("g_perp"), crs.suite()),
          oracles::InputHidingObfHandle::from_json(j.at("c_obf"), crs.suite(), crs.codec()),
          oracles::NizkProof::from_json(j.at("proof"))};
}

nlohmann::json LeaseWitness::to_json() const {
  return {{"A", a.to_json()},
          {"r_o", to_hex(r_o)},
          {"r_A", to_hex(r_a)},
          {"r_A_perp", to_hex(r_a_perp)},
          {"C", program->to_json()},
          {"x", x.to_hex()}};
}

DensityOperator to_density(const QuantumPart& q) {
  if (const auto* p = std::get_if<PureState>(&q)) return DensityOperator::pure(*p);
  return std::get<DensityOperator>(q);
}

double trace_distance(const QuantumPart& x, const QuantumPart& y) {
  const auto* px = std::get_if<PureState>(&x);
  const auto* py = std::get_if<PureState>(&y);
  if (px && py) return quantum::trace_distance(*px, *py);
  return quantum::trace_distance(to_density(x), to_density(y));
}

// ---------------------------------------------------------------- lessor

LeasedState lessor(const Crs& crs, const SecretKey& sk, const circuits::ProgramPtr& program, Rng& rng,
                   LeaseWitness* witness_out) {
  if (sk.a.params() != crs.params()) throw std::invalid_argument("lessor: key parameters differ from the crs");
  const auto x = program->search();
  LeaseWitness w{sk.a, rng.bytes16(), rng.bytes16(), rng.bytes16(), program, x};
  ClassicalPart cp{oracles::sho_obf(crs.suite(), sk.a, w.r_a), oracles::sho_obf(crs.suite(), sk.a.dual(), w.r_a_perp),
                   oracles::qiho_obf(crs.suite(), program, w.r_o), {}};
  cp.proof = crs.nizk().prove(crs.nizk_crs(), cp.statement(), w.to_json());
  if (witness_out) *witness_out = w;
  return {quantum::subspace_state(sk.a), std::move(cp)};
}

// ---------------------------------------------------------------- run

RunResult run(const Crs& crs, const LeasedState& lease, const BitString& x, Rng& rng) {
  const auto& cp = lease.classical;
  if (x.size() != cp.c_obf.input_bits()) {
    throw std::invalid_argument("run: expected " + std::to_string(cp.c_obf.input_bits()) + " input bits");
  }
  RunResult r{std::nullopt, lease, false, false, false, std::nullopt};
  r.proof_ok = crs.nizk().verify(crs.nizk_crs(), cp.statement(), cp.proof);
  if (!r.proof_ok) return r;
  const quantum::Predicate in_a = [&cp](const field::FieldVector& v) { return cp.g.eval(v); };
  const quantum::Predicate in_dual = [&cp](const field::FieldVector& v) { return cp.g_perp.eval(v); };
  std::visit(
      [&](const auto& state) {
        auto m = quantum::two_step_projection(state, in_a, in_dual, rng);
        r.in_a = m.first;
        r.in_a_perp = m.second;
        r.post_lease.quantum = std::move(m.post_state);
      },
      lease.quantum);
  if (r.in_a && r.in_a_perp) r.output = cp.c_obf.eval(x);
  return r;
}

double run_accept_probability(const Crs& crs, const LeasedState& lease) {
  const auto& cp = lease.classical;
  if (!crs.nizk().verify(crs.nizk_crs(), cp.statement(), cp.proof)) return 0.0;
  const quantum::Predicate in_a = [&cp](const field::FieldVector& v) { return cp.g.eval(v); };
  const quantum::Predicate in_dual = [&cp](const field::FieldVector& v) { return cp.g_perp.eval(v); };
  if (const auto* p = std::get_if<PureState>(&lease.quantum)) return pure_accept_probability(*p, in_a, in_dual);
  return quantum::two_step_accept_branch(std::get<DensityOperator>(lease.quantum), in_a, in_dual).probability;
}

RunResult run_reusable(const Crs& crs, const LeasedState& lease, const BitString& x, Rng& rng) {
  const double p_accept = run_accept_probability(crs, lease);
  auto r = run(crs, lease, x, rng);
  if (!r.proof_ok) return r;
  r.disturbance = trace_distance(lease.quantum, r.post_lease.quantum);
  if (r.output) {
    const double eps = std::max(0.0, 1.0 - p_accept);
    const double bound = (eps < quantum::kZeroProbability ? 0.0 : std::sqrt(eps)) + quantum::kTolerance;
    if (*r.disturbance > bound) {
      throw quantum::GentleBoundViolated("run_reusable: disturbance " + std::to_string(*r.disturbance) +
                                         " exceeds " + std::to_string(bound));
    }
  }
  return r;
}

// ---------------------------------------------------------------- check

bool check(const SecretKey& sk, LeasedState& lease, Rng& rng) {
  bool accepted = false;
  std::visit(
      [&](const auto& state) {
        auto m = quantum::measure_subspace_projector(state, sk.a, rng);
        accepted = m.outcome == 1;
        lease.quantum = std::move(m.post_state);
      },
      lease.quantum);
  return accepted;
}

double check_accept_probability(const SecretKey& sk, const QuantumPart& q) {
  const auto a_state = quantum::subspace_state(sk.a);
  if (const auto* p = std::get_if<PureState>(&q)) return std::norm(a_state.inner(*p));
  return std::get<DensityOperator>(q).expectation(a_state);
}

}  // namespace qlease::ssl
