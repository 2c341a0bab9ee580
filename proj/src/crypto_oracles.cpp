#include "qlease/crypto_oracles.hpp"

#include <algorithm>

#include "qlease/rng.hpp"

namespace qlease::oracles {

namespace {

std::string token_from(std::string_view domain, const Coins& coins) {
  const auto d = Hasher(domain).add(coins).finish();
  return to_hex(std::span<const std::uint8_t>(d.data(), 16));
}

Bytes as_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }
std::string as_string(const Bytes& b) { return std::string(b.begin(), b.end()); }

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(const std::string& hex, const char* what) {
  const auto raw = from_hex(hex);
  if (raw.size() != N) throw HandleError(std::string(what) + ": wrong length");
  std::array<std::uint8_t, N> out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

SymmetricKey payload_key(const Salt& salt, const BitString& lock) {
  return Hasher("qlease/lock-key").add(salt).add_u64(lock.size()).add(lock.bytes()).finish();
}

}  // namespace

std::string to_string(OracleMode mode) { return mode == OracleMode::ideal ? "ideal" : "toy"; }

OracleMode oracle_mode_from_string(const std::string& s) {
  if (s == "ideal") return OracleMode::ideal;
  if (s == "toy") return OracleMode::toy;
  throw std::invalid_argument("unknown oracle mode: " + s);
}

OracleSuite::OracleSuite(OracleMode mode, std::uint64_t seed)
    : mode_(mode), seed_(seed), master_(Hasher("qlease/suite").add(to_string(mode)).add_u64(seed).finish()) {}

Digest lock_digest(const Salt& salt, const BitString& value) {
  return Hasher("qlease/lock").add(salt).add_u64(value.size()).add(value.bytes()).finish();
}

// ---------------------------------------------------------------- shO

bool SubspaceObfHandle::eval(const field::FieldVector& x) const { return subspace_->contains(x); }

nlohmann::json SubspaceObfHandle::to_json() const {
  return {{"kind", "sho"},
          {"token", token_},
          {"q", params_.q},
          {"lambda", params_.lambda},
          {"sealed", to_base64(sealed_)}};
}

SubspaceObfHandle SubspaceObfHandle::from_json(const nlohmann::json& j, const OracleSuite& suite) {
  if (j.at("kind") != "sho") throw HandleError("not a subspace-hiding handle");
  SubspaceObfHandle h;
  h.token_ = j.at("token").get<std::string>();
  h.params_ = field::FieldParams(j.at("q").get<unsigned>(), j.at("lambda").get<unsigned>());
  h.sealed_ = from_base64(j.at("sealed").get<std::string>());
  const auto opened = unseal(suite.key("sho"), h.sealed_);
  if (!opened) throw HandleError("subspace-hiding handle was not issued under this suite");
  auto parsed = field::Subspace::from_json(nlohmann::json::parse(as_string(*opened)));
  if (parsed.subspace.params() != h.params_) throw HandleError("subspace-hiding handle parameters disagree");
  h.subspace_ = std::make_shared<const field::Subspace>(std::move(parsed.subspace));
  return h;
}

SubspaceObfHandle sho_obf(const OracleSuite& suite, const field::Subspace& a, const Coins& coins) {
  const auto lambda = a.params().lambda;
  const auto d = a.dim();
  if (2 * d != lambda && 4 * d != 3 * lambda) {
    throw std::invalid_argument("sho_obf: dimension must be lambda/2 or 3*lambda/4");
  }
  SubspaceObfHandle h;
  h.token_ = token_from("qlease/sho/token", coins);
  h.params_ = a.params();
  h.sealed_ = seal(suite.key("sho"), derive_salt(coins, "sho/nonce"), as_bytes(a.to_json().dump()));
  h.subspace_ = std::make_shared<const field::Subspace>(a);
  return h;
}

SubspaceObfHandle sho_obf(const OracleSuite& suite, const field::Subspace& a, Rng& rng) {
  return sho_obf(suite, a, rng.bytes16());
}

ShoGameResult sho_game(const OracleSuite& suite, const field::Subspace& a, const ShoDistinguisher& adversary,
                       Rng& rng) {
  const auto lambda = a.params().lambda;
  if (2 * a.dim() != lambda || lambda % 4 != 0) throw std::invalid_argument("sho_game: needs dim = lambda/2, 4 | lambda");
  const int b = static_cast<int>(rng.uniform_below(2));
  const auto s = b == 0 ? a : field::random_superspace(a, 3 * lambda / 4, rng);
  const auto h = sho_obf(suite, s, rng);
  return {b, adversary(h, rng)};
}

// ---------------------------------------------------------------- qIHO

BitString InputHidingObfHandle::eval(const BitString& x) const {
  if (x.size() != n_) throw std::invalid_argument("qiho eval: wrong input length");
  if (form_ == "sealed") return program_->eval(x);
  const auto y = inner_->eval(x);
  if (lock_digest(salt_, y) != digest_) return BitString(m_);
  if (sealed_.empty()) return BitString::from_bits("1");
  const auto msg = unseal(payload_key(salt_, y), sealed_);
  if (!msg) return BitString(m_);
  return BitString::from_bytes(*msg, m_);
}

nlohmann::json InputHidingObfHandle::to_json() const {
  nlohmann::json j = {{"kind", "qiho"}, {"form", form_}, {"token", token_}, {"n", n_}, {"m", m_}};
  if (form_ == "cnc") {
    j["inner"] = inner_->to_json();
    j["salt"] = to_hex(salt_);
    j["digest"] = to_hex(digest_);
    if (!sealed_.empty()) j["msg_sealed"] = to_base64(sealed_);
  } else {
    j["sealed"] = to_base64(sealed_);
  }
  return j;
}

InputHidingObfHandle InputHidingObfHandle::from_json(const nlohmann::json& j, const OracleSuite& suite,
                                                     const circuits::ProgramCodec& codec) {
  if (j.at("kind") != "qiho") throw HandleError("not an input-hiding handle");
  InputHidingObfHandle h;
  h.token_ = j.at("token").get<std::string>();
  h.form_ = j.at("form").get<std::string>();
  h.n_ = j.at("n").get<std::size_t>();
  h.m_ = j.at("m").get<std::size_t>();
  if (h.form_ == "cnc") {
    h.inner_ = circuits::BooleanCircuit::from_json(j.at("inner"));
    if (h.inner_->n() != h.n_) throw HandleError("input-hiding handle: n disagrees with the inner circuit");
    h.salt_ = fixed_from_hex<16>(j.at("salt").get<std::string>(), "salt");
    h.digest_ = fixed_from_hex<32>(j.at("digest").get<std::string>(), "digest");
    if (j.contains("msg_sealed")) h.sealed_ = from_base64(j.at("msg_sealed").get<std::string>());
  } else if (h.form_ == "sealed") {
    h.sealed_ = from_base64(j.at("sealed").get<std::string>());
    const auto opened = unseal(suite.key("qiho"), h.sealed_);
    if (!opened) throw HandleError("input-hiding handle was not issued under this suite");
    h.program_ = codec.parse(nlohmann::json::parse(as_string(*opened)));
    if (h.program_->input_bits() != h.n_ || h.program_->output_bits() != h.m_) {
      throw HandleError("input-hiding handle: sealed program has the wrong shape");
    }
  } else {
    throw HandleError("unknown input-hiding handle form: " + h.form_);
  }
  return h;
}

InputHidingObfHandle qiho_obf(const OracleSuite& suite, const circuits::ProgramPtr& program, const Coins& coins) {
  if (!program) throw std::invalid_argument("qiho_obf: null program");
  InputHidingObfHandle h;
  h.token_ = token_from("qlease/qiho/token", coins);
  h.n_ = program->input_bits();
  h.m_ = program->output_bits();
  h.program_ = program;
  if (const auto* c = dynamic_cast<const circuits::CncCircuit*>(program.get())) {
    h.form_ = "cnc";
    h.inner_ = c->inner();
    h.salt_ = derive_salt(coins, "qiho/salt");
    h.digest_ = lock_digest(h.salt_, c->lock());
    if (c->msg()) h.sealed_ = seal(payload_key(h.salt_, c->lock()), derive_salt(coins, "qiho/nonce"), c->msg()->bytes());
  } else {
    h.form_ = "sealed";
    h.sealed_ = seal(suite.key("qiho"), derive_salt(coins, "qiho/nonce"), as_bytes(program->to_json().dump()));
  }
  return h;
}

InputHidingObfHandle qiho_obf(const OracleSuite& suite, const circuits::ProgramPtr& program, Rng& rng) {
  return qiho_obf(suite, program, rng.bytes16());
}

// ---------------------------------------------------------------- LO

std::optional<BitString> LockableObfHandle::eval(const BitString& x) const { return open_payload(inner_.eval(x)); }

std::optional<BitString> LockableObfHandle::open_payload(const BitString& candidate_lock) const {
  if (candidate_lock.size() != inner_.m()) return std::nullopt;
  const auto pt = unseal(payload_key(salt_, candidate_lock), sealed_payload_);
  if (!pt || pt->size() * 8 < beta_bits_) return std::nullopt;
  return BitString::from_bytes(*pt, beta_bits_);
}

nlohmann::json LockableObfHandle::to_json() const {
  return {{"kind", "lo"},
          {"token", token_},
          {"inner", inner_.to_json()},
          {"salt", to_hex(salt_)},
          {"digest", to_hex(digest_)},
          {"beta_bits", beta_bits_},
          {"payload", to_base64(sealed_payload_)}};
}

LockableObfHandle LockableObfHandle::from_json(const nlohmann::json& j) {
  if (j.at("kind") != "lo") throw HandleError("not a lockable-obfuscation handle");
  LockableObfHandle h(circuits::BooleanCircuit::from_json(j.at("inner")));
  h.token_ = j.at("token").get<std::string>();
  h.salt_ = fixed_from_hex<16>(j.at("salt").get<std::string>(), "salt");
  h.digest_ = fixed_from_hex<32>(j.at("digest").get<std::string>(), "digest");
  h.beta_bits_ = j.at("beta_bits").get<std::size_t>();
  h.sealed_payload_ = from_base64(j.at("payload").get<std::string>());
  return h;
}

LockableObfHandle lo_obf(const circuits::BooleanCircuit& c, const BitString& alpha, const BitString& beta,
                         const Coins& coins) {
  if (alpha.size() != c.m()) throw std::invalid_argument("lo_obf: lock length must equal the circuit output length");
  LockableObfHandle h(c);
  h.token_ = token_from("qlease/lo/token", coins);
  h.salt_ = derive_salt(coins, "lo/salt");
  h.digest_ = lock_digest(h.salt_, alpha);
  h.beta_bits_ = beta.size();
  h.sealed_payload_ = seal(payload_key(h.salt_, alpha), derive_salt(coins, "lo/nonce"), beta.bytes());
  return h;
}

LockableObfHandle lo_obf(const circuits::BooleanCircuit& c, const BitString& alpha, const BitString& beta, Rng& rng) {
  return lo_obf(c, alpha, beta, rng.bytes16());
}

// ---------------------------------------------------------------- NIZK

nlohmann::json NizkCrs::to_json() const { return {{"relation", relation_id}, {"token", token}}; }

NizkCrs NizkCrs::from_json(const nlohmann::json& j) {
  return {j.at("relation").get<std::string>(), j.at("token").get<std::string>()};
}

nlohmann::json NizkProof::to_json() const {
  return {{"statement_digest", to_hex(statement_digest)},
          {"witness", to_base64(sealed_witness)},
          {"simulated", simulated},
          {"tag", to_hex(tag)}};
}

NizkProof NizkProof::from_json(const nlohmann::json& j) {
  NizkProof p;
  p.statement_digest = fixed_from_hex<32>(j.at("statement_digest").get<std::string>(), "statement digest");
  p.sealed_witness = from_base64(j.at("witness").get<std::string>());
  p.simulated = j.at("simulated").get<bool>();
  p.tag = fixed_from_hex<32>(j.at("tag").get<std::string>(), "tag");
  return p;
}

Digest statement_digest(const nlohmann::json& statement) {
  return Hasher("qlease/nizk/statement").add(statement.dump()).finish();
}

NizkOracle::NizkOracle(const OracleSuite& suite)
    : mac_key_(suite.key("nizk/mac")), crs_key_(suite.key("nizk/crs")), extraction_master_(suite.key("nizk/extract")) {}

void NizkOracle::register_relation(const std::string& id, Relation relation) {
  std::lock_guard lock(mutex_);
  relations_[id] = std::move(relation);
}

bool NizkOracle::knows(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return relations_.count(id) != 0;
}

Relation NizkOracle::relation(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = relations_.find(id);
  if (it == relations_.end()) throw UnknownRelation("unknown relation: " + id);
  return it->second;
}

bool NizkOracle::check_relation(const std::string& id, const nlohmann::json& statement,
                                const nlohmann::json& witness) const {
  return relation(id)(statement, witness);
}

SymmetricKey NizkOracle::extraction_key(const std::string& relation_id) const {
  return derive_key(extraction_master_, "nizk/td/" + relation_id);
}

NizkCrs NizkOracle::crsgen(const std::string& relation_id) const {
  relation(relation_id);
  const auto d = Hasher("qlease/nizk/crs").add(crs_key_).add(relation_id).finish();
  return {relation_id, to_hex(std::span<const std::uint8_t>(d.data(), 16))};
}

std::pair<NizkCrs, NizkTrapdoor> NizkOracle::fkgen(const std::string& relation_id) const {
  auto crs = crsgen(relation_id);
  return {crs, NizkTrapdoor{relation_id, extraction_key(relation_id)}};
}

Digest NizkOracle::mac(const NizkCrs& crs, const NizkProof& proof) const {
  return Hasher("qlease/nizk/mac")
      .add(mac_key_)
      .add(crs.relation_id)
      .add(crs.token)
      .add(proof.statement_digest)
      .add(proof.sealed_witness)
      .add_u64(proof.simulated ? 1 : 0)
      .finish();
}

NizkProof NizkOracle::issue(const NizkCrs& crs, const nlohmann::json& statement, const nlohmann::json* witness) {
  NizkProof p;
  p.statement_digest = statement_digest(statement);
  p.simulated = witness == nullptr;
  std::uint64_t n;
  {
    std::lock_guard lock(mutex_);
    n = counter_++;
  }
  if (witness) {
    const auto nonce = derive_salt(Hasher("qlease/nizk/nonce").add(p.statement_digest).add_u64(n).finish(), "nonce");
    p.sealed_witness = seal(extraction_key(crs.relation_id), nonce, as_bytes(witness->dump()));
  }
  p.tag = mac(crs, p);
  std::lock_guard lock(mutex_);
  issued_.push_back(p.tag);
  return p;
}

NizkProof NizkOracle::prove(const NizkCrs& crs, const nlohmann::json& statement, const nlohmann::json& witness) {
  if (crsgen(crs.relation_id) != crs) throw std::invalid_argument("prove: reference string not issued by this oracle");
  if (!relation(crs.relation_id)(statement, witness)) throw WitnessRejected("prove: witness does not satisfy the relation");
  return issue(crs, statement, &witness);
}

bool NizkOracle::verify(const NizkCrs& crs, const nlohmann::json& statement, const NizkProof& proof) const {
  if (!knows(crs.relation_id) || crsgen(crs.relation_id) != crs) return false;
  if (proof.statement_digest != statement_digest(statement)) return false;
  return proof.tag == mac(crs, proof);
}

nlohmann::json NizkOracle::extract(const NizkTrapdoor& td, const nlohmann::json& statement,
                                   const NizkProof& proof) const {
  if (td.extraction_key != extraction_key(td.relation_id)) throw ExtractionError("extract: invalid trapdoor");
  if (!verify(crsgen(td.relation_id), statement, proof)) throw ExtractionError("extract: proof does not verify");
  if (proof.simulated) throw ExtractionError("extract: simulated proofs carry no witness");
  const auto opened = unseal(td.extraction_key, proof.sealed_witness);
  if (!opened) throw ExtractionError("extract: witness record is corrupt");
  auto w = nlohmann::json::parse(as_string(*opened));
  if (!check_relation(td.relation_id, statement, w)) throw ExtractionError("extract: witness fails the relation");
  return w;
}

NizkProof NizkOracle::simulate(const NizkTrapdoor& td, const nlohmann::json& statement) {
  if (td.extraction_key != extraction_key(td.relation_id)) throw std::invalid_argument("simulate: invalid trapdoor");
  return issue(crsgen(td.relation_id), statement, nullptr);
}

std::size_t NizkOracle::issued_count() const {
  std::lock_guard lock(mutex_);
  return issued_.size();
}

}  // namespace qlease::oracles
