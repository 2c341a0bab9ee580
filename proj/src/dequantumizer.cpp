#include "qlease/dequantumizer.hpp"

#include <algorithm>

namespace qlease::dequant {

namespace {

std::string short_hex(std::span<const std::uint8_t> bytes) { return to_hex(bytes).substr(0, 16); }

std::string ct_digest(const ToyCiphertext& ct) { return short_hex(sha256(ct.bytes())); }

BitString from_fixed(std::span<const std::uint8_t> bytes) { return BitString::from_bytes(bytes, 8 * bytes.size()); }

template <std::size_t N>
std::array<std::uint8_t, N> to_fixed(const BitString& bits) {
  std::array<std::uint8_t, N> out{};
  const auto& raw = bits.bytes();
  std::copy_n(raw.begin(), N, out.begin());
  return out;
}

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(const std::string& hex) {
  const auto raw = from_hex(hex);
  if (raw.size() != N) throw std::invalid_argument("expected " + std::to_string(N) + " bytes of hex");
  std::array<std::uint8_t, N> out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

BitString random_nonzero(std::size_t n, Rng& rng) {
  for (;;) {
    auto v = BitString::random(n, rng);
    if (!v.is_zero()) return v;
  }
}

}  // namespace

// ---------------------------------------------------------------- toy FHE

PublicKey public_key_of(const SymmetricKey& sk) { return Hasher("qlease/fhe/pk").add(sk).finish(); }

std::size_t ciphertext_bytes(std::size_t plaintext_bits) { return 32 + (plaintext_bits + 7) / 8; }

ToyCiphertext::ToyCiphertext(Bytes sealed, std::size_t bits) : sealed_(std::move(sealed)), bits_(bits) {
  if (sealed_.size() != ciphertext_bytes(bits_)) throw FheError("malformed ciphertext");
}

Bytes ToyCiphertext::nonce() const { return {sealed_.begin(), sealed_.begin() + 16}; }
Bytes ToyCiphertext::payload() const { return {sealed_.begin() + 16, sealed_.end() - 16}; }
Bytes ToyCiphertext::tag() const { return {sealed_.end() - 16, sealed_.end()}; }
BitString ToyCiphertext::to_bits() const { return from_fixed(sealed_); }

ToyCiphertext ToyCiphertext::from_bits(const BitString& bits, std::size_t plaintext_bits) {
  return {bits.bytes(), plaintext_bits};
}

nlohmann::json ToyCiphertext::redacted_json() const {
  return {{"plaintext_bits", bits_},
          {"nonce", to_hex(nonce())},
          {"payload_sha256", to_hex(sha256(payload()))},
          {"tag", to_hex(tag())}};
}

ToyFheKeypair fhe_keygen(Rng& rng) {
  ToyFheKeypair k;
  const auto lo = rng.bytes16();
  const auto hi = rng.bytes16();
  std::copy(lo.begin(), lo.end(), k.sk.begin());
  std::copy(hi.begin(), hi.end(), k.sk.begin() + 16);
  k.pk = public_key_of(k.sk);
  return k;
}

ToyCiphertext fhe_encrypt(const ToyFheKeypair& keys, const BitString& msg, const Salt& seed) {
  return {seal(keys.sk, derive_salt(seed, "fhe/nonce"), msg.bytes()), msg.size()};
}

BitString fhe_decrypt(const SymmetricKey& sk, const ToyCiphertext& ct) {
  const auto pt = unseal(sk, ct.bytes());
  if (!pt) throw FheError("ciphertext tag check failed");
  return BitString::from_bytes(*pt, ct.plaintext_bits());
}

ToyFheKeypair ToyFhe::keygen(Rng& rng) {
  const auto k = fhe_keygen(rng);
  std::lock_guard lock(mutex_);
  keys_[k.pk] = k.sk;
  log_.push_back({"keygen", short_hex(k.pk), ""});
  return k;
}

SymmetricKey ToyFhe::secret_for(const PublicKey& pk) const {
  const auto it = keys_.find(pk);
  if (it == keys_.end()) throw FheError("unknown public key");
  return it->second;
}

void ToyFhe::log(std::string op, const PublicKey& pk, const ToyCiphertext* ct) {
  log_.push_back({std::move(op), short_hex(pk), ct ? ct_digest(*ct) : ""});
}

ToyCiphertext ToyFhe::encrypt(const PublicKey& pk, const BitString& msg, const Salt& seed) {
  std::lock_guard lock(mutex_);
  log("encrypt", pk, nullptr);
  return fhe_encrypt({pk, secret_for(pk)}, msg, seed);
}

ToyCiphertext ToyFhe::eval(const PublicKey& pk, const Evaluator& evaluator, const ToyCiphertext& ct) {
  std::lock_guard lock(mutex_);
  log("eval", pk, &ct);
  const auto sk = secret_for(pk);
  const auto y = evaluator(fhe_decrypt(sk, ct));
  Bytes seed = ct.bytes();
  seed.insert(seed.end(), y.bytes().begin(), y.bytes().end());
  return {seal(sk, derive_salt(seed, "fhe/eval"), y.bytes()), y.size()};
}

std::vector<FheAccess> ToyFhe::access_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::shared_ptr<const oracles::LockableObfHandle> LoDirectory::publish(oracles::LockableObfHandle handle) {
  auto h = std::make_shared<const oracles::LockableObfHandle>(std::move(handle));
  std::lock_guard lock(mutex_);
  handles_[h->token()] = h;
  return h;
}

std::shared_ptr<const oracles::LockableObfHandle> LoDirectory::resolve(const std::string& token) const {
  std::lock_guard lock(mutex_);
  const auto it = handles_.find(token);
  return it == handles_.end() ? nullptr : it->second;
}

// ---------------------------------------------------------------- the family

std::size_t family_output_bits(std::size_t lambda_bits) {
  return 8 * (ciphertext_bytes(lambda_bits) + kTokenBytes + 32);
}

DequantumizableCircuit::DequantumizableCircuit(const FamilyServices& services, BitString a, BitString b, Salt r,
                                               PublicKey pk, std::shared_ptr<const oracles::LockableObfHandle> lo)
    : a_(std::move(a)),
      b_(std::move(b)),
      r_(r),
      pk_(pk),
      lo_(std::move(lo)),
      m_(family_output_bits(a_.size())),
      ct1_(services.fhe->encrypt(pk_, a_, r_)) {
  if (a_.size() != b_.size()) throw std::invalid_argument("family: |a| must equal |b|");
  if (!lo_) throw std::invalid_argument("family: missing lockable-obfuscation handle");
  const auto token = from_hex(lo_->token());
  if (token.size() != kTokenBytes) throw std::invalid_argument("family: unexpected token length");
  zero_branch_ = ct1_.to_bits().concat(from_fixed(token)).concat(from_fixed(pk_));
}

BitString DequantumizableCircuit::eval(const BitString& x) const {
  if (x.size() != a_.size()) throw std::invalid_argument("family eval: expected " + std::to_string(a_.size()) + " bits");
  if (x.is_zero()) return zero_branch_;
  if (x == a_) return b_.resized(m_);
  return BitString::zeros(m_);
}

nlohmann::json DequantumizableCircuit::to_json() const {
  return {{"kind", kFamilyKind}, {"lambda_bits", a_.size()}, {"a", a_.to_hex()}, {"b", b_.to_hex()},
          {"r", to_hex(r_)},     {"pk", to_hex(pk_)},         {"lo", lo_->token()}};
}

bool operator==(const DequantumizableCircuit& x, const DequantumizableCircuit& y) {
  return x.a_ == y.a_ && x.b_ == y.b_ && x.r_ == y.r_ && x.pk_ == y.pk_ && x.lo_->token() == y.lo_->token() &&
         x.m_ == y.m_;
}

std::shared_ptr<const DequantumizableCircuit> sample_family(const FamilyServices& services, std::size_t lambda_bits,
                                                            Rng& rng) {
  if (lambda_bits == 0) throw std::invalid_argument("sample_family: lambda_bits must be positive");
  const auto keys = services.fhe->keygen(rng);
  auto a = random_nonzero(lambda_bits, rng);
  auto b = random_nonzero(lambda_bits, rng);
  const Salt r = rng.bytes16();
  const auto m = family_output_bits(lambda_bits);
  const auto lock = BitString::from_bits("1").concat(b.resized(m));
  const auto beta = from_fixed(keys.sk).concat(from_fixed(r));
  auto lo = services.directory->publish(oracles::lo_obf(circuits::BooleanCircuit::fhe_decrypt(keys.sk, m), lock, beta, rng));
  return std::make_shared<const DequantumizableCircuit>(services, std::move(a), std::move(b), r, keys.pk, std::move(lo));
}

void register_family(circuits::ProgramCodec& codec, const FamilyServices& services) {
  codec.add(kFamilyKind, [services](const nlohmann::json& j) -> circuits::ProgramPtr {
    const auto n = j.at("lambda_bits").get<std::size_t>();
    auto lo = services.directory->resolve(j.at("lo").get<std::string>());
    if (!lo) throw std::invalid_argument("family: unknown lockable-obfuscation token");
    return std::make_shared<const DequantumizableCircuit>(
        services, BitString::from_hex(j.at("a").get<std::string>(), n),
        BitString::from_hex(j.at("b").get<std::string>(), n), fixed_from_hex<16>(j.at("r").get<std::string>()),
        fixed_from_hex<32>(j.at("pk").get<std::string>()), std::move(lo));
  });
}

// ---------------------------------------------------------------- implementations

QuantumImplementation QuantumImplementation::plain(circuits::ProgramPtr program, double eps, std::uint64_t seed,
                                                   std::optional<BitString> noisy_point) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("implementation: eps must lie in [0, 1]");
  QuantumImplementation impl;
  impl.program_ = std::move(program);
  impl.eps_ = eps;
  impl.noisy_point_ = std::move(noisy_point);
  impl.rng_ = Rng(seed, 0x696d706c);
  return impl;
}

QuantumImplementation QuantumImplementation::lease_backed(ssl::CrsPtr crs, ssl::LeasedState lease,
                                                          std::uint64_t seed) {
  QuantumImplementation impl;
  impl.crs_ = std::move(crs);
  impl.initial_state_ = lease.quantum;
  impl.lease_ = std::move(lease);
  impl.rng_ = Rng(seed, 0x696d706c);
  return impl;
}

std::size_t QuantumImplementation::input_bits() const {
  return program_ ? program_->input_bits() : lease_->classical.c_obf.input_bits();
}

std::optional<BitString> QuantumImplementation::evaluate(const BitString& x) {
  if (program_) {
    auto y = program_->eval(x);
    if (eps_ > 0.0 && (!noisy_point_ || *noisy_point_ == x) && rng_.bernoulli(eps_) && y.size() > 0) {
      y.set(0, !y.get(0));
    }
    return y;
  }
  auto r = ssl::run(*crs_, *lease_, x, rng_);
  lease_ = std::move(r.post_lease);
  return r.output;
}

std::optional<BitString> QuantumImplementation::query(const BitString& x) {
  log_.push_back({"clear", x.to_hex()});
  return evaluate(x);
}

ToyCiphertext QuantumImplementation::homomorphic_eval(ToyFhe& fhe, const PublicKey& pk, const ToyCiphertext& ct) {
  log_.push_back({"homomorphic", ct_digest(ct)});
  const auto out_bits = program_ ? program_->output_bits() : lease_->classical.c_obf.output_bits();
  return fhe.eval(pk, [&](const BitString& x) { return evaluate(x).value_or(BitString::zeros(out_bits)); }, ct);
}

bool QuantumImplementation::state_intact() const {
  if (!lease_) return true;
  return ssl::trace_distance(*initial_state_, lease_->quantum) <= 1e-9;
}

// ---------------------------------------------------------------- attack

ExtractionResult attack_extract(QuantumImplementation& impl, const FamilyServices& services) {
  const auto n = impl.input_bits();
  const auto m = family_output_bits(n);
  const auto ct_bits = 8 * ciphertext_bytes(n);
  nlohmann::json trace{{"input_bits", n}, {"output_bits", m}};
  auto& queries = trace["queries"] = nlohmann::json::array();

  // (1) the only clear query
  const auto zero = BitString::zeros(n);
  queries.push_back({{"channel", "clear"}, {"input", zero.to_hex()}});
  const auto y = impl.query(zero);
  if (!y) throw ExtractionFailure("implementation rejected the all-zero query");
  if (y->size() != m) throw ExtractionFailure("all-zero output does not have the family layout");
  const auto ct1 = ToyCiphertext::from_bits(y->slice(0, ct_bits), n);
  const auto token = to_hex(y->slice(ct_bits, 8 * kTokenBytes).bytes());
  const auto pk = to_fixed<32>(y->slice(ct_bits + 8 * kTokenBytes, 256));
  trace["ct1"] = ct1.redacted_json();
  trace["lo_token"] = token;
  trace["pk"] = to_hex(pk);
  const auto lo = services.directory->resolve(token);
  if (!lo) throw ExtractionFailure("all-zero output names no published lockable-obfuscation handle");

  // (2) homomorphic evaluation on ct1
  queries.push_back({{"channel", "homomorphic"}, {"ciphertext", ct_digest(ct1)}});
  std::optional<ToyCiphertext> ct2;
  try {
    ct2 = impl.homomorphic_eval(*services.fhe, pk, ct1);
  } catch (const FheError& e) {
    throw ExtractionFailure(std::string("homomorphic evaluation failed: ") + e.what());
  }
  trace["ct2"] = ct2->redacted_json();

  // (3) open the lock with ct2
  const auto payload = lo->eval(ct2->to_bits());
  if (!payload || payload->size() != kPayloadBits) throw ExtractionFailure("lock miss: ct2 does not decrypt to b");
  const auto sk = to_fixed<32>(payload->slice(0, 256));
  const auto r = to_fixed<16>(payload->slice(256, 128));
  if (public_key_of(sk) != pk) throw ExtractionFailure("recovered key does not match pk");

  // (4) decrypt, (5) rebuild
  const auto a = fhe_decrypt(sk, ct1);
  const auto b = fhe_decrypt(sk, *ct2).slice(0, n);
  ExtractionResult result;
  result.reconstructed = std::make_shared<const DequantumizableCircuit>(services, a, b, r, pk, lo);
  result.recovered_state_ok = impl.state_intact();
  trace["extraction"] = "ok";
  trace["recovered_state_ok"] = result.recovered_state_ok;
  result.trace = std::move(trace);
  return result;
}

PirateResult ssl_breaking_pirate(const ssl::CrsPtr& crs, const ssl::LeasedState& lease,
                                 const FamilyServices& services, Rng& rng) {
  auto impl = QuantumImplementation::lease_backed(crs, lease, rng.next_u64());
  auto extraction = attack_extract(impl, services);
  auto own = ssl::gen(*crs, rng);
  auto fresh = ssl::lessor(*crs, own, extraction.reconstructed, rng);
  return {*impl.lease(), std::move(fresh), std::move(own), std::move(extraction)};
}

LearnerResult oracle_learner_baseline(const circuits::Evaluator& oracle, std::size_t n, std::uint64_t budget, Rng& rng,
                                      const std::vector<BitString>& planted) {
  auto table = std::make_shared<std::map<BitString, BitString>>();
  LearnerResult result;
  const std::uint64_t cap = n < 64 ? std::min<std::uint64_t>(budget, std::uint64_t{1} << n) : budget;
  const auto ask = [&](const BitString& x) {
    if (result.queries >= cap || table->count(x)) return;
    (*table)[x] = oracle(x);
    ++result.queries;
  };
  ask(BitString::zeros(n));
  for (const auto& p : planted) ask(p);
  while (result.queries < cap) ask(BitString::random(n, rng));

  std::size_t m = 0;
  for (const auto& [x, y] : *table) {
    m = y.size();
    if (!x.is_zero() && !y.is_zero()) result.found_a = x;
  }
  result.success = result.found_a.has_value();
  result.attempt = [table, m](const BitString& x) {
    const auto it = table->find(x);
    return it == table->end() ? BitString::zeros(m) : it->second;
  };
  return result;
}

}  // namespace qlease::dequant
