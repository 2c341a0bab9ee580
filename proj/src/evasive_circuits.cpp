#include "qlease/evasive_circuits.hpp"

#include <algorithm>
#include <numeric>

#include "qlease/rng.hpp"

namespace qlease::circuits {

namespace {

constexpr std::uint64_t kCipherStream = 0x70726d;  // "prm"

std::uint64_t checked_table_size(std::size_t n) {
  if (n > kTruthTableMaxInputs) throw std::invalid_argument("truth tables are limited to 16 inputs");
  return std::uint64_t{1} << n;
}

std::size_t ciphertext_bits(std::size_t plaintext_bits) { return 8 * (32 + (plaintext_bits + 7) / 8); }

template <class... F>
struct Overloaded : F... {
  using F::operator()...;
};
template <class... F>
Overloaded(F...) -> Overloaded<F...>;

}  // namespace

// ---------------------------------------------------------------- digits

std::size_t digit_width(unsigned q) {
  std::size_t w = 0;
  while ((1u << w) < q) ++w;
  return std::max<std::size_t>(w, 1);
}

BitString encode_digits(std::span<const field::Residue> digits, unsigned q) {
  const auto w = digit_width(q);
  BitString out(digits.size() * w);
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (digits[i] >= q) throw std::invalid_argument("encode_digits: digit out of range");
    for (std::size_t b = 0; b < w; ++b) out.set(i * w + b, (digits[i] >> (w - 1 - b)) & 1u);
  }
  return out;
}

std::vector<field::Residue> decode_digits(const BitString& bits, unsigned q) {
  const auto w = digit_width(q);
  if (bits.size() % w != 0) throw std::invalid_argument("decode_digits: length is not a multiple of the digit width");
  std::vector<field::Residue> out(bits.size() / w);
  for (std::size_t i = 0; i < out.size(); ++i) {
    field::Residue v = 0;
    for (std::size_t b = 0; b < w; ++b) v = (v << 1) | (bits.get(i * w + b) ? 1u : 0u);
    out[i] = v % q;
  }
  return out;
}

bool is_canonical_encoding(const BitString& bits, unsigned q) {
  const auto w = digit_width(q);
  if (bits.size() % w != 0) return false;
  for (std::size_t i = 0; i < bits.size() / w; ++i) {
    field::Residue v = 0;
    for (std::size_t b = 0; b < w; ++b) v = (v << 1) | (bits.get(i * w + b) ? 1u : 0u);
    if (v >= q) return false;
  }
  return true;
}

// ---------------------------------------------------------------- BooleanCircuit

BooleanCircuit BooleanCircuit::identity(std::size_t n) { return BooleanCircuit(IdentityBody{n}, n, n); }

BooleanCircuit BooleanCircuit::projection(std::size_t n, std::vector<std::size_t> support) {
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  if (!support.empty() && support.back() >= n) throw std::invalid_argument("projection: support index out of range");
  return BooleanCircuit(ProjectionBody{n, std::move(support)}, n, n);
}

BooleanCircuit BooleanCircuit::affine(field::Matrix matrix) {
  const auto w = digit_width(matrix.q());
  const std::size_t n = matrix.cols() * w;
  const std::size_t m = matrix.rows() * w;
  return BooleanCircuit(AffineBody{std::move(matrix)}, n, m);
}

BooleanCircuit BooleanCircuit::truth_table(std::size_t n, std::size_t m, std::vector<BitString> table) {
  if (table.size() != checked_table_size(n)) throw std::invalid_argument("truth_table: wrong number of rows");
  for (const auto& row : table) {
    if (row.size() != m) throw std::invalid_argument("truth_table: row has wrong width");
  }
  auto shared = std::make_shared<const std::vector<BitString>>(std::move(table));
  return BooleanCircuit(TruthTableBody{n, m, std::move(shared)}, n, m);
}

BooleanCircuit BooleanCircuit::fhe_decrypt(const SymmetricKey& key, std::size_t plaintext_bits) {
  return BooleanCircuit(FheDecryptBody{key, plaintext_bits}, ciphertext_bits(plaintext_bits), plaintext_bits + 1);
}

BitString BooleanCircuit::eval(const BitString& x) const {
  if (x.size() != n_) {
    throw std::invalid_argument("eval: expected " + std::to_string(n_) + " input bits, got " + std::to_string(x.size()));
  }
  return std::visit(
      Overloaded{
          [&](const IdentityBody&) { return x; },
          [&](const ProjectionBody& p) {
            BitString y(n_);
            for (auto i : p.support) y.set(i, x.get(i));
            return y;
          },
          [&](const AffineBody& a) {
            const auto digits = decode_digits(x, a.matrix.q());
            return encode_digits(a.matrix.apply(digits), a.matrix.q());
          },
          [&](const TruthTableBody& t) { return (*t.table)[x.to_uint()]; },
          [&](const FheDecryptBody& f) {
            const auto pt = unseal(f.key, x.bytes());
            if (!pt || pt->size() * 8 < f.plaintext_bits) return BitString(m_);
            const auto bits = BitString::from_bytes(*pt, f.plaintext_bits);
            if (bits.bytes() != *pt) return BitString(m_);  // nonzero padding
            return BitString::from_bits("1").concat(bits);
          },
      },
      body_);
}

nlohmann::json BooleanCircuit::to_json() const {
  return std::visit(
      Overloaded{
          [&](const IdentityBody&) { return nlohmann::json{{"type", "identity"}, {"n", n_}}; },
          [&](const ProjectionBody& p) {
            return nlohmann::json{{"type", "projection"}, {"n", n_}, {"support", p.support}};
          },
          [&](const AffineBody& a) {
            return nlohmann::json{{"type", "affine"}, {"q", a.matrix.q()}, {"cols", a.matrix.cols()},
                                  {"matrix", a.matrix.to_rows()}};
          },
          [&](const TruthTableBody& t) {
            std::vector<std::string> rows;
            rows.reserve(t.table->size());
            for (const auto& r : *t.table) rows.push_back(r.to_hex());
            return nlohmann::json{{"type", "truth_table"}, {"n", t.n}, {"m", t.m}, {"table", rows}};
          },
          [&](const FheDecryptBody& f) {
            return nlohmann::json{{"type", "fhe_decrypt"}, {"key", to_hex(f.key)}, {"plaintext_bits", f.plaintext_bits}};
          },
      },
      body_);
}

BooleanCircuit BooleanCircuit::from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "identity") return identity(j.at("n").get<std::size_t>());
  if (type == "projection") {
    return projection(j.at("n").get<std::size_t>(), j.at("support").get<std::vector<std::size_t>>());
  }
  if (type == "affine") {
    const auto q = j.at("q").get<unsigned>();
    const auto rows = j.at("matrix").get<std::vector<std::vector<field::Residue>>>();
    return affine(field::Matrix(q, rows, j.at("cols").get<std::size_t>()));
  }
  if (type == "truth_table") {
    const auto n = j.at("n").get<std::size_t>();
    const auto m = j.at("m").get<std::size_t>();
    std::vector<BitString> table;
    for (const auto& r : j.at("table")) table.push_back(BitString::from_hex(r.get<std::string>(), m));
    return truth_table(n, m, std::move(table));
  }
  if (type == "fhe_decrypt") {
    const auto raw = from_hex(j.at("key").get<std::string>());
    if (raw.size() != 32) throw std::invalid_argument("fhe_decrypt: key must be 32 bytes");
    SymmetricKey key{};
    std::copy(raw.begin(), raw.end(), key.begin());
    return fhe_decrypt(key, j.at("plaintext_bits").get<std::size_t>());
  }
  throw std::invalid_argument("unknown circuit type: " + type);
}

// ---------------------------------------------------------------- search kinds

std::string to_string(SearchKind kind) {
  switch (kind) {
    case SearchKind::point: return "point";
    case SearchKind::wildcard: return "wildcard";
    case SearchKind::affine: return "affine";
    case SearchKind::plaintext_eq: return "plaintext_eq";
    case SearchKind::custom: return "custom";
  }
  return "custom";
}

SearchKind search_kind_from_string(const std::string& s) {
  for (auto k : {SearchKind::point, SearchKind::wildcard, SearchKind::affine, SearchKind::plaintext_eq,
                 SearchKind::custom}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown circuit kind: " + s);
}

// ---------------------------------------------------------------- toy cipher

std::vector<std::uint32_t> toy_cipher_table(std::size_t n, std::uint64_t key) {
  const auto size = checked_table_size(n);
  std::vector<std::uint32_t> perm(size);
  std::iota(perm.begin(), perm.end(), 0u);
  Rng rng(key, kCipherStream);
  for (std::uint64_t i = size; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_below(i)]);
  return perm;
}

BitString toy_encrypt(std::size_t n, std::uint64_t key, const BitString& plaintext) {
  if (plaintext.size() != n) throw std::invalid_argument("toy_encrypt: wrong plaintext length");
  return BitString::from_uint(toy_cipher_table(n, key)[plaintext.to_uint()], n);
}

// ---------------------------------------------------------------- CncCircuit

CncCircuit::CncCircuit(BooleanCircuit inner, BitString lock, std::optional<BitString> msg, SearchTag tag)
    : inner_(std::move(inner)), lock_(std::move(lock)), msg_(std::move(msg)), tag_(tag) {
  if (lock_.size() != inner_.m()) throw std::invalid_argument("lock length must equal the inner output length");
  if (msg_ && msg_->size() == 0) throw std::invalid_argument("message must be nonempty");
  const auto& body = inner_.body();
  bool consistent = true;
  switch (tag_.kind) {
    case SearchKind::point: consistent = std::holds_alternative<IdentityBody>(body); break;
    case SearchKind::wildcard: consistent = std::holds_alternative<ProjectionBody>(body); break;
    case SearchKind::affine: consistent = std::holds_alternative<AffineBody>(body); break;
    case SearchKind::plaintext_eq:
      consistent = std::holds_alternative<TruthTableBody>(body) && tag_.cipher_key.has_value() &&
                   inner_.n() == inner_.m();
      break;
    case SearchKind::custom: break;
  }
  if (!consistent) throw std::invalid_argument("search tag does not match the inner circuit");
}

CncCircuit CncCircuit::point(const BitString& lock) {
  return CncCircuit(BooleanCircuit::identity(lock.size()), lock, std::nullopt, {SearchKind::point, std::nullopt});
}

CncCircuit CncCircuit::wildcard(std::size_t n, std::vector<std::size_t> support, const BitString& lock) {
  return CncCircuit(BooleanCircuit::projection(n, std::move(support)), lock, std::nullopt,
                    {SearchKind::wildcard, std::nullopt});
}

CncCircuit CncCircuit::affine(const field::Matrix& matrix, std::span<const field::Residue> target) {
  if (target.size() != matrix.rows()) throw std::invalid_argument("affine: target length must equal the row count");
  return CncCircuit(BooleanCircuit::affine(matrix), encode_digits(target, matrix.q()), std::nullopt,
                    {SearchKind::affine, std::nullopt});
}

CncCircuit CncCircuit::plaintext_equality(std::size_t n, std::uint64_t key, const BitString& plaintext) {
  const auto perm = toy_cipher_table(n, key);
  std::vector<BitString> table(perm.size());
  for (std::size_t p = 0; p < perm.size(); ++p) table[perm[p]] = BitString::from_uint(p, n);
  return CncCircuit(BooleanCircuit::truth_table(n, n, std::move(table)), plaintext, std::nullopt,
                    {SearchKind::plaintext_eq, key});
}

CncCircuit CncCircuit::with_message(BitString msg) const { return CncCircuit(inner_, lock_, std::move(msg), tag_); }

BitString CncCircuit::eval(const BitString& x) const {
  const bool match = inner_.eval(x) == lock_;
  if (msg_) return match ? *msg_ : BitString(msg_->size());
  return BitString::from_bits(match ? "1" : "0");
}

BitString CncCircuit::search() const {
  BitString x;
  switch (tag_.kind) {
    case SearchKind::point: x = lock_; break;
    case SearchKind::wildcard: {
      const auto& p = std::get<ProjectionBody>(inner_.body());
      BitString masked(lock_.size());
      for (auto i : p.support) masked.set(i, lock_.get(i));
      if (masked != lock_) throw Unsatisfiable("wildcard: lock is nonzero outside the support");
      x = lock_;
      break;
    }
    case SearchKind::affine: {
      const auto& m = std::get<AffineBody>(inner_.body()).matrix;
      if (!is_canonical_encoding(lock_, m.q())) throw Unsatisfiable("affine: lock is not a vector over Z_q");
      const auto sol = field::solve_affine(m, decode_digits(lock_, m.q()));
      if (!sol) throw Unsatisfiable("affine: system is inconsistent");
      x = encode_digits(*sol, m.q());
      break;
    }
    case SearchKind::plaintext_eq: x = toy_encrypt(inner_.n(), *tag_.cipher_key, lock_); break;
    case SearchKind::custom: throw UnsupportedSearch("no search algorithm for custom circuits");
  }
  if (msg_ && msg_->is_zero()) throw Unsatisfiable("message is all zeros; no input has a nonzero output");
  return x;
}

nlohmann::json CncCircuit::to_json() const {
  nlohmann::json j = {{"kind", kind()},
                      {"n", input_bits()},
                      {"m", output_bits()},
                      {"lock", lock_.to_hex()},
                      {"inner", inner_.to_json()}};
  if (msg_) j["msg"] = msg_->to_hex();
  if (tag_.cipher_key) j["cipher_key"] = *tag_.cipher_key;
  return j;
}

CncCircuit CncCircuit::from_json(const nlohmann::json& j) {
  auto inner = BooleanCircuit::from_json(j.at("inner"));
  if (j.contains("n") && j.at("n").get<std::size_t>() != inner.n()) {
    throw std::invalid_argument("circuit json: n does not match the inner circuit");
  }
  auto lock = BitString::from_hex(j.at("lock").get<std::string>(), inner.m());
  std::optional<BitString> msg;
  if (j.contains("msg")) msg = BitString::from_hex(j.at("msg").get<std::string>(), j.at("m").get<std::size_t>());
  SearchTag tag{search_kind_from_string(j.at("kind").get<std::string>()), std::nullopt};
  if (j.contains("cipher_key")) tag.cipher_key = j.at("cipher_key").get<std::uint64_t>();
  return CncCircuit(std::move(inner), std::move(lock), std::move(msg), tag);
}

// ---------------------------------------------------------------- sampling

namespace {

CircuitSample sample_with_label(std::size_t n, std::size_t m, Rng& rng, std::optional<InnerKind> inner,
                                std::string label) {
  const auto kind = inner.value_or(n == m ? InnerKind::identity : InnerKind::random_table);
  if (kind == InnerKind::identity && n != m) throw std::invalid_argument("identity inner circuit needs n == m");
  BooleanCircuit c = BooleanCircuit::identity(n);
  if (kind == InnerKind::random_table) {
    std::vector<BitString> table(checked_table_size(n));
    for (auto& row : table) row = BitString::random(m, rng);
    c = BooleanCircuit::truth_table(n, m, std::move(table));
  }
  auto lock = BitString::random(m, rng);
  const auto aux16 = rng.bytes16();
  const SearchTag tag{kind == InnerKind::identity ? SearchKind::point : SearchKind::custom, std::nullopt};
  return CircuitSample{CncCircuit(std::move(c), std::move(lock), std::nullopt, tag), Bytes(aux16.begin(), aux16.end()),
                       static_cast<double>(m), std::move(label)};
}

}  // namespace

CircuitSample sample_unpredictable(std::size_t n, std::size_t m, Rng& rng, std::optional<InnerKind> inner) {
  return sample_with_label(n, m, rng, inner, "unpredictable");
}

CircuitSample sample_pseudo_entropic(std::size_t n, std::size_t m, Rng& rng, std::optional<InnerKind> inner) {
  return sample_with_label(n, m, rng, inner, "pseudo-entropic");
}

CncCircuit random_point(std::size_t n, Rng& rng) { return CncCircuit::point(BitString::random(n, rng)); }

CncCircuit random_wildcard(std::size_t n, Rng& rng) {
  std::vector<std::size_t> support;
  BitString lock(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.next_u32() & 1u) {
      support.push_back(i);
      lock.set(i, rng.next_u32() & 1u);
    }
  }
  return CncCircuit::wildcard(n, std::move(support), lock);
}

CncCircuit random_affine(unsigned q, std::size_t rows, std::size_t cols, Rng& rng) {
  const auto m = field::Matrix::random(q, rows, cols, rng);
  std::vector<field::Residue> x0(cols);
  for (auto& c : x0) c = static_cast<field::Residue>(rng.uniform_below(q));
  const auto target = m.apply(x0);
  return CncCircuit::affine(m, target);
}

// ---------------------------------------------------------------- equality, codec

bool is_functionally_equal(const Evaluator& a, const Evaluator& b, std::size_t n) {
  if (n > kExhaustiveMaxInputs) throw std::invalid_argument("is_functionally_equal: at most 20 input bits");
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) {
    const auto x = BitString::from_uint(v, n);
    if (a(x) != b(x)) return false;
  }
  return true;
}

bool is_functionally_equal(const Program& a, const Program& b) {
  if (a.input_bits() != b.input_bits() || a.output_bits() != b.output_bits()) return false;
  return is_functionally_equal([&](const BitString& x) { return a.eval(x); },
                               [&](const BitString& x) { return b.eval(x); }, a.input_bits());
}

ProgramCodec ProgramCodec::with_circuit_kinds() {
  ProgramCodec codec;
  for (auto k : {SearchKind::point, SearchKind::wildcard, SearchKind::affine, SearchKind::plaintext_eq,
                 SearchKind::custom}) {
    codec.add(to_string(k), [](const nlohmann::json& j) -> ProgramPtr {
      return std::make_shared<CncCircuit>(CncCircuit::from_json(j));
    });
  }
  return codec;
}

void ProgramCodec::add(const std::string& kind, Parser parser) { parsers_[kind] = std::move(parser); }

ProgramPtr ProgramCodec::parse(const nlohmann::json& j) const {
  const auto kind = j.at("kind").get<std::string>();
  const auto it = parsers_.find(kind);
  if (it == parsers_.end()) throw std::invalid_argument("no parser registered for program kind: " + kind);
  return it->second(j);
}

}  // namespace qlease::circuits
