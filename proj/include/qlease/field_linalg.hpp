#ifndef QLEASE_FIELD_LINALG_HPP
#define QLEASE_FIELD_LINALG_HPP

// Exact linear algebra over small prime fields Z_q.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

namespace qlease {
class Rng;
}

namespace qlease::field {

using Residue = std::uint32_t;

// Ambient space Z_q^lambda. Only the primes 2, 3, 5 and 7 are accepted.
struct FieldParams {
  unsigned q = 2;
  unsigned lambda = 1;

  FieldParams() = default;
  FieldParams(unsigned q_, unsigned lambda_);

  // q^lambda, or nullopt if it does not fit in 64 bits.
  std::optional<std::uint64_t> space_size() const;

  friend bool operator==(const FieldParams&, const FieldParams&) = default;
};

bool is_supported_prime(unsigned q);

Residue mod_add(Residue a, Residue b, unsigned q);
Residue mod_sub(Residue a, Residue b, unsigned q);
Residue mod_mul(Residue a, Residue b, unsigned q);
Residue mod_inv(Residue a, unsigned q);

class FieldVector {
 public:
  FieldVector(FieldParams params, std::vector<Residue> coords);
  static FieldVector zero(FieldParams params);
  // Lexicographic indexing: coordinate 0 is the most significant digit.
  static FieldVector from_index(FieldParams params, std::uint64_t index);
  static FieldVector random(FieldParams params, Rng& rng);

  const FieldParams& params() const { return params_; }
  std::size_t size() const { return coords_.size(); }
  Residue operator[](std::size_t i) const { return coords_[i]; }
  std::span<const Residue> coords() const { return coords_; }
  std::uint64_t index() const;
  bool is_zero() const;

  FieldVector operator+(const FieldVector& other) const;
  FieldVector operator-(const FieldVector& other) const;
  FieldVector scaled(Residue c) const;
  Residue dot(const FieldVector& other) const;

  friend bool operator==(const FieldVector&, const FieldVector&) = default;

 private:
  FieldParams params_;
  std::vector<Residue> coords_;
};

// Dense row-major matrix over Z_q.
class Matrix {
 public:
  Matrix(unsigned q, std::size_t rows, std::size_t cols);
  Matrix(unsigned q, const std::vector<std::vector<Residue>>& rows, std::size_t cols);
  static Matrix identity(unsigned q, std::size_t n);
  static Matrix random(unsigned q, std::size_t rows, std::size_t cols, Rng& rng);

  unsigned q() const { return q_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Residue& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Residue at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::vector<Residue> row(std::size_t r) const;
  std::vector<std::vector<Residue>> to_rows() const;

  std::vector<Residue> apply(std::span<const Residue> x) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  unsigned q_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Residue> data_;
};

struct RrefResult {
  Matrix matrix;  // RREF with zero rows removed
  std::size_t rank;
  std::vector<std::size_t> pivots;
};

// Reduced row echelon form; row space is preserved.
RrefResult rref(const Matrix& m);
bool is_rref(const Matrix& m);

// Solves M x = alpha; nullopt when the system is inconsistent. Free
// variables are set to zero.
std::optional<std::vector<Residue>> solve_affine(const Matrix& m, std::span<const Residue> alpha);
std::optional<FieldVector> solve_affine(const Matrix& m, const FieldVector& alpha, FieldParams solution_space);

// Linear subspace of Z_q^lambda held by its canonical (RREF) basis.
class Subspace {
 public:
  // Canonicalises an arbitrary generating set (rows of `generators`).
  static Subspace span(FieldParams params, const Matrix& generators);
  static Subspace span(FieldParams params, const std::vector<FieldVector>& generators);
  static Subspace zero(FieldParams params);
  static Subspace full(FieldParams params);

  const FieldParams& params() const { return params_; }
  std::size_t dim() const { return basis_.rows(); }
  const Matrix& basis() const { return basis_; }
  std::vector<FieldVector> basis_vectors() const;

  bool contains(const FieldVector& v) const;
  // Dual under the standard bilinear form <v, a> = sum v_i a_i.
  Subspace dual() const;
  // All q^dim elements, in the order of their coefficient vectors.
  std::vector<FieldVector> elements() const;
  // Element for coefficient index c in [0, q^dim).
  FieldVector element(std::uint64_t coefficient_index) const;
  bool is_subspace_of(const Subspace& other) const;

  nlohmann::json to_json() const;
  struct Parsed;
  static Parsed from_json(const nlohmann::json& j);

  friend bool operator==(const Subspace&, const Subspace&) = default;

 private:
  Subspace(FieldParams params, Matrix basis, std::vector<std::size_t> pivots);

  FieldParams params_;
  Matrix basis_;
  std::vector<std::size_t> pivots_;
};

struct Subspace::Parsed {
  Subspace subspace;
  // Set when the stored basis was not already in canonical RREF.
  bool recanonicalised;
};

// Uniform over subspaces of the given dimension: random dim x lambda
// matrices are resampled until full rank, then canonicalised.
Subspace random_subspace(FieldParams params, std::size_t dim, Rng& rng);
// Uniform over dim-dimensional subspaces containing `inner`.
Subspace random_superspace(const Subspace& inner, std::size_t dim, Rng& rng);

// Number of dim-dimensional subspaces of Z_q^lambda (Gaussian binomial).
std::uint64_t gaussian_binomial(unsigned q, std::size_t lambda, std::size_t dim);

}  // namespace qlease::field

#endif  // QLEASE_FIELD_LINALG_HPP
