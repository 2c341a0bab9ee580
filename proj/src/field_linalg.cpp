#include "qlease/field_linalg.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "qlease/rng.hpp"

namespace qlease::field {

bool is_supported_prime(unsigned q) { return q == 2 || q == 3 || q == 5 || q == 7; }

FieldParams::FieldParams(unsigned q_, unsigned lambda_) : q(q_), lambda(lambda_) {
  if (!is_supported_prime(q)) {
    throw std::invalid_argument("FieldParams: q = " + std::to_string(q) + " is not one of the primes 2, 3, 5, 7");
  }
  if (lambda == 0) throw std::invalid_argument("FieldParams: lambda must be at least 1");
}

std::optional<std::uint64_t> FieldParams::space_size() const {
  std::uint64_t size = 1;
  for (unsigned i = 0; i < lambda; ++i) {
    if (size > UINT64_MAX / q) return std::nullopt;
    size *= q;
  }
  return size;
}

Residue mod_add(Residue a, Residue b, unsigned q) { return (a + b) % q; }
Residue mod_sub(Residue a, Residue b, unsigned q) { return (a + q - b) % q; }
Residue mod_mul(Residue a, Residue b, unsigned q) { return (a * b) % q; }

Residue mod_inv(Residue a, unsigned q) {
  a %= q;
  if (a == 0) throw std::domain_error("mod_inv: zero has no inverse");
  // q is tiny, Fermat by repeated multiplication is enough.
  Residue r = 1;
  for (unsigned i = 0; i < q - 2; ++i) r = mod_mul(r, a, q);
  return r;
}

// ---------------------------------------------------------------- FieldVector

FieldVector::FieldVector(FieldParams params, std::vector<Residue> coords)
    : params_(params), coords_(std::move(coords)) {
  if (coords_.size() != params_.lambda) {
    throw std::invalid_argument("FieldVector: expected " + std::to_string(params_.lambda) + " coordinates, got " +
                                std::to_string(coords_.size()));
  }
  for (auto c : coords_) {
    if (c >= params_.q) throw std::invalid_argument("FieldVector: coordinate not reduced mod q");
  }
}

FieldVector FieldVector::zero(FieldParams params) { return {params, std::vector<Residue>(params.lambda, 0)}; }

FieldVector FieldVector::from_index(FieldParams params, std::uint64_t index) {
  std::vector<Residue> coords(params.lambda, 0);
  for (std::size_t i = params.lambda; i-- > 0;) {
    coords[i] = static_cast<Residue>(index % params.q);
    index /= params.q;
  }
  if (index != 0) throw std::out_of_range("FieldVector::from_index: index exceeds q^lambda");
  return {params, std::move(coords)};
}

FieldVector FieldVector::random(FieldParams params, Rng& rng) {
  std::vector<Residue> coords(params.lambda);
  for (auto& c : coords) c = static_cast<Residue>(rng.uniform_below(params.q));
  return {params, std::move(coords)};
}

std::uint64_t FieldVector::index() const {
  std::uint64_t idx = 0;
  for (auto c : coords_) idx = idx * params_.q + c;
  return idx;
}

bool FieldVector::is_zero() const {
  return std::all_of(coords_.begin(), coords_.end(), [](Residue c) { return c == 0; });
}

FieldVector FieldVector::operator+(const FieldVector& other) const {
  if (!(params_ == other.params_)) throw std::invalid_argument("FieldVector: dimension mismatch");
  std::vector<Residue> out(coords_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mod_add(coords_[i], other.coords_[i], params_.q);
  return {params_, std::move(out)};
}

FieldVector FieldVector::operator-(const FieldVector& other) const {
  if (!(params_ == other.params_)) throw std::invalid_argument("FieldVector: dimension mismatch");
  std::vector<Residue> out(coords_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mod_sub(coords_[i], other.coords_[i], params_.q);
  return {params_, std::move(out)};
}

FieldVector FieldVector::scaled(Residue c) const {
  std::vector<Residue> out(coords_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mod_mul(coords_[i], c % params_.q, params_.q);
  return {params_, std::move(out)};
}

Residue FieldVector::dot(const FieldVector& other) const {
  if (!(params_ == other.params_)) throw std::invalid_argument("FieldVector: dimension mismatch");
  Residue acc = 0;
  for (std::size_t i = 0; i < coords_.size(); ++i) acc = mod_add(acc, mod_mul(coords_[i], other.coords_[i], params_.q), params_.q);
  return acc;
}

// ---------------------------------------------------------------- Matrix

Matrix::Matrix(unsigned q, std::size_t rows, std::size_t cols)
    : q_(q), rows_(rows), cols_(cols), data_(rows * cols, 0) {
  if (!is_supported_prime(q)) throw std::invalid_argument("Matrix: unsupported modulus " + std::to_string(q));
}

Matrix::Matrix(unsigned q, const std::vector<std::vector<Residue>>& rows, std::size_t cols)
    : Matrix(q, rows.size(), cols) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw std::invalid_argument("Matrix: ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (rows[r][c] >= q) throw std::invalid_argument("Matrix: entry not reduced mod q");
      at(r, c) = rows[r][c];
    }
  }
}

Matrix Matrix::identity(unsigned q, std::size_t n) {
  Matrix m(q, n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

Matrix Matrix::random(unsigned q, std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(q, rows, cols);
  for (auto& e : m.data_) e = static_cast<Residue>(rng.uniform_below(q));
  return m;
}

std::vector<Residue> Matrix::row(std::size_t r) const {
  return {data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
          data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_)};
}

std::vector<std::vector<Residue>> Matrix::to_rows() const {
  std::vector<std::vector<Residue>> out;
  out.reserve(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out.push_back(row(r));
  return out;
}

std::vector<Residue> Matrix::apply(std::span<const Residue> x) const {
  if (x.size() != cols_) throw std::invalid_argument("Matrix::apply: dimension mismatch");
  std::vector<Residue> out(rows_, 0);
  for (std::size_t r = 0; r < rows_; ++r) {
    Residue acc = 0;
    for (std::size_t c = 0; c < cols_; ++c) acc = mod_add(acc, mod_mul(at(r, c), x[c] % q_, q_), q_);
    out[r] = acc;
  }
  return out;
}

// ---------------------------------------------------------------- RREF

namespace {

// In-place Gauss-Jordan elimination on an augmented matrix, pivoting only in
// the first `pivot_cols` columns. Returns pivot columns in row order.
std::vector<std::size_t> gauss_jordan(Matrix& m, std::size_t pivot_cols) {
  const unsigned q = m.q();
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < pivot_cols && row < m.rows(); ++col) {
    std::size_t sel = row;
    while (sel < m.rows() && m.at(sel, col) == 0) ++sel;
    if (sel == m.rows()) continue;
    if (sel != row) {
      for (std::size_t c = 0; c < m.cols(); ++c) std::swap(m.at(sel, c), m.at(row, c));
    }
    const Residue inv = mod_inv(m.at(row, col), q);
    for (std::size_t c = 0; c < m.cols(); ++c) m.at(row, c) = mod_mul(m.at(row, c), inv, q);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (r == row || m.at(r, col) == 0) continue;
      const Residue factor = m.at(r, col);
      for (std::size_t c = 0; c < m.cols(); ++c) {
        m.at(r, c) = mod_sub(m.at(r, c), mod_mul(factor, m.at(row, c), q), q);
      }
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

}  // namespace

RrefResult rref(const Matrix& m) {
  Matrix work = m;
  auto pivots = gauss_jordan(work, work.cols());
  Matrix trimmed(m.q(), pivots.size(), m.cols());
  for (std::size_t r = 0; r < pivots.size(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) trimmed.at(r, c) = work.at(r, c);
  }
  return {std::move(trimmed), pivots.size(), std::move(pivots)};
}

bool is_rref(const Matrix& m) {
  std::size_t last_pivot = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::size_t col = 0;
    while (col < m.cols() && m.at(r, col) == 0) ++col;
    if (col == m.cols()) return false;  // zero rows are not canonical
    if (m.at(r, col) != 1) return false;
    if (r > 0 && col <= last_pivot) return false;
    for (std::size_t other = 0; other < m.rows(); ++other) {
      if (other != r && m.at(other, col) != 0) return false;
    }
    last_pivot = col;
  }
  return true;
}

std::optional<std::vector<Residue>> solve_affine(const Matrix& m, std::span<const Residue> alpha) {
  if (alpha.size() != m.rows()) throw std::invalid_argument("solve_affine: target length must equal row count");
  Matrix aug(m.q(), m.rows(), m.cols() + 1);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) aug.at(r, c) = m.at(r, c);
    if (alpha[r] >= m.q()) throw std::invalid_argument("solve_affine: target not reduced mod q");
    aug.at(r, m.cols()) = alpha[r];
  }
  const auto pivots = gauss_jordan(aug, m.cols());
  for (std::size_t r = pivots.size(); r < aug.rows(); ++r) {
    if (aug.at(r, m.cols()) != 0) return std::nullopt;
  }
  std::vector<Residue> x(m.cols(), 0);
  for (std::size_t r = 0; r < pivots.size(); ++r) x[pivots[r]] = aug.at(r, m.cols());
  return x;
}

std::optional<FieldVector> solve_affine(const Matrix& m, const FieldVector& alpha, FieldParams solution_space) {
  if (solution_space.lambda != m.cols() || solution_space.q != m.q()) {
    throw std::invalid_argument("solve_affine: solution space does not match matrix");
  }
  auto x = solve_affine(m, alpha.coords());
  if (!x) return std::nullopt;
  return FieldVector(solution_space, std::move(*x));
}

// ---------------------------------------------------------------- Subspace

Subspace::Subspace(FieldParams params, Matrix basis, std::vector<std::size_t> pivots)
    : params_(params), basis_(std::move(basis)), pivots_(std::move(pivots)) {}

Subspace Subspace::span(FieldParams params, const Matrix& generators) {
  if (generators.cols() != params.lambda || generators.q() != params.q) {
    throw std::invalid_argument("Subspace::span: generators do not live in Z_q^lambda");
  }
  auto r = rref(generators);
  return Subspace(params, std::move(r.matrix), std::move(r.pivots));
}

Subspace Subspace::span(FieldParams params, const std::vector<FieldVector>& generators) {
  Matrix m(params.q, generators.size(), params.lambda);
  for (std::size_t r = 0; r < generators.size(); ++r) {
    if (!(generators[r].params() == params)) throw std::invalid_argument("Subspace::span: dimension mismatch");
    for (std::size_t c = 0; c < params.lambda; ++c) m.at(r, c) = generators[r][c];
  }
  return span(params, m);
}

Subspace Subspace::zero(FieldParams params) { return span(params, Matrix(params.q, 0, params.lambda)); }

Subspace Subspace::full(FieldParams params) { return span(params, Matrix::identity(params.q, params.lambda)); }

std::vector<FieldVector> Subspace::basis_vectors() const {
  std::vector<FieldVector> out;
  for (std::size_t r = 0; r < basis_.rows(); ++r) out.emplace_back(params_, basis_.row(r));
  return out;
}

bool Subspace::contains(const FieldVector& v) const {
  if (!(v.params() == params_)) throw std::invalid_argument("Subspace::contains: dimension mismatch");
  // In RREF the only candidate combination uses v's pivot coordinates as coefficients.
  std::vector<Residue> residual(v.coords().begin(), v.coords().end());
  const unsigned q = params_.q;
  for (std::size_t r = 0; r < pivots_.size(); ++r) {
    const Residue coef = residual[pivots_[r]];
    if (coef == 0) continue;
    for (std::size_t c = 0; c < params_.lambda; ++c) {
      residual[c] = mod_sub(residual[c], mod_mul(coef, basis_.at(r, c), q), q);
    }
  }
  return std::all_of(residual.begin(), residual.end(), [](Residue c) { return c == 0; });
}

Subspace Subspace::dual() const {
  const unsigned q = params_.q;
  std::vector<bool> is_pivot(params_.lambda, false);
  for (auto p : pivots_) is_pivot[p] = true;
  std::vector<FieldVector> gens;
  for (std::size_t f = 0; f < params_.lambda; ++f) {
    if (is_pivot[f]) continue;
    std::vector<Residue> v(params_.lambda, 0);
    v[f] = 1;
    for (std::size_t r = 0; r < pivots_.size(); ++r) v[pivots_[r]] = mod_sub(0, basis_.at(r, f), q);
    gens.emplace_back(params_, std::move(v));
  }
  return span(params_, gens);
}

FieldVector Subspace::element(std::uint64_t coefficient_index) const {
  const unsigned q = params_.q;
  std::vector<Residue> v(params_.lambda, 0);
  for (std::size_t r = dim(); r-- > 0;) {
    const auto coef = static_cast<Residue>(coefficient_index % q);
    coefficient_index /= q;
    if (coef == 0) continue;
    for (std::size_t c = 0; c < params_.lambda; ++c) v[c] = mod_add(v[c], mod_mul(coef, basis_.at(r, c), q), q);
  }
  if (coefficient_index != 0) throw std::out_of_range("Subspace::element: index exceeds q^dim");
  return {params_, std::move(v)};
}

std::vector<FieldVector> Subspace::elements() const {
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < dim(); ++i) count *= params_.q;
  std::vector<FieldVector> out;
  out.reserve(count);
  for (std::uint64_t c = 0; c < count; ++c) out.push_back(element(c));
  return out;
}

bool Subspace::is_subspace_of(const Subspace& other) const {
  for (const auto& v : basis_vectors()) {
    if (!other.contains(v)) return false;
  }
  return true;
}

nlohmann::json Subspace::to_json() const {
  return {{"q", params_.q}, {"lambda", params_.lambda}, {"basis", basis_.to_rows()}};
}

Subspace::Parsed Subspace::from_json(const nlohmann::json& j) {
  const FieldParams params(j.at("q").get<unsigned>(), j.at("lambda").get<unsigned>());
  const auto rows = j.at("basis").get<std::vector<std::vector<Residue>>>();
  const Matrix m(params.q, rows, params.lambda);
  return {span(params, m), !is_rref(m)};
}

Subspace random_subspace(FieldParams params, std::size_t dim, Rng& rng) {
  if (dim > params.lambda) {
    throw std::invalid_argument("random_subspace: dim " + std::to_string(dim) + " exceeds lambda " +
                                std::to_string(params.lambda));
  }
  for (;;) {
    const Matrix m = Matrix::random(params.q, dim, params.lambda, rng);
    auto r = rref(m);
    if (r.rank == dim) return Subspace::span(params, m);
  }
}

Subspace random_superspace(const Subspace& inner, std::size_t dim, Rng& rng) {
  const FieldParams params = inner.params();
  if (dim < inner.dim() || dim > params.lambda) throw std::invalid_argument("random_superspace: bad dimension");
  // Uniform: extend by random vectors and accept only full-rank extensions.
  for (;;) {
    Matrix m(params.q, dim, params.lambda);
    for (std::size_t r = 0; r < inner.dim(); ++r) {
      for (std::size_t c = 0; c < params.lambda; ++c) m.at(r, c) = inner.basis().at(r, c);
    }
    for (std::size_t r = inner.dim(); r < dim; ++r) {
      for (std::size_t c = 0; c < params.lambda; ++c) m.at(r, c) = static_cast<Residue>(rng.uniform_below(params.q));
    }
    if (rref(m).rank == dim) return Subspace::span(params, m);
  }
}

std::uint64_t gaussian_binomial(unsigned q, std::size_t lambda, std::size_t dim) {
  if (dim > lambda) return 0;
  // prod_{i<dim} (q^{lambda-i} - 1) / (q^{i+1} - 1); the running product stays integral.
  auto pow = [q](std::size_t e) {
    std::uint64_t r = 1;
    for (std::size_t i = 0; i < e; ++i) r *= q;
    return r;
  };
  std::uint64_t num = 1, den = 1;
  for (std::size_t i = 0; i < dim; ++i) {
    num *= pow(lambda - i) - 1;
    den *= pow(i + 1) - 1;
  }
  return num / den;
}

}  // namespace qlease::field
