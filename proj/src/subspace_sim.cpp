#include "qlease/subspace_sim.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

#include "qlease/rng.hpp"

namespace qlease::quantum {

std::size_t checked_dimension(unsigned q, unsigned coords, std::uint64_t cap) {
  std::uint64_t d = 1;
  for (unsigned i = 0; i < coords; ++i) {
    d *= q;
    if (d > cap) {
      throw CapExceeded("simulation cap exceeded: " + std::to_string(q) + "^" + std::to_string(coords) + " > " +
                        std::to_string(cap));
    }
  }
  return static_cast<std::size_t>(d);
}

namespace {

void require_normalised(double norm, const char* what) {
  if (std::abs(norm - 1.0) > kTolerance) {
    throw std::invalid_argument(std::string(what) + ": state norm " + std::to_string(norm) + " differs from 1");
  }
}

void require_same(const FieldParams& a, const FieldParams& b, const char* what) {
  if (!(a == b)) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

// Applies the single-coordinate Fourier matrix to coordinates [begin, end) of
// a vector over Z_q^total (coordinate 0 most significant).
void fourier_coords(Eigen::Ref<Eigen::VectorXcd> v, unsigned q, unsigned total, unsigned begin, unsigned end,
                    bool inverse) {
  std::vector<Complex> f(q * q);
  const double sign = inverse ? -1.0 : 1.0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(q));
  for (unsigned x = 0; x < q; ++x) {
    for (unsigned y = 0; y < q; ++y) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>((x * y) % q) / q;
      f[y * q + x] = std::polar(scale, angle);
    }
  }
  const auto dim = static_cast<std::size_t>(v.size());
  std::vector<Complex> in(q), out(q);
  for (unsigned k = begin; k < end; ++k) {
    std::size_t stride = 1;
    for (unsigned j = k + 1; j < total; ++j) stride *= q;
    const std::size_t block = stride * q;
    for (std::size_t base = 0; base < dim; base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        for (unsigned x = 0; x < q; ++x) in[x] = v[static_cast<Eigen::Index>(base + off + x * stride)];
        for (unsigned y = 0; y < q; ++y) {
          Complex acc = 0;
          for (unsigned x = 0; x < q; ++x) acc += f[y * q + x] * in[x];
          out[y] = acc;
        }
        for (unsigned y = 0; y < q; ++y) v[static_cast<Eigen::Index>(base + off + y * stride)] = out[y];
      }
    }
  }
}

Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& m) { return 0.5 * (m + m.adjoint()); }

// Projects (PrhoP) onto the mask and renormalises by the retained trace.
Eigen::MatrixXcd mask_conjugate(const Eigen::MatrixXcd& rho, const std::vector<bool>& mask) {
  Eigen::MatrixXcd out = rho;
  const auto d = out.rows();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (mask[static_cast<std::size_t>(i)]) continue;
    out.row(i).setZero();
    out.col(i).setZero();
  }
  return out;
}

double masked_weight(const Eigen::VectorXcd& v, const std::vector<bool>& mask) {
  double p = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) p += std::norm(v[i]);
  }
  return p;
}

double masked_trace(const Eigen::MatrixXcd& rho, const std::vector<bool>& mask) {
  double p = 0;
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) p += rho(i, i).real();
  }
  return p;
}

int sample_binary(double p_one, Rng& rng) { return rng.uniform01() < p_one ? 1 : 0; }

std::vector<bool> first_register_mask(const FieldParams& reg, std::size_t reg_dim, const Predicate& predicate) {
  const auto reg_mask = membership_mask(reg, predicate);
  std::vector<bool> mask(reg_dim * reg_dim);
  for (std::size_t x1 = 0; x1 < reg_dim; ++x1) {
    for (std::size_t x2 = 0; x2 < reg_dim; ++x2) mask[x1 * reg_dim + x2] = reg_mask[x1];
  }
  return mask;
}

}  // namespace

// ---------------------------------------------------------------- PureState

PureState::PureState(FieldParams params, Eigen::VectorXcd amplitudes)
    : params_(params), amplitudes_(std::move(amplitudes)) {
  const auto d = checked_dimension(params_.q, params_.lambda, kSingleRegisterCap);
  if (static_cast<std::size_t>(amplitudes_.size()) != d) {
    throw std::invalid_argument("PureState: expected " + std::to_string(d) + " amplitudes");
  }
  require_normalised(amplitudes_.norm(), "PureState");
}

PureState PureState::basis(FieldParams params, std::uint64_t index) {
  const auto d = checked_dimension(params.q, params.lambda, kSingleRegisterCap);
  if (index >= d) throw std::out_of_range("PureState::basis: index out of range");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(d));
  v[static_cast<Eigen::Index>(index)] = 1.0;
  return {params, std::move(v)};
}

PureState PureState::random(FieldParams params, Rng& rng) {
  const auto d = checked_dimension(params.q, params.lambda, kSingleRegisterCap);
  Eigen::VectorXcd v(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    // Box-Muller
    const double u1 = 1.0 - rng.uniform01();
    const double u2 = rng.uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    v[i] = Complex(r * std::cos(2 * std::numbers::pi * u2), r * std::sin(2 * std::numbers::pi * u2));
  }
  v.normalize();
  return {params, std::move(v)};
}

Complex PureState::inner(const PureState& other) const {
  require_same(params_, other.params_, "PureState::inner");
  return amplitudes_.dot(other.amplitudes_);  // Eigen's dot conjugates the left operand
}

// ---------------------------------------------------------------- BipartiteState

BipartiteState::BipartiteState(FieldParams register_params, Eigen::VectorXcd amplitudes)
    : params_(register_params), amplitudes_(std::move(amplitudes)) {
  const auto d = checked_dimension(params_.q, 2 * params_.lambda, kBipartiteCap);
  register_dim_ = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
  if (static_cast<std::size_t>(amplitudes_.size()) != d) {
    throw std::invalid_argument("BipartiteState: expected " + std::to_string(d) + " amplitudes");
  }
  require_normalised(amplitudes_.norm(), "BipartiteState");
}

BipartiteState BipartiteState::product(const PureState& first, const PureState& second) {
  require_same(first.params(), second.params(), "BipartiteState::product");
  const auto d = static_cast<Eigen::Index>(first.dimension());
  checked_dimension(first.params().q, 2 * first.params().lambda, kBipartiteCap);
  Eigen::VectorXcd v(d * d);
  for (Eigen::Index i = 0; i < d; ++i) v.segment(i * d, d) = first.amplitudes()[i] * second.amplitudes();
  return {first.params(), std::move(v)};
}

Eigen::MatrixXcd BipartiteState::as_matrix() const {
  const auto d = static_cast<Eigen::Index>(register_dim_);
  // amplitudes_ is row-major in (x1, x2); Eigen maps are column-major, hence the transpose.
  return Eigen::Map<const Eigen::MatrixXcd>(amplitudes_.data(), d, d).transpose();
}

// ---------------------------------------------------------------- DensityOperator

DensityOperator::DensityOperator(FieldParams params, Eigen::MatrixXcd matrix)
    : params_(params), matrix_(std::move(matrix)) {
  const auto d = checked_dimension(params_.q, params_.lambda, kDensityCap);
  if (static_cast<std::size_t>(matrix_.rows()) != d || matrix_.cols() != matrix_.rows()) {
    throw std::invalid_argument("DensityOperator: expected a " + std::to_string(d) + "x" + std::to_string(d) +
                                " matrix");
  }
  if ((matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() > kTolerance) {
    throw std::invalid_argument("DensityOperator: matrix is not Hermitian");
  }
  if (std::abs(trace() - 1.0) > kTolerance) {
    throw std::invalid_argument("DensityOperator: trace " + std::to_string(trace()) + " differs from 1");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(matrix_, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -kPsdTolerance) {
    throw std::invalid_argument("DensityOperator: matrix is not positive semidefinite");
  }
}

DensityOperator::DensityOperator(FieldParams params, Eigen::MatrixXcd matrix, Trusted)
    : params_(params), matrix_(std::move(matrix)) {
  checked_dimension(params_.q, params_.lambda, kDensityCap);
}

DensityOperator DensityOperator::pure(const PureState& s) {
  return {s.params(), s.amplitudes() * s.amplitudes().adjoint(), Trusted{}};
}

double DensityOperator::expectation(const PureState& psi) const {
  require_same(params_, psi.params(), "DensityOperator::expectation");
  return psi.amplitudes().dot(matrix_ * psi.amplitudes()).real();
}

// ---------------------------------------------------------------- states

PureState subspace_state(const Subspace& a) { return coset_state(a, FieldVector::zero(a.params())); }

PureState coset_state(const Subspace& a, const FieldVector& shift) {
  const auto& params = a.params();
  const auto d = checked_dimension(params.q, params.lambda, kSingleRegisterCap);
  const auto elements = a.elements();
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(d));
  const double amp = 1.0 / std::sqrt(static_cast<double>(elements.size()));
  for (const auto& e : elements) v[static_cast<Eigen::Index>((e + shift).index())] = amp;
  return {params, std::move(v)};
}

PureState qft(const PureState& s, bool inverse) {
  Eigen::VectorXcd v = s.amplitudes();
  fourier_coords(v, s.params().q, s.params().lambda, 0, s.params().lambda, inverse);
  v.normalize();
  return {s.params(), std::move(v)};
}

DensityOperator qft(const DensityOperator& rho, bool inverse) {
  const auto& p = rho.params();
  Eigen::MatrixXcd m = rho.matrix();
  for (Eigen::Index c = 0; c < m.cols(); ++c) fourier_coords(m.col(c), p.q, p.lambda, 0, p.lambda, inverse);
  Eigen::MatrixXcd t = m.adjoint();
  for (Eigen::Index c = 0; c < t.cols(); ++c) fourier_coords(t.col(c), p.q, p.lambda, 0, p.lambda, inverse);
  return {p, hermitian_part(t.adjoint()), DensityOperator::Trusted{}};
}

BipartiteState qft_first(const BipartiteState& s, bool inverse) {
  Eigen::VectorXcd v = s.amplitudes();
  const auto& p = s.register_params();
  fourier_coords(v, p.q, 2 * p.lambda, 0, p.lambda, inverse);
  v.normalize();
  return {p, std::move(v)};
}

// ---------------------------------------------------------------- measurements

std::vector<bool> membership_mask(FieldParams params, const Predicate& predicate) {
  const auto d = checked_dimension(params.q, params.lambda, kSingleRegisterCap);
  std::vector<bool> mask(d);
  std::vector<field::Residue> coords(params.lambda, 0);
  for (std::size_t i = 0; i < d; ++i) {
    mask[i] = predicate(FieldVector(params, coords));
    // increment in lexicographic order
    for (std::size_t k = params.lambda; k-- > 0;) {
      if (++coords[k] < params.q) break;
      coords[k] = 0;
    }
  }
  return mask;
}

MeasurementOutcome<PureState> membership_branch(const PureState& s, const Predicate& predicate, int outcome) {
  const auto mask = membership_mask(s.params(), predicate);
  const double p1 = masked_weight(s.amplitudes(), mask);
  const double p = outcome == 1 ? p1 : 1.0 - p1;
  if (p < kZeroProbability) throw std::domain_error("membership_branch: branch has zero probability");
  Eigen::VectorXcd v = s.amplitudes();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)] != (outcome == 1)) v[i] = 0;
  }
  v.normalize();
  return {outcome, p, PureState(s.params(), std::move(v))};
}

MeasurementOutcome<PureState> measure_membership(const PureState& s, const Predicate& predicate, Rng& rng) {
  const auto mask = membership_mask(s.params(), predicate);
  const double p1 = masked_weight(s.amplitudes(), mask);
  return membership_branch(s, predicate, sample_binary(p1, rng));
}

MeasurementOutcome<DensityOperator> membership_branch(const DensityOperator& rho, const Predicate& predicate,
                                                      int outcome) {
  auto mask = membership_mask(rho.params(), predicate);
  if (outcome == 0) mask.flip();
  const double p = masked_trace(rho.matrix(), mask);
  if (p < kZeroProbability) throw std::domain_error("membership_branch: branch has zero probability");
  Eigen::MatrixXcd m = mask_conjugate(rho.matrix(), mask);
  m /= m.trace().real();
  return {outcome, p, DensityOperator(rho.params(), hermitian_part(m), DensityOperator::Trusted{})};
}

MeasurementOutcome<DensityOperator> measure_membership(const DensityOperator& rho, const Predicate& predicate,
                                                       Rng& rng) {
  const auto mask = membership_mask(rho.params(), predicate);
  const double p1 = masked_trace(rho.matrix(), mask);
  return membership_branch(rho, predicate, sample_binary(p1, rng));
}

TwoStepOutcome<PureState> two_step_projection(const PureState& s, const Predicate& in_a, const Predicate& in_dual,
                                              Rng& rng) {
  auto first = measure_membership(s, in_a, rng);
  auto second = measure_membership(qft(first.post_state, false), in_dual, rng);
  return {first.outcome == 1, second.outcome == 1, first.probability * second.probability,
          qft(second.post_state, true)};
}

TwoStepOutcome<DensityOperator> two_step_projection(const DensityOperator& rho, const Predicate& in_a,
                                                    const Predicate& in_dual, Rng& rng) {
  auto first = measure_membership(rho, in_a, rng);
  auto second = measure_membership(qft(first.post_state, false), in_dual, rng);
  return {first.outcome == 1, second.outcome == 1, first.probability * second.probability,
          qft(second.post_state, true)};
}

AcceptBranch two_step_accept_branch(const DensityOperator& rho, const Predicate& in_a, const Predicate& in_dual) {
  const auto mask_a = membership_mask(rho.params(), in_a);
  const double p1 = masked_trace(rho.matrix(), mask_a);
  if (p1 < kZeroProbability) return {0.0, std::nullopt};
  const auto first = membership_branch(rho, in_a, 1);
  const auto rotated = qft(first.post_state, false);
  const double p2 = masked_trace(rotated.matrix(), membership_mask(rho.params(), in_dual));
  if (p1 * p2 < kZeroProbability) return {p1 * p2, std::nullopt};
  const auto second = membership_branch(rotated, in_dual, 1);
  return {p1 * p2, qft(second.post_state, true)};
}

MeasurementOutcome<PureState> project_onto_subspace_state(const PureState& s, const Subspace& a, Rng& rng) {
  const Subspace perp = a.dual();
  auto r = two_step_projection(
      s, [&a](const FieldVector& x) { return a.contains(x); }, [&perp](const FieldVector& x) { return perp.contains(x); },
      rng);
  return {r.accepted() ? 1 : 0, r.probability, std::move(r.post_state)};
}

MeasurementOutcome<PureState> measure_subspace_projector(const PureState& s, const Subspace& a, Rng& rng) {
  require_same(s.params(), a.params(), "measure_subspace_projector");
  const PureState target = subspace_state(a);
  const Complex c = target.inner(s);
  const double p = std::norm(c);
  const int outcome = sample_binary(p, rng);
  if (outcome == 1) {
    Eigen::VectorXcd v = target.amplitudes() * (c / std::abs(c));
    return {1, p, PureState(s.params(), std::move(v))};
  }
  Eigen::VectorXcd v = s.amplitudes() - c * target.amplitudes();
  v.normalize();
  return {0, 1.0 - p, PureState(s.params(), std::move(v))};
}

MeasurementOutcome<DensityOperator> measure_subspace_projector(const DensityOperator& rho, const Subspace& a,
                                                               Rng& rng) {
  require_same(rho.params(), a.params(), "measure_subspace_projector");
  const PureState target = subspace_state(a);
  const double p = rho.expectation(target);
  const int outcome = sample_binary(p, rng);
  if (outcome == 1) return {1, p, DensityOperator::pure(target)};
  const auto d = static_cast<Eigen::Index>(rho.dimension());
  const Eigen::MatrixXcd proj = Eigen::MatrixXcd::Identity(d, d) - target.amplitudes() * target.amplitudes().adjoint();
  Eigen::MatrixXcd m = proj * rho.matrix() * proj;
  m /= m.trace().real();
  return {0, 1.0 - p, DensityOperator(rho.params(), hermitian_part(m), DensityOperator::Trusted{})};
}

// ---------------------------------------------------------------- distances, reductions

double trace_distance(const DensityOperator& x, const DensityOperator& y) {
  require_same(x.params(), y.params(), "trace_distance");
  const Eigen::MatrixXcd diff = hermitian_part(x.matrix() - y.matrix());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(diff, Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const PureState& x, const PureState& y) {
  // sqrt(1 - c^2) with c = |<x|y>|, written as sqrt(|x - phase*y|^2 (1 + c) / 2) to avoid cancellation near c = 1.
  const Complex ip = x.inner(y);
  const double c = std::min(1.0, std::abs(ip));
  const Complex phase = c > 0 ? std::conj(ip) / std::abs(ip) : Complex(1.0, 0.0);
  const double d2 = (x.amplitudes() - phase * y.amplitudes()).squaredNorm();
  return std::sqrt(std::max(0.0, d2 * (1.0 + c) / 2.0));
}

bool equal_up_to_phase(const PureState& x, const PureState& y, double tol) {
  if (!(x.params() == y.params())) return false;
  Eigen::Index ix, iy;
  x.amplitudes().cwiseAbs().maxCoeff(&ix);
  y.amplitudes().cwiseAbs().maxCoeff(&iy);
  const Complex px = x.amplitudes()[ix] / std::abs(x.amplitudes()[ix]);
  const Complex py = y.amplitudes()[iy] / std::abs(y.amplitudes()[iy]);
  return (x.amplitudes() / px - y.amplitudes() / py).cwiseAbs().maxCoeff() <= tol;
}

DensityOperator partial_trace_second(const BipartiteState& s) {
  const Eigen::MatrixXcd m = s.as_matrix();
  return {s.register_params(), hermitian_part(m * m.adjoint()), DensityOperator::Trusted{}};
}

DensityOperator partial_trace_first(const BipartiteState& s) {
  const Eigen::MatrixXcd m = s.as_matrix();
  return {s.register_params(), hermitian_part(m.transpose() * m.conjugate()), DensityOperator::Trusted{}};
}

double first_register_accept_probability(const BipartiteState& s, const Subspace& a) {
  require_same(s.register_params(), a.params(), "first_register_accept_probability");
  const Eigen::VectorXcd v = s.as_matrix().transpose() * subspace_state(a).amplitudes().conjugate();
  return v.squaredNorm();
}

ConditionalState conditional_second_register_branch(const BipartiteState& s, const Subspace& a, bool accept) {
  require_same(s.register_params(), a.params(), "conditional_second_register");
  const Eigen::MatrixXcd m = s.as_matrix();
  // (<A| x I)|psi>, indexed by x2
  const Eigen::VectorXcd v = m.transpose() * subspace_state(a).amplitudes().conjugate();
  const double p = v.squaredNorm();
  if (accept) {
    if (p < kZeroProbability) throw std::domain_error("conditional_second_register: acceptance has zero probability");
    return {true, p, DensityOperator(s.register_params(), v * v.adjoint() / p, DensityOperator::Trusted{})};
  }
  if (1.0 - p < kZeroProbability) {
    throw std::domain_error("conditional_second_register: rejection has zero probability");
  }
  Eigen::MatrixXcd rest = m.transpose() * m.conjugate() - v * v.adjoint();
  rest /= rest.trace().real();
  return {false, 1.0 - p, DensityOperator(s.register_params(), hermitian_part(rest), DensityOperator::Trusted{})};
}

ConditionalState conditional_second_register(const BipartiteState& s, const Subspace& a, Rng& rng) {
  const double p = first_register_accept_probability(s, a);
  return conditional_second_register_branch(s, a, sample_binary(p, rng) == 1);
}

TwoStepOutcome<BipartiteState> two_step_projection_first(const BipartiteState& s, const Predicate& in_a,
                                                         const Predicate& in_dual, Rng& rng) {
  const auto& reg = s.register_params();
  const std::size_t d = s.register_dimension();
  auto measure = [&](const Eigen::VectorXcd& amps, const std::vector<bool>& mask, int& outcome, double& prob) {
    const double p1 = masked_weight(amps, mask);
    outcome = sample_binary(p1, rng);
    prob = outcome == 1 ? p1 : 1.0 - p1;
    Eigen::VectorXcd v = amps;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (mask[static_cast<std::size_t>(i)] != (outcome == 1)) v[i] = 0;
    }
    v.normalize();
    return v;
  };
  int o1, o2;
  double p1, p2;
  const Eigen::VectorXcd after_first = measure(s.amplitudes(), first_register_mask(reg, d, in_a), o1, p1);
  const BipartiteState rotated = qft_first(BipartiteState(reg, after_first), false);
  const Eigen::VectorXcd after_second = measure(rotated.amplitudes(), first_register_mask(reg, d, in_dual), o2, p2);
  return {o1 == 1, o2 == 1, p1 * p2, qft_first(BipartiteState(reg, after_second), true)};
}

std::uint64_t sample_second_register(const BipartiteState& s, Rng& rng) {
  const std::size_t d = s.register_dimension();
  std::vector<double> marginal(d, 0.0);
  for (std::size_t i = 0; i < d * d; ++i) marginal[i % d] += std::norm(s.amplitudes()[static_cast<Eigen::Index>(i)]);
  double u = rng.uniform01();
  for (std::size_t x = 0; x < d; ++x) {
    if (u < marginal[x]) return x;
    u -= marginal[x];
  }
  return d - 1;
}

// ---------------------------------------------------------------- gentle measurement

BinaryMeasurement BinaryMeasurement::subspace_state_projector(const Subspace& a) {
  const PureState target = subspace_state(a);
  return {[target](const PureState& s) -> Eigen::VectorXcd {
    require_same(target.params(), s.params(), "subspace_state_projector");
    return target.inner(s) * target.amplitudes();
  }};
}

BinaryMeasurement BinaryMeasurement::membership(const Predicate& predicate) {
  return {[predicate](const PureState& s) -> Eigen::VectorXcd {
    const auto mask = membership_mask(s.params(), predicate);
    Eigen::VectorXcd v = s.amplitudes();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!mask[static_cast<std::size_t>(i)]) v[i] = 0;
    }
    return v;
  }};
}

GentleBound gentle_measurement_bound_check(const PureState& s, const BinaryMeasurement& m, double slack) {
  const Eigen::VectorXcd projected = m.project_accept(s);
  const double accept = projected.squaredNorm();
  if (accept < kZeroProbability) throw std::domain_error("gentle_measurement_bound_check: accept branch never occurs");
  const PureState recovered(s.params(), projected / std::sqrt(accept));
  const double eps = std::clamp(1.0 - accept, 0.0, 1.0);
  const GentleBound result{eps, trace_distance(DensityOperator::pure(s), DensityOperator::pure(recovered)),
                           std::sqrt(eps)};
  if (result.trace_distance > result.bound + slack) {
    throw GentleBoundViolated("gentle measurement bound violated: distance " + std::to_string(result.trace_distance) +
                              " > sqrt(eps) " + std::to_string(result.bound));
  }
  return result;
}

// ---------------------------------------------------------------- state dump

namespace {

constexpr char kDumpMagic[4] = {'Q', 'L', 'S', 'V'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("state dump: truncated header");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(bits >> (8 * i));
  out.write(b, 8);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("state dump: truncated amplitudes");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_state_dump(std::ostream& out, const PureState& s) {
  out.write(kDumpMagic, 4);
  put_u32(out, s.params().q);
  put_u32(out, s.params().lambda);
  put_u32(out, 0);
  for (Eigen::Index i = 0; i < s.amplitudes().size(); ++i) {
    put_f64(out, s.amplitudes()[i].real());
    put_f64(out, s.amplitudes()[i].imag());
  }
  if (!out) throw std::runtime_error("state dump: write failed");
}

PureState read_state_dump(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kDumpMagic, 4) != 0) {
    throw std::runtime_error("state dump: bad magic");
  }
  const std::uint32_t q = get_u32(in);
  const std::uint32_t lambda = get_u32(in);
  get_u32(in);
  const FieldParams params(q, lambda);
  const auto d = checked_dimension(q, lambda, kSingleRegisterCap);
  Eigen::VectorXcd v(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    const double re = get_f64(in);
    const double im = get_f64(in);
    v[static_cast<Eigen::Index>(i)] = Complex(re, im);
  }
  return {params, std::move(v)};
}

void write_state_dump_file(const std::string& path, const PureState& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("state dump: cannot open " + path);
  write_state_dump(out, s);
}

PureState read_state_dump_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("state dump: cannot open " + path);
  return read_state_dump(in);
}

}  // namespace qlease::quantum
