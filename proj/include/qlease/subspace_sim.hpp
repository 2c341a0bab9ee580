#ifndef QLEASE_SUBSPACE_SIM_HPP
#define QLEASE_SUBSPACE_SIM_HPP

// Dense pure-state simulation over the Hilbert space spanned by |x>, x in Z_q^lambda.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qlease/field_linalg.hpp"

namespace qlease {
class Rng;
}

namespace qlease::quantum {

using field::FieldParams;
using field::FieldVector;
using field::Subspace;
using Complex = std::complex<double>;

inline constexpr double kTolerance = 1e-9;
inline constexpr double kPsdTolerance = 1e-8;
inline constexpr double kZeroProbability = 1e-12;
inline constexpr std::uint64_t kSingleRegisterCap = std::uint64_t{1} << 20;
inline constexpr std::uint64_t kBipartiteCap = std::uint64_t{1} << 24;
// Density matrices are dense d x d.
inline constexpr std::uint64_t kDensityCap = std::uint64_t{1} << 12;

class CapExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

// q^coords, throwing CapExceeded above `cap`.
std::size_t checked_dimension(unsigned q, unsigned coords, std::uint64_t cap);

using Predicate = std::function<bool(const FieldVector&)>;

class PureState {
 public:
  PureState(FieldParams params, Eigen::VectorXcd amplitudes);
  static PureState basis(FieldParams params, std::uint64_t index);
  static PureState basis(const FieldVector& v) { return basis(v.params(), v.index()); }
  // Haar-like random state: normalised complex Gaussian amplitudes.
  static PureState random(FieldParams params, Rng& rng);

  const FieldParams& params() const { return params_; }
  std::size_t dimension() const { return static_cast<std::size_t>(amplitudes_.size()); }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  Complex amplitude(const FieldVector& x) const { return amplitudes_[static_cast<Eigen::Index>(x.index())]; }

  Complex inner(const PureState& other) const;  // <this|other>
  double norm() const { return amplitudes_.norm(); }

 private:
  FieldParams params_;
  Eigen::VectorXcd amplitudes_;
};

// Two registers of lambda coordinates each; index = x1 * q^lambda + x2.
class BipartiteState {
 public:
  BipartiteState(FieldParams register_params, Eigen::VectorXcd amplitudes);
  static BipartiteState product(const PureState& first, const PureState& second);

  const FieldParams& register_params() const { return params_; }
  std::size_t register_dimension() const { return register_dim_; }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  // Amplitudes as a matrix M(x1, x2).
  Eigen::MatrixXcd as_matrix() const;

 private:
  FieldParams params_;
  std::size_t register_dim_;
  Eigen::VectorXcd amplitudes_;
};

class DensityOperator {
 public:
  DensityOperator(FieldParams params, Eigen::MatrixXcd matrix);
  static DensityOperator pure(const PureState& s);

  const FieldParams& params() const { return params_; }
  std::size_t dimension() const { return static_cast<std::size_t>(matrix_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return matrix_; }
  double trace() const { return matrix_.trace().real(); }
  // <psi| rho |psi>
  double expectation(const PureState& psi) const;

  // Skips the Hermitian/PSD/trace validation; callers guarantee validity
  // (outer products, unitary conjugations, normalised projections).
  struct Trusted {};
  DensityOperator(FieldParams params, Eigen::MatrixXcd matrix, Trusted);

 private:
  FieldParams params_;
  Eigen::MatrixXcd matrix_;
};

template <class State>
struct MeasurementOutcome {
  int outcome;
  double probability;
  State post_state;
};

// ---------------------------------------------------------------- states

PureState subspace_state(const Subspace& a);
// Uniform superposition over the coset v + A.
PureState coset_state(const Subspace& a, const FieldVector& shift);

// Forward: |x> -> q^{-lambda/2} sum_y w^{<x,y>} |y>, w = exp(2 pi i / q). Inverse is the adjoint.
PureState qft(const PureState& s, bool inverse);
DensityOperator qft(const DensityOperator& rho, bool inverse);
// Transform applied to the first register of a bipartite state only.
BipartiteState qft_first(const BipartiteState& s, bool inverse);

// ---------------------------------------------------------------- measurements

// Indicator mask over basis indices.
std::vector<bool> membership_mask(FieldParams params, const Predicate& predicate);

// Ancilla measurement of |x>|0> -> |x>|predicate(x)>; outcome 1 means "member".
MeasurementOutcome<PureState> measure_membership(const PureState& s, const Predicate& predicate, Rng& rng);
MeasurementOutcome<DensityOperator> measure_membership(const DensityOperator& rho, const Predicate& predicate,
                                                       Rng& rng);
// Same measurement with the branch fixed; throws on a zero-probability branch.
MeasurementOutcome<PureState> membership_branch(const PureState& s, const Predicate& predicate, int outcome);
MeasurementOutcome<DensityOperator> membership_branch(const DensityOperator& rho, const Predicate& predicate,
                                                      int outcome);

// Two sequential membership measurements: `in_a` in the computational basis,
// then `in_dual` after the forward transform, followed by the inverse
// transform. Both outcomes 1 is a projection onto |A>.
template <class State>
struct TwoStepOutcome {
  bool first;
  bool second;
  double probability;  // of the sampled (first, second) pair
  State post_state;
  bool accepted() const { return first && second; }
};

TwoStepOutcome<PureState> two_step_projection(const PureState& s, const Predicate& in_a, const Predicate& in_dual,
                                              Rng& rng);
TwoStepOutcome<DensityOperator> two_step_projection(const DensityOperator& rho, const Predicate& in_a,
                                                    const Predicate& in_dual, Rng& rng);
// Probability that both outcomes are 1, and the corresponding post state.
struct AcceptBranch {
  double probability;
  std::optional<DensityOperator> post_state;  // empty when probability is zero
};
AcceptBranch two_step_accept_branch(const DensityOperator& rho, const Predicate& in_a, const Predicate& in_dual);

// project_onto_subspace_state: outcome 1 iff both steps accept.
MeasurementOutcome<PureState> project_onto_subspace_state(const PureState& s, const Subspace& a, Rng& rng);

// Measurement {|A><A|, I - |A><A|}.
MeasurementOutcome<PureState> measure_subspace_projector(const PureState& s, const Subspace& a, Rng& rng);
MeasurementOutcome<DensityOperator> measure_subspace_projector(const DensityOperator& rho, const Subspace& a,
                                                               Rng& rng);

// ---------------------------------------------------------------- distances, reductions

double trace_distance(const DensityOperator& x, const DensityOperator& y);
double trace_distance(const PureState& x, const PureState& y);

// Quotients out global phase: aligns the largest-magnitude amplitude of each to the positive real axis.
bool equal_up_to_phase(const PureState& x, const PureState& y, double tol = kTolerance);

DensityOperator partial_trace_second(const BipartiteState& s);
DensityOperator partial_trace_first(const BipartiteState& s);

struct ConditionalState {
  bool accept;
  double probability;  // of the returned branch
  DensityOperator post;  // normalised state of register 2 given the branch
};

// Measures {|A><A|, I - |A><A|} on register 1 and returns the state of register 2.
ConditionalState conditional_second_register(const BipartiteState& s, const Subspace& a, Rng& rng);
ConditionalState conditional_second_register_branch(const BipartiteState& s, const Subspace& a, bool accept);
// Pr[register 1 passes], without sampling.
double first_register_accept_probability(const BipartiteState& s, const Subspace& a);

// Sampled simulation on the joint vector: measures register 1 with the
// two-step projection and returns the joint post state.
TwoStepOutcome<BipartiteState> two_step_projection_first(const BipartiteState& s, const Predicate& in_a,
                                                         const Predicate& in_dual, Rng& rng);
// Samples a computational-basis outcome of register 2.
std::uint64_t sample_second_register(const BipartiteState& s, Rng& rng);

// ---------------------------------------------------------------- gentle measurement

// Two-outcome projective measurement given by its accept projector.
struct BinaryMeasurement {
  std::function<Eigen::VectorXcd(const PureState&)> project_accept;  // unnormalised P|s>
  static BinaryMeasurement subspace_state_projector(const Subspace& a);
  static BinaryMeasurement membership(const Predicate& predicate);
};

struct GentleBound {
  double epsilon;
  double trace_distance;
  double bound;  // sqrt(epsilon)
};

class GentleBoundViolated : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Compares s with the accepted-branch state; throws GentleBoundViolated if
// trace_distance > sqrt(epsilon) + slack.
GentleBound gentle_measurement_bound_check(const PureState& s, const BinaryMeasurement& m, double slack = kTolerance);

// ---------------------------------------------------------------- state dump

// Header: "QLSV", q (u32 LE), lambda (u32 LE), reserved (u32 LE, 0); then
// little-endian (re, im) double pairs in lexicographic index order.
void write_state_dump(std::ostream& out, const PureState& s);
PureState read_state_dump(std::istream& in);
void write_state_dump_file(const std::string& path, const PureState& s);
PureState read_state_dump_file(const std::string& path);

}  // namespace qlease::quantum

#endif  // QLEASE_SUBSPACE_SIM_HPP
