#pragma once

#include <span>
#include <vector>

#include "qballot/density_matrix.hpp"
#include "qballot/layout.hpp"
#include "qballot/measurement.hpp"
#include "qballot/numeric.hpp"
#include "qballot/operator.hpp"

namespace qballot {

class Rng;

/// Full tensor-product state vector over a register layout. Values are
/// immutable; every operation returns a new, renormalized state.
class DenseState {
  public:
    /// Throws BudgetError above kDenseBudget amplitudes and ValidationError
    /// when the vector is not normalized within kNormTol.
    DenseState(RegisterLayout layout, Vector amplitudes);

    /// Product state |0…0⟩.
    static DenseState zero(RegisterLayout layout);

    const RegisterLayout& layout() const { return layout_; }
    const Vector& amplitudes() const { return amps_; }
    Complex amplitude(Index flat) const { return amps_(static_cast<Eigen::Index>(flat)); }
    Index register_count() const { return layout_.size(); }

    /// Builds a state from arbitrary non-zero amplitudes by normalizing them.
    static DenseState normalized(RegisterLayout layout, Vector amplitudes);

  private:
    RegisterLayout layout_;
    Vector amps_;
};

template <class S>
struct Projection {
    S state;
    double probability = 0.0;
};

template <class S>
struct MeasureResult {
    Index outcome = 0;
    S state;
    double probability = 0.0;
};

/// (1/√D) Σ_j |j⟩^{⊗N}.
DenseState make_uniform_ghz(Index dim, Index count);

DenseState apply_local(const DenseState& state, Index reg, const Matrix& u);
DenseState apply_local(const DenseState& state, Index reg, const Operator& u);
DenseState apply_joint(const DenseState& state, std::span<const Index> regs, const Matrix& u);
DenseState apply_joint(const DenseState& state, std::span<const Index> regs, const Operator& u);

/// Appends a register in the given local state (least significant digit).
DenseState attach_register(const DenseState& state, const Vector& initial);

/// Removes a register that is in the product state `expected`; throws
/// InvariantError when the register is entangled or in a different state.
DenseState detach_register(const DenseState& state, Index reg, const Vector& expected);

std::vector<double> outcome_probabilities(const DenseState& state, std::span<const Index> regs, const Measurement& m);
Projection<DenseState> project(const DenseState& state, std::span<const Index> regs, const Measurement& m, Index outcome);
MeasureResult<DenseState> measure(const DenseState& state, std::span<const Index> regs, const Measurement& m, Rng& rng);

/// Projective measurement given as explicit projectors on `regs`; when
/// `synthesize_remainder` is set the complement I − ΣP is appended as the last outcome.
MeasureResult<DenseState> measure_projective(const DenseState& state, std::span<const Index> regs,
                                             std::vector<Matrix> projectors, Rng& rng,
                                             bool synthesize_remainder = false);

Complex inner_product(const DenseState& a, const DenseState& b);

/// a ⊗ b; the registers of `a` come first.
DenseState tensor_product(const DenseState& a, const DenseState& b);

DensityMatrix partial_trace(const DenseState& state, std::span<const Index> keep);

inline DenseState to_dense(const DenseState& state) { return state; }

/// Max-amplitude difference after aligning both states' global phase on the
/// largest amplitude of `a`.
double max_amplitude_deviation(const DenseState& a, const DenseState& b);

}  // namespace qballot
