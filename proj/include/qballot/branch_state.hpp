#pragma once

#include <span>
#include <vector>

#include "qballot/dense_state.hpp"
#include "qballot/layout.hpp"
#include "qballot/measurement.hpp"
#include "qballot/numeric.hpp"
#include "qballot/operator.hpp"

namespace qballot {

class Rng;

/// Per-branch state of one register group: either a computational basis
/// label or an explicit amplitude vector over the group's joint space.
class LocalFactor {
  public:
    static LocalFactor basis(Index label) { return LocalFactor(label, Vector()); }
    static LocalFactor vector(Vector amps) { return LocalFactor(kNoLabel, std::move(amps)); }

    bool is_basis() const { return label_ != kNoLabel; }
    Index label() const { return label_; }
    const Vector& amps() const { return amps_; }

    Complex at(Index x) const {
        if (is_basis()) {
            return x == label_ ? Complex(1.0) : Complex{};
        }
        return amps_(static_cast<Eigen::Index>(x));
    }

    /// Explicit amplitudes over a space of dimension `dim`.
    Vector dense(Index dim) const;

    double norm_squared() const { return is_basis() ? 1.0 : amps_.squaredNorm(); }

  private:
    static constexpr Index kNoLabel = static_cast<Index>(-1);
    LocalFactor(Index label, Vector amps) : label_(label), amps_(std::move(amps)) {}

    Index label_;
    Vector amps_;
};

/// ⟨a|b⟩ for two factors of the same group.
Complex overlap(const LocalFactor& a, const LocalFactor& b);

struct Branch {
    Complex coeff;
    std::vector<LocalFactor> factors;  // one per register group
};

/// Superposition Σ_b coeff_b ⊗_g factor_{b,g} over a fixed partition of the
/// registers into groups. Registers start as singleton groups; an operation
/// that entangles registers inside a branch fuses their groups (bounded by
/// kGroupBudget) and fused groups are split again whenever every branch
/// factorizes.
class BranchState {
  public:
    BranchState() = default;

    /// Validates structure and normalization (Gram norm within kNormTol).
    BranchState(RegisterLayout layout, std::vector<std::vector<Index>> groups, std::vector<Branch> branches);

    const RegisterLayout& layout() const { return layout_; }
    const std::vector<std::vector<Index>>& groups() const { return groups_; }
    const std::vector<Branch>& branches() const { return branches_; }
    Index register_count() const { return layout_.size(); }
    Index branch_count() const { return branches_.size(); }

    Index group_of(Index reg) const { return group_of_.at(reg); }
    Index group_dim(Index g) const;

    /// Builds without the normalization check; `branches` may be unnormalized.
    static BranchState unchecked(RegisterLayout layout, std::vector<std::vector<Index>> groups, std::vector<Branch> branches);

  private:
    void index_groups();

    RegisterLayout layout_;
    std::vector<std::vector<Index>> groups_;
    std::vector<Index> group_of_;
    std::vector<Branch> branches_;
};

/// ‖state‖² computed from the branch Gram matrix.
double norm_squared(const BranchState& state);

/// D branches, branch j = (1/√D) |j⟩^{⊗N}.
BranchState ghz_branches(Index dim, Index count);

BranchState apply_local(const BranchState& state, Index reg, const Matrix& u);
BranchState apply_local(const BranchState& state, Index reg, const Operator& u);
BranchState apply_joint(const BranchState& state, std::span<const Index> regs, const Matrix& u);
BranchState apply_joint(const BranchState& state, std::span<const Index> regs, const Operator& u);
/// Alias of apply_local, named after the branch backend.
inline BranchState apply_branch_local(const BranchState& state, Index reg, const Matrix& u) { return apply_local(state, reg, u); }

/// Every branch gains the same new singleton factor; the register is appended.
BranchState attach_register(const BranchState& state, Index dim, const LocalFactor& initial);
BranchState attach_register(const BranchState& state, const Vector& initial);

BranchState detach_register(const BranchState& state, Index reg, const Vector& expected);

std::vector<double> outcome_probabilities(const BranchState& state, std::span<const Index> regs, const Measurement& m);
Projection<BranchState> project(const BranchState& state, std::span<const Index> regs, const Measurement& m, Index outcome);
MeasureResult<BranchState> measure(const BranchState& state, std::span<const Index> regs, const Measurement& m, Rng& rng);
inline MeasureResult<BranchState> branch_measure(const BranchState& state, std::span<const Index> regs, const Measurement& m,
                                                 Rng& rng) {
    return measure(state, regs, m, rng);
}

DensityMatrix partial_trace(const BranchState& state, std::span<const Index> keep);
inline DensityMatrix branch_partial_trace(const BranchState& state, std::span<const Index> keep) { return partial_trace(state, keep); }

/// a ⊗ b; the registers of `a` come first.
BranchState tensor_product(const BranchState& a, const BranchState& b);

/// Exact dense expansion; throws BudgetError above kDenseBudget amplitudes.
DenseState to_dense(const BranchState& state);

}  // namespace qballot
