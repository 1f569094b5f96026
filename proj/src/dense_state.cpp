#include "qballot/dense_state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qballot/error.hpp"
#include "qballot/rng.hpp"

namespace qballot {

namespace {

Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }

void check_budget(const RegisterLayout& layout) {
    if (layout.total() > kDenseBudget) {
        throw BudgetError("dense state would need " + std::to_string(layout.total()) + " amplitudes (budget " +
                          std::to_string(kDenseBudget) + "); use the branch backend");
    }
}

/// Flattened positions of the measured registers' joint states and of the untouched remainder.
struct Gather {
    std::vector<Index> offsets;
    std::vector<Index> bases;
};

Gather gather(const DenseState& state, std::span<const Index> regs) {
    return {state.layout().offsets(regs), state.layout().bases(regs)};
}

/// (op ⊗ I) applied to the gathered registers, without renormalization.
Vector transform(const DenseState& state, const Gather& g, const Operator& op) {
    const Index joint = g.offsets.size();
    if (joint != op.dim()) {
        throw ValidationError("operator dimension " + std::to_string(op.dim()) + " does not match joint register dimension " +
                              std::to_string(joint));
    }
    const auto& offsets = g.offsets;
    const Vector& in = state.amplitudes();
    Vector out = Vector::Zero(in.size());
    if (const auto* mono = op.as_monomial()) {
        for (Index base : g.bases) {
            for (Index x = 0; x < joint; ++x) {
                const Complex v = mono->value[x];
                if (v != Complex{}) {
                    out(ei(base + offsets[mono->row[x]])) += v * in(ei(base + offsets[x]));
                }
            }
        }
        return out;
    }
    std::vector<Complex> sub_in(joint), sub_out(joint);
    for (Index base : g.bases) {
        for (Index x = 0; x < joint; ++x) {
            sub_in[x] = in(ei(base + offsets[x]));
        }
        op.apply(sub_in, sub_out);
        for (Index x = 0; x < joint; ++x) {
            out(ei(base + offsets[x])) = sub_out[x];
        }
    }
    return out;
}

Vector transform(const DenseState& state, std::span<const Index> regs, const Operator& op) {
    state.layout().joint_dim(regs);
    return transform(state, gather(state, regs), op);
}

/// Outcome weights of a computational-basis style measurement in one pass.
std::vector<double> diagonal_weights(const DenseState& state, const Gather& g, const DiagonalMeasurement& m) {
    std::vector<double> w(m.outcomes, 0.0);
    const Vector& in = state.amplitudes();
    for (Index base : g.bases) {
        for (Index x = 0; x < g.offsets.size(); ++x) {
            w[m.outcome_of[x]] += std::norm(in(ei(base + g.offsets[x])));
        }
    }
    return w;
}

Vector diagonal_projection(const DenseState& state, const Gather& g, const DiagonalMeasurement& m, Index outcome) {
    const Vector& in = state.amplitudes();
    Vector out = Vector::Zero(in.size());
    for (Index base : g.bases) {
        for (Index x = 0; x < g.offsets.size(); ++x) {
            if (m.outcome_of[x] == outcome) {
                out(ei(base + g.offsets[x])) = in(ei(base + g.offsets[x]));
            }
        }
    }
    return out;
}

double floored(double w) { return w < kProbabilityFloor ? 0.0 : w; }

Index common_dim(const RegisterLayout& layout, std::span<const Index> regs) {
    if (regs.empty()) {
        return 0;
    }
    const Index d = layout.dim(regs[0]);
    for (Index r : regs) {
        if (layout.dim(r) != d) {
            return 0;
        }
    }
    return d;
}

void check_measurement(const DenseState& state, std::span<const Index> regs, const Measurement& m) {
    if (regs.empty()) {
        throw ValidationError("measurement needs at least one register");
    }
    const Index joint = state.layout().joint_dim(regs);
    if (joint > kDenseBudget) {
        throw BudgetError("measured registers exceed the dense budget");
    }
    const Index d = common_dim(state.layout(), regs);
    if (std::holds_alternative<GhzMeasurement>(m) && d == 0) {
        throw ValidationError("GHZ measurement requires registers of equal dimension");
    }
    validate_measurement(m, joint, regs.size(), d);
}

std::vector<Operator> operators_for(const DenseState& state, std::span<const Index> regs, const Measurement& m) {
    check_measurement(state, regs, m);
    return outcome_operators(m, state.layout().joint_dim(regs), regs.size(), common_dim(state.layout(), regs));
}

}  // namespace

DenseState::DenseState(RegisterLayout layout, Vector amplitudes) : layout_(std::move(layout)), amps_(std::move(amplitudes)) {
    check_budget(layout_);
    if (static_cast<Index>(amps_.size()) != layout_.total()) {
        throw ValidationError("amplitude vector length " + std::to_string(amps_.size()) + " does not match layout size " +
                              std::to_string(layout_.total()));
    }
    if (!amps_.allFinite()) {
        throw ValidationError("state contains non-finite amplitudes");
    }
    const double n2 = amps_.squaredNorm();
    if (std::abs(std::sqrt(n2) - 1.0) > kNormTol) {
        throw ValidationError("state is not normalized (norm² = " + std::to_string(n2) + ")");
    }
}

DenseState DenseState::zero(RegisterLayout layout) {
    check_budget(layout);
    Vector v = Vector::Zero(ei(layout.total()));
    v(0) = 1.0;
    return DenseState(std::move(layout), std::move(v));
}

DenseState DenseState::normalized(RegisterLayout layout, Vector amplitudes) {
    const double n = amplitudes.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw ValidationError("cannot normalize a zero or non-finite vector");
    }
    return DenseState(std::move(layout), amplitudes / n);
}

DenseState make_uniform_ghz(Index dim, Index count) {
    if (count < 1) {
        throw ValidationError("GHZ state needs at least one register");
    }
    RegisterLayout layout = RegisterLayout::uniform(dim, count);
    check_budget(layout);
    Vector v = Vector::Zero(ei(layout.total()));
    Index repunit = 0;
    for (Index i = 0; i < count; ++i) {
        repunit = repunit * dim + 1;
    }
    const double a = 1.0 / std::sqrt(static_cast<double>(dim));
    for (Index j = 0; j < dim; ++j) {
        v(ei(j * repunit)) = a;
    }
    return DenseState(std::move(layout), std::move(v));
}

DenseState apply_local(const DenseState& state, Index reg, const Matrix& u) {
    return apply_joint(state, std::span<const Index>(&reg, 1), Operator::unitary(u));
}

DenseState apply_local(const DenseState& state, Index reg, const Operator& u) {
    return apply_joint(state, std::span<const Index>(&reg, 1), u);
}

DenseState apply_joint(const DenseState& state, std::span<const Index> regs, const Matrix& u) {
    return apply_joint(state, regs, Operator::unitary(u));
}

DenseState apply_joint(const DenseState& state, std::span<const Index> regs, const Operator& u) {
    if (regs.empty()) {
        throw ValidationError("operation needs at least one register");
    }
    return DenseState::normalized(state.layout(), transform(state, regs, u));
}

DenseState attach_register(const DenseState& state, const Vector& initial) {
    const auto dim = static_cast<Index>(initial.size());
    if (std::abs(initial.norm() - 1.0) > kNormTol) {
        throw ValidationError("attached register state must be normalized");
    }
    RegisterLayout layout = state.layout().with_register(dim);
    check_budget(layout);
    Vector v(ei(layout.total()));
    const Vector& a = state.amplitudes();
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        v.segment(i * ei(dim), ei(dim)) = a(i) * initial;
    }
    return DenseState(std::move(layout), std::move(v));
}

DenseState detach_register(const DenseState& state, Index reg, const Vector& expected) {
    const auto& layout = state.layout();
    if (layout.size() < 2) {
        throw ValidationError("cannot detach the only register");
    }
    const Index dim = layout.dim(reg);
    if (static_cast<Index>(expected.size()) != dim) {
        throw ValidationError("expected local state has wrong dimension");
    }
    // Contract ⟨expected| on the register; the remainder must carry all the norm.
    RegisterLayout rest = layout.without_register(reg);
    const auto offsets = layout.offsets(std::span<const Index>(&reg, 1));
    const auto bases = layout.bases(std::span<const Index>(&reg, 1));
    Vector v(ei(rest.total()));
    for (Index b = 0; b < bases.size(); ++b) {
        Complex acc{};
        for (Index x = 0; x < dim; ++x) {
            acc += std::conj(expected(ei(x))) * state.amplitude(bases[b] + offsets[x]);
        }
        v(ei(b)) = acc;
    }
    const double n = v.norm();
    if (std::abs(n - 1.0) > 1e-10) {
        throw InvariantError("register " + std::to_string(reg) + " is not in the expected product state (overlap " +
                             std::to_string(n) + ")");
    }
    return DenseState(std::move(rest), v / n);
}

std::vector<double> outcome_probabilities(const DenseState& state, std::span<const Index> regs, const Measurement& m) {
    if (const auto* dm = std::get_if<DiagonalMeasurement>(&m)) {
        check_measurement(state, regs, m);
        auto w = diagonal_weights(state, gather(state, regs), *dm);
        for (double& x : w) {
            x = floored(x);
        }
        return w;
    }
    const auto ops = operators_for(state, regs, m);
    const Gather g = gather(state, regs);
    std::vector<double> p;
    p.reserve(ops.size());
    for (const auto& op : ops) {
        p.push_back(floored(transform(state, g, op).squaredNorm()));
    }
    return p;
}

Projection<DenseState> project(const DenseState& state, std::span<const Index> regs, const Measurement& m, Index outcome) {
    Vector v;
    if (const auto* dm = std::get_if<DiagonalMeasurement>(&m)) {
        check_measurement(state, regs, m);
        if (outcome >= dm->outcomes) {
            throw ValidationError("outcome " + std::to_string(outcome) + " out of range");
        }
        v = diagonal_projection(state, gather(state, regs), *dm, outcome);
    } else {
        const auto ops = operators_for(state, regs, m);
        if (outcome >= ops.size()) {
            throw ValidationError("outcome " + std::to_string(outcome) + " out of range");
        }
        v = transform(state, gather(state, regs), ops[outcome]);
    }
    const double p = v.squaredNorm();
    if (p < kProbabilityFloor) {
        throw InvariantError("projection onto outcome " + std::to_string(outcome) + " has zero probability");
    }
    return {DenseState(state.layout(), v / std::sqrt(p)), p};
}

MeasureResult<DenseState> measure(const DenseState& state, std::span<const Index> regs, const Measurement& m, Rng& rng) {
    if (const auto* dm = std::get_if<DiagonalMeasurement>(&m)) {
        check_measurement(state, regs, m);
        const Gather g = gather(state, regs);
        auto p = diagonal_weights(state, g, *dm);
        for (double& x : p) {
            x = floored(x);
        }
        const Index k = sample_outcome(p, rng.uniform());
        Vector v = diagonal_projection(state, g, *dm, k);
        const double pk = v.squaredNorm();
        return {k, DenseState(state.layout(), v / std::sqrt(pk)), pk};
    }
    const auto ops = operators_for(state, regs, m);
    const Gather g = gather(state, regs);
    std::vector<Vector> projected;
    std::vector<double> p;
    for (const auto& op : ops) {
        projected.push_back(transform(state, g, op));
        p.push_back(floored(projected.back().squaredNorm()));
    }
    const Index k = sample_outcome(p, rng.uniform());
    const double pk = projected[k].squaredNorm();
    return {k, DenseState(state.layout(), projected[k] / std::sqrt(pk)), pk};
}

MeasureResult<DenseState> measure_projective(const DenseState& state, std::span<const Index> regs,
                                             std::vector<Matrix> projectors, Rng& rng, bool synthesize_remainder) {
    return measure(state, regs, ProjectorMeasurement{std::move(projectors), synthesize_remainder}, rng);
}

Complex inner_product(const DenseState& a, const DenseState& b) {
    if (!(a.layout() == b.layout())) {
        throw ValidationError("inner product of states with different layouts");
    }
    return a.amplitudes().dot(b.amplitudes());
}

DensityMatrix partial_trace(const DenseState& state, std::span<const Index> keep) {
    if (keep.empty()) {
        throw ValidationError("partial trace must keep at least one register");
    }
    const auto& layout = state.layout();
    const Index kd = layout.joint_dim(keep);
    if (kd * kd > kDenseBudget * 4) {
        throw BudgetError("reduced density matrix on the kept registers exceeds the dense budget");
    }
    const auto offsets = layout.offsets(keep);
    const auto bases = layout.bases(keep);
    Matrix rho = Matrix::Zero(ei(kd), ei(kd));
    for (Index base : bases) {
        for (Index r = 0; r < kd; ++r) {
            const Complex ar = state.amplitude(base + offsets[r]);
            if (ar == Complex{}) {
                continue;
            }
            for (Index c = r; c < kd; ++c) {
                rho(ei(r), ei(c)) += ar * std::conj(state.amplitude(base + offsets[c]));
            }
        }
    }
    for (Index r = 0; r < kd; ++r) {
        rho(ei(r), ei(r)) = rho(ei(r), ei(r)).real();
        for (Index c = 0; c < r; ++c) {
            rho(ei(r), ei(c)) = std::conj(rho(ei(c), ei(r)));
        }
    }
    return DensityMatrix(std::move(rho));
}

double max_amplitude_deviation(const DenseState& a, const DenseState& b) {
    if (!(a.layout() == b.layout())) {
        throw ValidationError("cannot compare states with different layouts");
    }
    Eigen::Index pivot = 0;
    a.amplitudes().cwiseAbs().maxCoeff(&pivot);
    auto aligned = [pivot](const Vector& v) -> Vector {
        const Complex p = v(pivot);
        const double mag = std::abs(p);
        return mag > 0 ? Vector(v * (std::conj(p) / mag)) : v;
    };
    return (aligned(a.amplitudes()) - aligned(b.amplitudes())).cwiseAbs().maxCoeff();
}

}  // namespace qballot

namespace qballot {

DenseState tensor_product(const DenseState& a, const DenseState& b) {
    std::vector<Index> dims = a.layout().dims();
    dims.insert(dims.end(), b.layout().dims().begin(), b.layout().dims().end());
    RegisterLayout layout(std::move(dims));
    if (layout.total() > kDenseBudget) {
        throw BudgetError("tensor product would need " + std::to_string(layout.total()) + " amplitudes (budget " +
                          std::to_string(kDenseBudget) + "); use the branch backend");
    }
    const auto& va = a.amplitudes();
    const auto& vb = b.amplitudes();
    Vector v(va.size() * vb.size());
    for (Eigen::Index i = 0; i < va.size(); ++i) {
        v.segment(i * vb.size(), vb.size()) = va(i) * vb;
    }
    return DenseState::normalized(std::move(layout), std::move(v));
}

}  // namespace qballot
