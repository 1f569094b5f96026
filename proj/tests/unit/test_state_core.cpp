#include <gtest/gtest.h>

#include <cmath>

#include "qballot/dense_state.hpp"
#include "qballot/error.hpp"
#include "qballot/rng.hpp"

using namespace qballot;

namespace {

std::vector<Index> regs(std::initializer_list<Index> r) { return r; }

}  // namespace

TEST(DenseState, GhzAmplitudes) {
    auto s = make_uniform_ghz(3, 3);
    for (Index i = 0; i < 27; ++i) {
        const bool diag = i == 0 || i == 13 || i == 26;
        EXPECT_NEAR(std::abs(s.amplitude(i)), diag ? 1.0 / std::sqrt(3.0) : 0.0, 1e-15) << i;
    }
    auto one = make_uniform_ghz(2, 1);
    EXPECT_NEAR(one.amplitude(0).real(), std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(one.amplitude(1).real(), std::sqrt(0.5), 1e-15);
}

TEST(DenseState, BudgetAndValidation) {
    EXPECT_THROW(make_uniform_ghz(2, 23), BudgetError);
    EXPECT_THROW(make_uniform_ghz(1, 2), ValidationError);
    Vector bad = Vector::Zero(4);
    bad(0) = 2.0;
    EXPECT_THROW(DenseState(RegisterLayout::uniform(2, 2), bad), ValidationError);
}

TEST(DenseState, ShiftProducesShiftedBallot) {
    const Index d = 4;
    auto s = apply_local(make_uniform_ghz(d, 2), 0, ops::shift(d, 1));
    for (Index j = 0; j < d; ++j) {
        EXPECT_NEAR(std::abs(s.amplitude(((j + 1) % d) * d + j)), 0.5, 1e-15);
    }
}

TEST(DenseState, ClockGivesPhaseBallot) {
    const Index d = 3, n = 3;
    auto s = apply_local(make_uniform_ghz(d, n), 1, ops::clock(d, 1));
    for (Index j = 0; j < d; ++j) {
        const Index flat = j * 9 + j * 3 + j;
        const Complex expect = unit_phase(kTwoPi * static_cast<double>(j) / d) / std::sqrt(3.0);
        EXPECT_NEAR(std::abs(s.amplitude(flat) - expect), 0.0, 1e-14);
    }
}

TEST(DenseState, RejectsNonUnitary) {
    Matrix m = Matrix::Identity(2, 2) * 2.0;
    EXPECT_THROW(apply_local(make_uniform_ghz(2, 2), 0, m), ValidationError);
    EXPECT_THROW(apply_local(make_uniform_ghz(2, 2), 0, ops::identity(3)), ValidationError);
}

TEST(DenseState, SwapExchangesRegisters) {
    const Index d = 3;
    for (Index k = 0; k < d; ++k) {
        for (Index j = 0; j < d; ++j) {
            Vector v = Vector::Zero(d * d);
            v(k * d + j) = 1.0;
            DenseState s(RegisterLayout::uniform(d, 2), v);
            auto out = apply_joint(s, regs({0, 1}), ops::swap(d));
            EXPECT_NEAR(std::abs(out.amplitude(j * d + k)), 1.0, 1e-15);
        }
    }
}

TEST(DenseState, PartialTraceOfBallotIsMixed) {
    for (Index d = 2; d <= 4; ++d) {
        auto s = make_uniform_ghz(d, 3);
        for (Index k = 0; k < 3; ++k) {
            auto rho = partial_trace(s, regs({k}));
            EXPECT_LE(trace_distance(rho, DensityMatrix::maximally_mixed(d)), 1e-12);
        }
        auto full = partial_trace(s, regs({0, 1, 2}));
        auto pure = DensityMatrix::pure(s.amplitudes());
        EXPECT_LE((full.entries() - pure.entries()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(DenseState, PartialTraceOfProduct) {
    Vector v = Vector::Zero(4);
    v(0) = v(1) = std::sqrt(0.5);
    DenseState s(RegisterLayout::uniform(2, 2), v);
    auto rho = partial_trace(s, regs({0}));
    EXPECT_NEAR(rho(0, 0).real(), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(rho(1, 1)), 0.0, 1e-15);
}

TEST(DenseState, TraceDistances) {
    auto a = DensityMatrix::pure(ops::basis(2, 0));
    auto b = DensityMatrix::pure(ops::basis(2, 1));
    EXPECT_NEAR(trace_distance(a, a), 0.0, 1e-15);
    EXPECT_NEAR(trace_distance(a, b), 1.0, 1e-14);
    EXPECT_NEAR(trace_distance(DensityMatrix::maximally_mixed(2), a), 0.5, 1e-14);
}

TEST(DenseState, MeasurePhaseBasisIsDeterministic) {
    const Index d = 5;
    Rng rng(3);
    for (Index m = 0; m < d; ++m) {
        auto s = make_uniform_ghz(d, 2);
        for (Index k = 0; k < m; ++k) {
            s = apply_local(s, 0, ops::clock(d, 1));
        }
        auto r = measure(s, regs({0, 1}), measurements::phase_ghz(d, true), rng);
        EXPECT_EQ(r.outcome, m);
        EXPECT_NEAR(r.probability, 1.0, 1e-12);
    }
}

TEST(DenseState, AgreementCheckOnBallot) {
    Rng rng(1);
    auto s = make_uniform_ghz(3, 3);
    auto r = measure(s, regs({0, 1}), measurements::agreement(3, 2), rng);
    EXPECT_EQ(r.outcome, 1u);
    EXPECT_NEAR(r.probability, 1.0, 1e-12);
    EXPECT_LE(max_amplitude_deviation(s, r.state), 1e-12);
}

TEST(DenseState, ProjectiveMeasurement) {
    Rng rng(2);
    DenseState s = DenseState::zero(RegisterLayout::uniform(2, 1));
    std::vector<Matrix> p{ops::basis(2, 0) * ops::basis(2, 0).adjoint(), ops::basis(2, 1) * ops::basis(2, 1).adjoint()};
    auto r = measure_projective(s, regs({0}), p, rng);
    EXPECT_EQ(r.outcome, 0u);
    EXPECT_NEAR(r.probability, 1.0, 1e-15);
    std::vector<Matrix> incomplete{p[0]};
    EXPECT_THROW(measure_projective(s, regs({0}), incomplete, rng), ValidationError);
    auto syn = measure_projective(s, regs({0}), incomplete, rng, true);
    EXPECT_EQ(syn.outcome, 0u);
}

TEST(DenseState, InnerProducts) {
    const Index d = 4;
    auto psi0 = make_uniform_ghz(d, 2);
    auto psi1 = apply_local(psi0, 0, ops::shift(d, 1));
    EXPECT_NEAR(std::abs(inner_product(psi0, psi0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(inner_product(psi0, psi1)), 0.0, 1e-15);
}

TEST(DenseState, AttachDetach) {
    auto s = make_uniform_ghz(3, 2);
    auto t = attach_register(s, ops::basis(2, 1));
    EXPECT_EQ(t.layout().dims(), (std::vector<Index>{3, 3, 2}));
    auto back = detach_register(t, 2, ops::basis(2, 1));
    EXPECT_LE(max_amplitude_deviation(s, back), 1e-15);
    EXPECT_THROW(detach_register(t, 2, ops::basis(2, 0)), InvariantError);
    EXPECT_THROW(detach_register(s, 0, ops::basis(3, 0)), InvariantError);
}

TEST(DenseState, BornCompleteness) {
    Rng rng(5);
    Vector v = ops::random_state(27, rng);
    DenseState s(RegisterLayout::uniform(3, 3), v);
    auto p = outcome_probabilities(s, regs({2, 0}), measurements::computational(9));
    double sum = 0.0;
    for (double x : p) sum += x;
    EXPECT_NEAR(sum, 1.0, 1e-10);
    auto u = ops::haar_unitary(9, rng);
    auto w = apply_joint(s, regs({1, 2}), u);
    EXPECT_NEAR(w.amplitudes().norm(), 1.0, 1e-10);
}
