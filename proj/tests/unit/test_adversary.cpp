#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "qballot/adversary.hpp"
#include "qballot/error.hpp"
#include "qballot/rng.hpp"

using namespace qballot;

namespace {

// Trapezoid quadrature of the Fejér density written as |Σ e^{ijx}|²/(2πD).
double kernel_direct(Index d, double x) {
    Complex acc{};
    for (Index j = 0; j < d; ++j) acc += unit_phase(static_cast<double>(j) * x);
    return std::norm(acc) / (kTwoPi * static_cast<double>(d));
}

std::vector<double> analytic_row(Index d, Index s, long long m) {
    std::vector<double> p(d);
    for (Index q = 0; q < d; ++q) p[q] = analytic_pq(d, s, m, q);
    return p;
}

}  // namespace

TEST(PhaseEstimate, DensityMatchesKernelAndIntegrates) {
    for (Index d : {1u, 2u, 5u, 8u}) {
        double integral = 0.0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) {
            const double x = kTwoPi * (i + 0.5) / n;
            EXPECT_NEAR(phase_density(d, x), kernel_direct(d, x), 1e-12);
            integral += phase_density(d, x) * kTwoPi / n;
        }
        EXPECT_NEAR(integral, 1.0, 1e-6);
        EXPECT_NEAR(phase_cdf(d, kTwoPi), 1.0, 1e-12);
    }
}

TEST(PhaseEstimate, GridRefinesToTolerance) {
    const auto& s8 = PhaseSampler::for_dim(8);
    EXPECT_GE(s8.grid_cells(), 4096u);
    EXPECT_LE(s8.max_interpolation_error(), 1e-7);
    EXPECT_EQ(PhaseSampler::for_dim(1).grid_cells(), 4096u);
}

TEST(PhaseEstimate, CircularMeanAndUniformDegenerateCase) {
    Rng rng(5);
    double c = 0.0, s = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double t = sample_phase_estimate({8, 1.0}, rng);
        ASSERT_GE(t, 0.0);
        ASSERT_LT(t, kTwoPi);
        c += std::cos(t);
        s += std::sin(t);
    }
    EXPECT_NEAR(std::atan2(s, c), 1.0, 0.01);

    std::vector<int> bins(8, 0);
    for (int i = 0; i < 80000; ++i) ++bins[static_cast<int>(sample_phase_estimate({1, 0.3}, rng) / kTwoPi * 8)];
    for (int b : bins) EXPECT_NEAR(b, 10000, 5 * std::sqrt(10000.0));
}

TEST(PhaseEstimate, HistogramMatchesDensityChiSquare) {
    Rng rng(9);
    const Index d = 8;
    const int bins = 64, n = 100000;
    std::vector<int> counts(bins, 0);
    for (int i = 0; i < n; ++i) ++counts[static_cast<int>(sample_phase_estimate({d, 0.0}, rng) / kTwoPi * bins)];
    double chi2 = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double p = phase_cdf(d, kTwoPi * (b + 1) / bins) - phase_cdf(d, kTwoPi * b / bins);
        const double e = p * n;
        chi2 += (counts[b] - e) * (counts[b] - e) / e;
    }
    // 63 dof; upper 0.001 quantile is about 103.4.
    EXPECT_LT(chi2, 103.4);
}

TEST(Cheater, ClosedFormValuesAndRegime) {
    EXPECT_NEAR(analytic_pq(8, 5, 6, 1), 0.1514, 5e-5);
    for (Index d : {3u, 5u, 8u}) {
        for (Index s = d / 2 + 1; s < d; ++s) {
            for (long long m = 0; m < static_cast<long long>(d); ++m) {
                auto p = analytic_row(d, s, m);
                EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
                const auto arg = std::max_element(p.begin(), p.end()) - p.begin();
                EXPECT_EQ(static_cast<Index>(arg), mod(m - static_cast<long long>(s), d));
                for (double v : p) EXPECT_GT(v, 0.0);
                EXPECT_LT(analytic_pq_contrast(d, s), 1.0);
            }
        }
    }
    EXPECT_THROW(analytic_pq(8, 4, 0, 0), ValidationError);
    EXPECT_THROW(analytic_pq(8, 8, 0, 0), ValidationError);
    EXPECT_THROW(analytic_pq(8, 5, 0, 8), ValidationError);
}

TEST(Cheater, ExactSecretsHonestPathReadsTally) {
    // With exact secrets one application removes one yes vote: m = 2 honest yes, cheater no, minus one.
    Rng rng(3);
    const Index d = 5;
    AuthoritySecrets sec{2, 1, 0.4};
    CheaterPlan plan{1, sec.theta_y(d), sec.theta_n(d), std::nullopt};
    for (Backend b : {Backend::dense, Backend::branch}) {
        auto out = run_cheater_attack(d, sec, {1, 0, 1}, plan, 3, b, rng);
        ASSERT_TRUE(out.readout.m_inferred);
        EXPECT_EQ(*out.readout.m_inferred, 1u);
        EXPECT_NEAR(out.distribution[1], 1.0, 1e-10);
    }
    plan.s = 0;
    EXPECT_THROW(run_cheater_attack(d, sec, {1, 0, 1}, plan, 3, Backend::dense, rng), ValidationError);
}

TEST(Cheater, ConditionalMatchesClosedExpression) {
    const Index d = 4;
    AuthoritySecrets sec{1, 0, 0.37};
    Rng rng(1);
    const std::vector<std::vector<Index>> honest{{0, 0}, {1, 0}, {1, 1}};
    double worst = 0.0;
    for (const auto& votes : honest) {
        const long long m = std::accumulate(votes.begin(), votes.end(), 0LL);
        for (Index s = 1; s < d; ++s) {
            for (int a = 0; a < 16; a += 5) {
                for (int b = 0; b < 16; b += 3) {
                    const double ty = kTwoPi * a / 16, tn = kTwoPi * b / 16;
                    for (Index r = 0; r < d; ++r) {
                        auto out = run_cheater_attack(d, sec, votes, {s, ty, tn, r}, votes.size(), Backend::dense, rng);
                        auto want = cheater_conditional_pq(d, sec, s, m, r, ty, tn);
                        for (Index q = 0; q < d; ++q) worst = std::max(worst, std::abs(out.distribution[q] - want[q]));
                    }
                }
            }
        }
    }
    EXPECT_LE(worst, 1e-10);
}

TEST(Cheater, MonteCarloMatchesClosedFormAndPosition) {
    Rng rng(77);
    auto h = monte_carlo_pq(8, 5, 6, 20000, rng);
    EXPECT_EQ(h.trials, 20000u);
    EXPECT_EQ(h.errors + std::accumulate(h.counts.begin(), h.counts.end(), Index{0}), h.trials);
    EXPECT_LE(tv_distance(h.counts, analytic_row(8, 5, 6)), 0.03);
    EXPECT_EQ(monte_carlo_pq(8, 5, 6, 0, rng).trials, 0u);

    // Full protocol at D=5, N=4: cheater position does not matter.
    AuthoritySecrets sec{1, 0, 0.2};
    Rng r1(4), r2(4);
    auto last = cheater_histogram(5, sec, {1, 1, 0}, 3, 3, 4000, Backend::branch, r1);
    auto first = cheater_histogram(5, sec, {1, 1, 0}, 3, 0, 4000, Backend::branch, r2);
    std::vector<double> pf(5);
    const double total = std::accumulate(first.counts.begin(), first.counts.end(), 0.0);
    for (Index q = 0; q < 5; ++q) pf[q] = first.counts[q] / total;
    EXPECT_LE(tv_distance(last.counts, pf), 0.05);
}

TEST(Eavesdrop, MitmLeaksAndRepairs) {
    Rng rng(2);
    for (Index v : {0u, 1u}) {
        std::vector<Index> votes{1, v, 0};
        for (Backend b : {Backend::dense, Backend::branch}) {
            auto o = run_mitm_traveling(4, votes, 1, b, rng);
            EXPECT_FALSE(o.detected);
            EXPECT_EQ(o.leaked_vote, v);
            EXPECT_EQ(o.tally, 1 + v);
        }
        auto broken = run_mitm_traveling(4, votes, 1, Backend::dense, rng, false);
        EXPECT_EQ(broken.tally, 1u);
    }
}

TEST(Eavesdrop, SwapAttackLeaksWithoutCheck) {
    Rng rng(8);
    const Index d = 3;
    for (Index mask = 0; mask < 8; ++mask) {
        std::vector<Index> votes{mask & 1, (mask >> 1) & 1, (mask >> 2) & 1};
        for (Backend b : {Backend::dense, Backend::branch}) {
            auto o = run_swap_attack(d, votes, 0, {}, b, rng);
            EXPECT_FALSE(o.detected);
            EXPECT_EQ(o.leaked_vote, votes[0]);
            EXPECT_EQ(o.tally, (votes[0] + votes[1] + votes[2]) % d);
        }
        auto o = run_swap_attack(d, votes, 0, {{1, 2}}, Backend::dense, rng);
        EXPECT_FALSE(o.detected);
        EXPECT_EQ(o.leaked_vote, votes[0]);
    }
}

TEST(Eavesdrop, SwapAttackDetectionRate) {
    const Index d = 4;
    auto rep = run_trials("swap", 4000, 21, 1, [&](Rng& r) {
        return run_swap_attack(d, {1, 0, 1}, 0, {{0, 1}}, Backend::branch, r);
    });
    const double p = 1.0 - 1.0 / d;
    EXPECT_NEAR(rep.detection_rate(), p, 4 * std::sqrt(p * (1 - p) / 4000));
    EXPECT_EQ(rep.leaks + rep.detections, rep.trials);
    EXPECT_EQ(std::accumulate(rep.histogram.begin(), rep.histogram.end(), Index{0}), rep.leaks);
}

TEST(Eavesdrop, EntanglingAttackAnalysis) {
    Rng rng(12);
    const Index d = 3;
    auto id = analyze_entangling_attack(d, 3, 0, 1, Matrix::Identity(2 * d, 2 * d));
    EXPECT_NEAR(id.analytic_non_detection, 1.0, 1e-12);
    EXPECT_LE(id.rho_e1_spread, 1e-12);

    auto sw = analyze_entangling_attack(d, 3, 0, 1, swap_attack_unitary(d));
    EXPECT_NEAR(sw.analytic_non_detection, 1.0 / d, 1e-12);
    EXPECT_NEAR(sw.simulated_non_detection, 1.0 / d, 1e-12);
    EXPECT_GT(sw.rho_e1_spread_unchecked, 0.5);

    for (int k = 0; k < 5; ++k) {
        auto pf = analyze_entangling_attack(d, 3, 0, 2, product_form_unitary(d, 2, rng));
        EXPECT_NEAR(pf.simulated_non_detection, 1.0, 1e-12);
        EXPECT_LE(pf.rho_e1_spread, 1e-12);
        EXPECT_LE(pf.rho_e1_spread_unchecked, 1e-12);
    }
    Matrix bad = Matrix::Ones(2 * d, 2 * d);
    EXPECT_THROW(run_entangling_attack(d, {1, 0}, 0, bad, {{0, 1}}, Backend::dense, rng), ValidationError);
}

TEST(Eavesdrop, EntanglingSwapMatchesSwapAttack) {
    const Index d = 3;
    auto rep = run_trials("entangling", 3000, 4, 1, [&](Rng& r) {
        return run_entangling_attack(d, {1, 1, 0}, 0, swap_attack_unitary(d), {{0, 2}}, Backend::dense, r);
    });
    EXPECT_NEAR(rep.detection_rate(), 1.0 - 1.0 / d, 4 * std::sqrt(2.0 / 9 / 3000));
}

TEST(Eavesdrop, PairCheck) {
    Rng rng(6);
    const Index d = 4;
    auto ghz = make_uniform_ghz(d, 3);
    auto r = run_pair_check(ghz, {0, 2}, rng);
    EXPECT_TRUE(r.pass);
    EXPECT_LE(max_amplitude_deviation(r.state, ghz), 1e-12);
    EXPECT_THROW(run_pair_check(ghz, {1, 1}, rng), ValidationError);

    DenseState prod(RegisterLayout::uniform(d, 2), Vector::Unit(d * d, 0 * d + 1));
    EXPECT_FALSE(run_pair_check(prod, {0, 1}, rng).pass);
}

TEST(Eavesdrop, ClassicalBaseline) {
    auto rep = run_trials("classical", 2000, 3, 1, [](Rng& r) { return run_classical_eavesdrop(4, {0, 1, 1, 0}, 1, r); });
    EXPECT_EQ(rep.detections, 0u);
    EXPECT_EQ(rep.leaks_correct, rep.trials);
    for (const auto& o : rep.outcomes) EXPECT_EQ(o.tally, 2u);
}
