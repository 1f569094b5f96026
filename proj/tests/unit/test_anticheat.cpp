#include <gtest/gtest.h>

#include <cmath>

#include "qballot/anticheat.hpp"
#include "qballot/error.hpp"
#include "qballot/rng.hpp"

using namespace qballot;

TEST(AntiCheat, SecretValidation) {
    EXPECT_NO_THROW(validate_secrets({1, 0, 0.1}, 4, 3));
    try {
        validate_secrets({2, 0, 0.1}, 5, 3);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("requires (l_y-l_n)N < D"), std::string::npos);
    }
    EXPECT_THROW(validate_secrets({0, 1, 0.1}, 5, 1), ValidationError);
    EXPECT_THROW(validate_secrets({1, 0, kTwoPi / 4}, 4, 1), ValidationError);
    Rng rng(1);
    for (int i = 0; i < 50; ++i) EXPECT_NO_THROW(validate_secrets(draw_secrets(7, 3, rng), 7, 3));
}

TEST(AntiCheat, OperatorsAreUnitary) {
    for (Index r = 0; r < 4; ++r) {
        EXPECT_TRUE(is_unitary(correction_w(4, r, 0.3)));
        EXPECT_TRUE(is_unitary(disentangler(4, r)));
    }
}

TEST(AntiCheat, HonestRoundsAreDeterministic) {
    Rng rng(2);
    for (auto variant : {AntiCheatVariant::distributed, AntiCheatVariant::traveling}) {
        for (Backend b : {Backend::dense, Backend::branch}) {
            for (Index mask = 0; mask < 8; ++mask) {
                std::vector<Index> votes{mask & 1, (mask >> 1) & 1, (mask >> 2) & 1};
                const Index m = votes[0] + votes[1] + votes[2];
                auto sec = draw_secrets(7, 3, rng);
                auto res = run_round(7, votes, sec, {variant, b, 0}, rng);
                ASSERT_TRUE(res.readout.q);
                EXPECT_EQ(*res.readout.q, m * static_cast<Index>(sec.gap()));
                EXPECT_EQ(res.readout.m_inferred, m);
                EXPECT_FALSE(res.readout.cheat_detected);
                EXPECT_NEAR(res.distribution[m * sec.gap()], 1.0, 1e-10);
            }
        }
    }
}

TEST(AntiCheat, ReadoutInterpretation) {
    AuthoritySecrets sec{3, 1, 0.0};
    EXPECT_EQ(interpret_readout(4, 7, 3, sec).m_inferred, 2u);
    EXPECT_TRUE(interpret_readout(3, 7, 3, sec).cheat_detected);
    EXPECT_TRUE(interpret_readout(7, 7, 3, sec).cheat_detected);
    EXPECT_FALSE(interpret_readout(7, 7, 3, sec).q);
}

TEST(AntiCheat, WrongTemplateIsFlaggedOrMiscounted) {
    // A voter who prepares a state at a guessed angle breaks the deterministic readout.
    Rng rng(3);
    const Index d = 5;
    AuthoritySecrets sec{1, 0, 0.4};
    auto [ballot, kits] = setup<DenseState>(d, 2, sec, AntiCheatVariant::distributed);
    ballot = vote_distributed(ballot, 0, kits[0].yes, true, rng).ballot;
    ballot = vote_distributed(ballot, 1, VotingQudit{0.0}, false, rng).ballot;
    ballot = authority_correct(ballot, sec);
    auto dist = readout_distribution(ballot);
    EXPECT_LT(*std::max_element(dist.begin(), dist.end()), 1.0 - 1e-6);
}

TEST(AntiCheat, RepeatedRoundsAggregate) {
    Rng rng(4);
    AuthoritySecrets sec{1, 0, 0.2};
    auto rep = run_repeated(5, {1, 1, 0}, sec, 4, {}, rng);
    EXPECT_EQ(rep.rounds.size(), 4u);
    EXPECT_FALSE(rep.cheat_detected);
    ReadoutResult a{2, 2, false}, b{3, 3, false};
    EXPECT_TRUE(aggregate_rounds({a, b}).cheat_detected);
}

TEST(AntiCheat, BackendsAgree) {
    const Index d = 4;
    AuthoritySecrets sec{1, 0, 0.5};
    for (auto variant : {AntiCheatVariant::distributed, AntiCheatVariant::traveling}) {
        Rng r1(9), r2(9);
        auto [bd, kd] = setup<DenseState>(d, 3, sec, variant);
        auto [bb, kb] = setup<BranchState>(d, 3, sec, variant);
        for (Index k = 0; k < 3; ++k) {
            const bool yes = k != 1;
            if (variant == AntiCheatVariant::distributed) {
                bd = vote_distributed(bd, k, yes ? kd[k].yes : kd[k].no, yes, r1).ballot;
                bb = vote_distributed(bb, k, yes ? kb[k].yes : kb[k].no, yes, r2).ballot;
            } else {
                bd = vote_traveling(bd, k, yes ? kd[k].yes : kd[k].no, yes, sec, r1).ballot;
                bb = vote_traveling(bb, k, yes ? kb[k].yes : kb[k].no, yes, sec, r2).ballot;
            }
            EXPECT_LE(max_amplitude_deviation(bd.state, to_dense(bb.state)), 1e-12);
        }
    }
}
