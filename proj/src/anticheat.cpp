#include "qballot/anticheat.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qballot/error.hpp"
#include "qballot/rng.hpp"

namespace qballot {

namespace {

Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }

template <class S>
void check_voter(const AntiCheatBallot<S>& b, Index voter, AntiCheatVariant expected) {
    if (b.variant != expected) {
        throw ValidationError("ballot was prepared for the other anti-cheat variant");
    }
    if (voter >= b.voters) {
        throw ValidationError("voter index " + std::to_string(voter) + " out of range");
    }
    if (b.voted[voter]) {
        throw ValidationError("voter " + std::to_string(voter) + " has already voted");
    }
    if (b.corrected) {
        throw ValidationError("ballot has already been corrected by the authority");
    }
}

template <class S>
MeasureResult<S> measure_or_project(const S& s, std::span<const Index> regs, const Measurement& m, Rng& rng,
                                    std::optional<Index> forced) {
    if (!forced) {
        return measure(s, regs, m, rng);
    }
    auto p = project(s, regs, m, *forced);
    return {*forced, std::move(p.state), p.probability};
}

}  // namespace

double AuthoritySecrets::theta_y(Index dim) const { return kTwoPi * static_cast<double>(l_y) / static_cast<double>(dim) + delta; }

double AuthoritySecrets::theta_n(Index dim) const { return kTwoPi * static_cast<double>(l_n) / static_cast<double>(dim) + delta; }

void validate_secrets(const AuthoritySecrets& s, Index dim, Index voters) {
    const auto d = static_cast<long long>(dim);
    if (dim < 2) {
        throw ValidationError("requires qudit dimension D >= 2");
    }
    if (voters < 1) {
        throw ValidationError("requires N >= 1 voters");
    }
    if (s.l_n < 0 || s.l_y >= d) {
        throw ValidationError("requires 0 <= l_n and l_y < D");
    }
    if (s.l_y <= s.l_n) {
        throw ValidationError("requires l_y > l_n");
    }
    if (!(s.delta >= 0.0) || !(s.delta < kTwoPi / static_cast<double>(dim))) {
        throw ValidationError("requires 0 <= delta < 2*pi/D");
    }
    if (s.gap() * static_cast<long long>(voters) >= d) {
        throw ValidationError("requires (l_y-l_n)N < D (got (" + std::to_string(s.l_y) + "-" + std::to_string(s.l_n) + ")*" +
                              std::to_string(voters) + " >= " + std::to_string(dim) + ")");
    }
}

AuthoritySecrets draw_secrets(Index dim, Index voters, Rng& rng) {
    if (voters < 1 || dim <= voters) {
        throw ValidationError("requires (l_y-l_n)N < D, which needs D > N");
    }
    const auto d = static_cast<long long>(dim);
    const long long max_gap = (d - 1) / static_cast<long long>(voters);
    std::vector<std::pair<long long, long long>> options;
    for (long long ln = 0; ln < d; ++ln) {
        for (long long ly = ln + 1; ly < d && ly - ln <= max_gap; ++ly) {
            options.emplace_back(ly, ln);
        }
    }
    const auto pick = options[rng.uniform_int(options.size())];
    AuthoritySecrets s{pick.first, pick.second, rng.uniform() * kTwoPi / static_cast<double>(dim)};
    validate_secrets(s, dim, voters);
    return s;
}

Matrix correction_w(Index dim, Index r, double delta) {
    Matrix w = Matrix::Identity(ei(dim), ei(dim));
    const Complex phase = unit_phase(-static_cast<double>(dim) * delta);
    for (Index k = 0; k < r && k < dim; ++k) {
        w(ei(k), ei(k)) = phase;
    }
    return w;
}

Matrix disentangler(Index dim, Index r) {
    Matrix u = Matrix::Zero(ei(dim * dim), ei(dim * dim));
    for (Index j = 0; j < dim; ++j) {
        for (Index k = 0; k < dim; ++k) {
            const Index out = mod(static_cast<long long>(k + r) - static_cast<long long>(j), dim);
            u(ei(j * dim + out), ei(j * dim + k)) = 1.0;
        }
    }
    return u;
}

ReadoutResult interpret_readout(Index outcome, Index dim, Index voters, const AuthoritySecrets& secrets) {
    ReadoutResult r;
    if (outcome >= dim) {
        r.cheat_detected = true;
        return r;
    }
    r.q = outcome;
    const auto gap = static_cast<Index>(secrets.gap());
    if (outcome % gap == 0 && outcome / gap <= voters) {
        r.m_inferred = outcome / gap;
    } else {
        r.cheat_detected = true;
    }
    return r;
}

template <class S>
std::pair<AntiCheatBallot<S>, std::vector<VotingKit>> setup(Index dim, Index voters, const AuthoritySecrets& secrets,
                                                            AntiCheatVariant variant) {
    validate_secrets(secrets, dim, voters);
    AntiCheatBallot<S> b{variant, dim, voters, initial_ghz<S>(dim, variant == AntiCheatVariant::distributed ? voters : 2),
                         std::vector<bool>(voters, false), {}, false};
    std::vector<VotingKit> kits(voters, VotingKit{{secrets.theta_y(dim)}, {secrets.theta_n(dim)}});
    return {std::move(b), std::move(kits)};
}

template <class S>
Index ballot_register(const AntiCheatBallot<S>& ballot, Index voter) {
    return ballot.variant == AntiCheatVariant::distributed ? voter : 1;
}

template <class S>
VoteStep<S> vote_distributed(const AntiCheatBallot<S>& ballot, Index voter, const VotingQudit& chosen, bool is_yes, Rng& rng,
                             std::optional<Index> forced_r) {
    check_voter(ballot, voter, AntiCheatVariant::distributed);
    const Index d = ballot.dim;
    S s = attach_register(ballot.state, chosen.state(d));
    const std::vector<Index> regs{voter, s.register_count() - 1};
    auto m = measure_or_project(s, regs, measurements::ballot_offset(d), rng, forced_r);
    VoteStep<S> out{ballot, m.outcome, m.probability};
    out.ballot.state = apply_local(m.state, regs[1], Operator::unitary(ops::shift(d, static_cast<long long>(m.outcome))));
    out.ballot.voted[voter] = true;
    out.ballot.transcript.push_back({voter, m.outcome, is_yes});
    return out;
}

template <class S>
VoteStep<S> vote_traveling(const AntiCheatBallot<S>& ballot, Index voter, const VotingQudit& chosen, bool is_yes,
                           const AuthoritySecrets& secrets, Rng& rng, std::optional<Index> forced_r) {
    check_voter(ballot, voter, AntiCheatVariant::traveling);
    const Index d = ballot.dim;
    S s = attach_register(ballot.state, chosen.state(d));
    const std::vector<Index> regs{1, 2};
    auto m = measure_or_project(s, regs, measurements::ballot_offset(d), rng, forced_r);
    s = apply_local(m.state, 0, Operator::unitary(correction_w(d, m.outcome, secrets.delta)));
    s = apply_joint(s, regs, Operator::unitary(disentangler(d, m.outcome)));
    VoteStep<S> out{ballot, m.outcome, m.probability};
    out.ballot.state = detach_register(s, 2, ops::basis(d, 0));
    out.ballot.voted[voter] = true;
    out.ballot.transcript.push_back({voter, m.outcome, is_yes});
    return out;
}

template <class S>
AntiCheatBallot<S> act_on_ballot(const AntiCheatBallot<S>& ballot, Index voter, const Operator& op) {
    if (voter >= ballot.voters) {
        throw ValidationError("voter index " + std::to_string(voter) + " out of range");
    }
    AntiCheatBallot<S> out = ballot;
    out.state = apply_local(ballot.state, ballot_register(ballot, voter), op);
    return out;
}

template <class S>
AntiCheatBallot<S> authority_correct(const AntiCheatBallot<S>& ballot, const AuthoritySecrets& secrets, Index reg) {
    if (ballot.corrected) {
        throw ValidationError("ballot has already been corrected");
    }
    if (std::find(ballot.voted.begin(), ballot.voted.end(), false) != ballot.voted.end()) {
        throw ValidationError("missing announcements: not every voter has voted");
    }
    if (reg >= ballot.state.register_count()) {
        throw ValidationError("correction register " + std::to_string(reg) + " out of range");
    }
    const Index d = ballot.dim;
    std::vector<Complex> diag(d, Complex(1.0));
    if (ballot.variant == AntiCheatVariant::distributed) {
        for (const auto& e : ballot.transcript) {
            const Matrix w = correction_w(d, e.announced_r, secrets.delta);
            for (Index k = 0; k < d; ++k) {
                diag[k] *= w(ei(k), ei(k));
            }
        }
    }
    const double nth = static_cast<double>(ballot.voters) * secrets.theta_n(d);
    for (Index k = 0; k < d; ++k) {
        diag[k] *= unit_phase(-static_cast<double>(k) * nth);
    }
    AntiCheatBallot<S> out = ballot;
    out.state = apply_local(ballot.state, reg, Operator::diagonal(std::move(diag)));
    out.corrected = true;
    return out;
}

template <class S>
std::vector<double> readout_distribution(const AntiCheatBallot<S>& ballot) {
    std::vector<Index> regs(ballot.state.register_count());
    for (Index i = 0; i < regs.size(); ++i) {
        regs[i] = i;
    }
    return outcome_probabilities(ballot.state, regs, measurements::phase_ghz(ballot.dim, true));
}

template <class S>
ReadoutResult authority_readout(const AntiCheatBallot<S>& ballot, const AuthoritySecrets& secrets, Rng& rng) {
    const auto p = readout_distribution(ballot);
    const Index outcome = sample_outcome(p, rng.uniform());
    return interpret_readout(outcome, ballot.dim, ballot.voters, secrets);
}

#define QBALLOT_INSTANTIATE(S)                                                                                              \
    template std::pair<AntiCheatBallot<S>, std::vector<VotingKit>> setup<S>(Index, Index, const AuthoritySecrets&,        \
                                                                            AntiCheatVariant);                            \
    template Index ballot_register<S>(const AntiCheatBallot<S>&, Index);                                                   \
    template VoteStep<S> vote_distributed<S>(const AntiCheatBallot<S>&, Index, const VotingQudit&, bool, Rng&,             \
                                             std::optional<Index>);                                                        \
    template VoteStep<S> vote_traveling<S>(const AntiCheatBallot<S>&, Index, const VotingQudit&, bool,                     \
                                           const AuthoritySecrets&, Rng&, std::optional<Index>);                          \
    template AntiCheatBallot<S> act_on_ballot<S>(const AntiCheatBallot<S>&, Index, const Operator&);                       \
    template AntiCheatBallot<S> authority_correct<S>(const AntiCheatBallot<S>&, const AuthoritySecrets&, Index);           \
    template std::vector<double> readout_distribution<S>(const AntiCheatBallot<S>&);                                       \
    template ReadoutResult authority_readout<S>(const AntiCheatBallot<S>&, const AuthoritySecrets&, Rng&);

QBALLOT_INSTANTIATE(DenseState)
QBALLOT_INSTANTIATE(BranchState)
#undef QBALLOT_INSTANTIATE

RoundResult run_round(Index dim, const std::vector<Index>& votes, const AuthoritySecrets& secrets, const RoundOptions& options,
                      Rng& rng) {
    const Index n = votes.size();
    for (Index v : votes) {
        if (v > 1) {
            throw ValidationError("votes must be 0 or 1");
        }
    }
    return dispatch(options.backend, [&]<class S>(std::type_identity<S>) {
        auto [ballot, kits] = setup<S>(dim, n, secrets, options.variant);
        for (Index k = 0; k < n; ++k) {
            const bool yes = votes[k] == 1;
            const VotingQudit& q = yes ? kits[k].yes : kits[k].no;
            if (options.variant == AntiCheatVariant::distributed) {
                ballot = vote_distributed(ballot, k, q, yes, rng).ballot;
            } else {
                ballot = vote_traveling(ballot, k, q, yes, secrets, rng).ballot;
            }
        }
        ballot = authority_correct(ballot, secrets, options.correction_register);
        RoundResult out;
        out.distribution = readout_distribution(ballot);
        out.readout = interpret_readout(sample_outcome(out.distribution, rng.uniform()), dim, n, secrets);
        out.transcript = ballot.transcript;
        return out;
    });
}

RepeatedResult aggregate_rounds(std::vector<ReadoutResult> rounds) {
    RepeatedResult out;
    out.rounds = std::move(rounds);
    for (const auto& r : out.rounds) {
        out.cheat_detected = out.cheat_detected || r.cheat_detected || r.q != out.rounds.front().q;
    }
    return out;
}

RepeatedResult run_repeated(Index dim, const std::vector<Index>& votes, const AuthoritySecrets& secrets, Index repetitions,
                            const RoundOptions& options, Rng& rng) {
    if (repetitions < 1) {
        throw ValidationError("repetition count K must be at least 1");
    }
    std::vector<ReadoutResult> rounds;
    for (Index k = 0; k < repetitions; ++k) {
        Rng stream = rng.split(k);
        rounds.push_back(run_round(dim, votes, secrets, options, stream).readout);
    }
    return aggregate_rounds(std::move(rounds));
}

}  // namespace qballot
