#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qballot/backend.hpp"

namespace qballot {

class Rng;

/// θ = 2πl/D + δ for the yes and no templates; known only to the authority.
struct AuthoritySecrets {
    long long l_y = 1;
    long long l_n = 0;
    double delta = 0.0;

    double theta_y(Index dim) const;
    double theta_n(Index dim) const;
    /// l_y − l_n.
    long long gap() const { return l_y - l_n; }
};

/// Requires 0 ≤ l_n < l_y < D, 0 ≤ δ < 2π/D and (l_y − l_n)N < D.
void validate_secrets(const AuthoritySecrets& secrets, Index dim, Index voters);

/// Uniform over admissible (l_y, l_n) pairs, δ uniform in [0, 2π/D).
AuthoritySecrets draw_secrets(Index dim, Index voters, Rng& rng);

/// |ψ(θ)⟩ = D^{-1/2} Σ_j e^{ijθ}|j⟩.
struct VotingQudit {
    double theta = 0.0;
    Vector state(Index dim) const { return ops::phase_state(dim, theta); }
};

struct VotingKit {
    VotingQudit yes;
    VotingQudit no;
};

enum class AntiCheatVariant { distributed, traveling };

struct VoterTranscriptEntry {
    Index voter = 0;
    Index announced_r = 0;
    /// Simulation-only ground truth; never read by the authority.
    bool vote_hidden = false;
};

template <class S>
struct AntiCheatBallot {
    AntiCheatVariant variant = AntiCheatVariant::distributed;
    Index dim = 0;
    Index voters = 0;
    S state;
    std::vector<bool> voted;
    std::vector<VoterTranscriptEntry> transcript;
    bool corrected = false;
};

template <class S>
struct VoteStep {
    AntiCheatBallot<S> ballot;
    Index r = 0;
    double probability = 0.0;
};

struct ReadoutResult {
    /// Readout outcome; empty when the error projector fired.
    std::optional<Index> q;
    std::optional<Index> m_inferred;
    bool cheat_detected = false;
};

/// Ballot plus each voter's yes/no templates.
template <class S>
std::pair<AntiCheatBallot<S>, std::vector<VotingKit>> setup(Index dim, Index voters, const AuthoritySecrets& secrets,
                                                            AntiCheatVariant variant);

/// Register of `voter`'s ballot qudit (distributed: its own; traveling: the shared one).
template <class S>
Index ballot_register(const AntiCheatBallot<S>& ballot, Index voter);

/// Distributed step: attach the chosen qudit, measure R, apply V_r, return both.
/// With `forced_r` the state is projected onto that outcome instead of sampled.
template <class S>
VoteStep<S> vote_distributed(const AntiCheatBallot<S>& ballot, Index voter, const VotingQudit& chosen, bool is_yes, Rng& rng,
                             std::optional<Index> forced_r = std::nullopt);

/// Traveling step: R measurement, authority's W_r on her register, voter's U_r, voting qudit detached in |0⟩.
template <class S>
VoteStep<S> vote_traveling(const AntiCheatBallot<S>& ballot, Index voter, const VotingQudit& chosen, bool is_yes,
                           const AuthoritySecrets& secrets, Rng& rng, std::optional<Index> forced_r = std::nullopt);

/// Applies `op` to the voter's ballot register (used by cheaters).
template <class S>
AntiCheatBallot<S> act_on_ballot(const AntiCheatBallot<S>& ballot, Index voter, const Operator& op);

/// W = ∏ W_{r_k} (distributed only) and the diag(e^{-ijNθ_n}) correction, both on `reg`.
template <class S>
AntiCheatBallot<S> authority_correct(const AntiCheatBallot<S>& ballot, const AuthoritySecrets& secrets, Index reg = 0);

/// Probabilities of q = 0..D−1 followed by the error outcome.
template <class S>
std::vector<double> readout_distribution(const AntiCheatBallot<S>& ballot);

template <class S>
ReadoutResult authority_readout(const AntiCheatBallot<S>& ballot, const AuthoritySecrets& secrets, Rng& rng);

/// Maps a readout outcome (D = error) to q, m and the cheat flag.
ReadoutResult interpret_readout(Index outcome, Index dim, Index voters, const AuthoritySecrets& secrets);

/// W_r = diag(e^{-iDδ} for k < r, 1 otherwise).
Matrix correction_w(Index dim, Index r, double delta);
/// |j⟩_b|k⟩_v → |j⟩_b|k + r − j mod D⟩_v.
Matrix disentangler(Index dim, Index r);

struct RoundOptions {
    AntiCheatVariant variant = AntiCheatVariant::distributed;
    Backend backend = Backend::branch;
    Index correction_register = 0;
};

struct RoundResult {
    ReadoutResult readout;
    std::vector<VoterTranscriptEntry> transcript;
    std::vector<double> distribution;
};

/// One honest round: setup, every voter votes, corrections, readout.
RoundResult run_round(Index dim, const std::vector<Index>& votes, const AuthoritySecrets& secrets, const RoundOptions& options,
                      Rng& rng);

struct RepeatedResult {
    std::vector<ReadoutResult> rounds;
    bool cheat_detected = false;
};

/// Flags when any round flags or the outcomes are not all equal.
RepeatedResult aggregate_rounds(std::vector<ReadoutResult> rounds);

RepeatedResult run_repeated(Index dim, const std::vector<Index>& votes, const AuthoritySecrets& secrets, Index repetitions,
                            const RoundOptions& options, Rng& rng);

}  // namespace qballot
