#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qballot/anticheat.hpp"
#include "qballot/backend.hpp"

namespace qballot {

class Rng;

// ---- phase estimation ------------------------------------------------------

/// Phase-estimation measurement of |ψ(theta_true)⟩ in dimension `dim`.
struct PhasePOVM {
    Index dim = 1;
    double theta_true = 0.0;
};

/// p(x) = |Σ_j e^{ijx}|² / (2πD) for the offset x = θ' − θ.
double phase_density(Index dim, double x);
/// ∫_0^x p, for x in [0, 2π].
double phase_cdf(Index dim, double x);

/// Inverse-CDF sampler of the offset on a uniform grid with linear interpolation.
/// The grid starts at 4096 cells and doubles until the interpolated CDF is
/// within 1e-7 of the exact CDF at every cell midpoint.
class PhaseSampler {
  public:
    explicit PhaseSampler(Index dim);
    /// Offset x in [0, 2π).
    double sample_offset(Rng& rng) const;
    Index grid_cells() const { return cdf_.size() - 1; }
    double max_interpolation_error() const { return max_error_; }
    /// Shared sampler for `dim`, built once.
    static const PhaseSampler& for_dim(Index dim);

  private:
    Index dim_;
    std::vector<double> cdf_;
    double max_error_ = 0.0;
};

/// θ' sampled from ⟨ψ(θ)|E(θ')|ψ(θ)⟩, wrapped into [0, 2π).
double sample_phase_estimate(const PhasePOVM& povm, Rng& rng);

// ---- cheating voter --------------------------------------------------------

struct CheaterPlan {
    Index s = 1;
    double theta_y_est = 0.0;
    double theta_n_est = 0.0;
    /// Forces the R outcome (exact conditional analysis); sampled when empty.
    std::optional<Index> r;
};

/// U(θ'_y, θ'_n) = Σ_k e^{ik(θ'_n − θ'_y)} |k⟩⟨k|.
Matrix cheater_operator(Index dim, double theta_y_est, double theta_n_est);

struct CheaterOutcome {
    /// Readout outcome, D meaning the error projector.
    Index outcome = 0;
    ReadoutResult readout;
    Index r = 0;
    CheaterPlan plan;
    /// Exact readout distribution for this run (q = 0..D−1, then error).
    std::vector<double> distribution;
    std::vector<VoterTranscriptEntry> transcript;
};

/// Honest voters vote with their templates; the cheater (inserted at
/// `cheater_position`) votes no with |ψ(θ'_n)⟩ and applies U(θ'_y, θ'_n) s times.
CheaterOutcome run_cheater_attack(Index dim, const AuthoritySecrets& secrets, const std::vector<Index>& honest_votes,
                                  const CheaterPlan& plan, Index cheater_position, Backend backend, Rng& rng);

/// As run_cheater_attack, with θ'_y and θ'_n drawn from the phase-estimation POVM.
CheaterOutcome run_cheater_attack_sampled(Index dim, const AuthoritySecrets& secrets, const std::vector<Index>& honest_votes,
                                          Index s, Index cheater_position, Backend backend, Rng& rng);

/// p(q | r, m, θ'_y, θ'_n) for q = 0..D−1 (cheater last, all corrections applied).
std::vector<double> cheater_conditional_pq(Index dim, const AuthoritySecrets& secrets, Index s, long long m, Index r,
                                            double theta_y_est, double theta_n_est);

/// Closed form for D = N+1, l_y = 1, l_n = 0, D/2 < s < D.
double analytic_pq(Index dim, Index s, long long m, Index q);
/// Coefficient c of the cosine term in analytic_pq.
double analytic_pq_contrast(Index dim, Index s);

struct PqHistogram {
    std::vector<Index> counts;               // per q
    std::vector<std::vector<Index>> by_r;    // [r][q]
    Index errors = 0;
    Index trials = 0;
};

/// Monte Carlo of the cheater's readout at D = N+1, l_y = 1, l_n = 0 with m
/// honest yes votes; δ is redrawn per trial. The 2N−1 registers already
/// corrected before the cheater acts are carried by one register (they share
/// the same basis label in every branch).
PqHistogram monte_carlo_pq(Index dim, Index s, long long m, Index trials, Rng& rng);

/// Same statistic from full protocol runs with the cheater at `cheater_position`.
PqHistogram cheater_histogram(Index dim, const AuthoritySecrets& secrets, const std::vector<Index>& honest_votes, Index s,
                              Index cheater_position, Index trials, Backend backend, Rng& rng);

/// ½ Σ |counts/total − p|.
double tv_distance(const std::vector<Index>& counts, const std::vector<double>& probabilities);

// ---- eavesdroppers ---------------------------------------------------------

using Pairing = std::vector<std::pair<Index, Index>>;

struct AttackOutcome {
    bool detected = false;
    std::optional<Index> leaked_vote;
    std::optional<Index> tally;
};

struct AttackReport {
    std::string kind;
    Index trials = 0;
    Index detections = 0;
    Index leaks = 0;
    Index leaks_correct = 0;
    std::vector<Index> histogram;
    std::uint64_t seed = 0;
    std::optional<double> analytic_detection;
    std::vector<AttackOutcome> outcomes;

    double detection_rate() const { return trials ? static_cast<double>(detections) / static_cast<double>(trials) : 0.0; }
    double leak_accuracy() const { return leaks ? static_cast<double>(leaks_correct) / static_cast<double>(leaks) : 0.0; }
};

/// Runs `trial` with stream k = rng(seed).split(k); histogram counts leaked values.
AttackReport run_trials(std::string kind, Index trials, std::uint64_t seed, std::optional<Index> true_vote,
                        const std::function<AttackOutcome(Rng&)>& trial);

/// Eve hands the target her own |0⟩ instead of the ballot and reads it back.
/// With `repair` she applies the observed shift to the real ballot before forwarding it.
AttackOutcome run_mitm_traveling(Index dim, const std::vector<Index>& votes, Index target, Backend backend, Rng& rng,
                                 bool repair = true);

/// Swap a uniform ancilla into the target's slot before voting and back after;
/// Eve reads the vote from the ancilla in the Fourier basis, then repairs the register.
AttackOutcome run_swap_attack(Index dim, const std::vector<Index>& votes, Index target, const Pairing& pairing,
                              Backend backend, Rng& rng, bool repair = true);

/// General attack U_E1 on (ancilla |0⟩, target). After voting Eve applies U_E1†
/// and reads the ancilla in the computational basis.
AttackOutcome run_entangling_attack(Index dim, const std::vector<Index>& votes, Index target, const Matrix& u_e1,
                                    const Pairing& pairing, Backend backend, Rng& rng);

/// swap · (F ⊗ I): the swap attack written as an entangling unitary on (|0⟩_E, target).
Matrix swap_attack_unitary(Index dim);
/// Σ_j V_j ⊗ |j⟩⟨j| with Haar V_j, so U(|0⟩|j⟩) = |η_j⟩|j⟩.
Matrix product_form_unitary(Index dim, Index ancilla_dim, Rng& rng);

struct EntanglingAnalysis {
    double analytic_non_detection = 0.0;
    double simulated_non_detection = 0.0;
    /// Max trace distance between ρ_E1 after voting for different vote vectors, given a passed check.
    double rho_e1_spread = 0.0;
    /// Same without any pair check.
    double rho_e1_spread_unchecked = 0.0;
};

/// Exact dense analysis over every vote vector with the pair (target, partner) checked.
EntanglingAnalysis analyze_entangling_attack(Index dim, Index voters, Index target, Index partner, const Matrix& u_e1);

template <class S>
struct PairCheckResult {
    bool pass = false;
    S state;
};

/// Measures P_ij = Σ_j |j⟩⟨j| ⊗ |j⟩⟨j| on the two registers.
template <class S>
PairCheckResult<S> run_pair_check(const S& state, std::pair<Index, Index> pair, Rng& rng);

/// Eve records the target's classical ballot before and after voting.
AttackOutcome run_classical_eavesdrop(Index voters, const std::vector<Index>& votes, Index target, Rng& rng);

}  // namespace qballot
