#pragma once

#include <variant>
#include <vector>

#include "qballot/numeric.hpp"
#include "qballot/operator.hpp"

namespace qballot {

/// Projective measurement diagonal in the computational basis: every joint
/// basis index of the measured registers is assigned one outcome.
struct DiagonalMeasurement {
    std::vector<Index> outcome_of;
    Index outcomes = 0;
};

/// Rank-one projectors |v_k⟩⟨v_k| onto orthonormal vectors of the joint space.
/// When `remainder` is set, outcome K = vectors.size() is I − Σ|v_k⟩⟨v_k|.
struct RankOneMeasurement {
    std::vector<Vector> vectors;
    bool remainder = false;
};

/// Rank-one projectors onto GHZ-type vectors Σ_j c_k[j] |j⟩^{⊗n} over n
/// equal-dimension registers. Scales to many registers on the branch backend.
struct GhzMeasurement {
    std::vector<Vector> coefficients;
    bool remainder = false;
};

/// General projector family on the joint space (dense matrices).
struct ProjectorMeasurement {
    std::vector<Matrix> projectors;
    bool remainder = false;
};

using Measurement = std::variant<DiagonalMeasurement, RankOneMeasurement, GhzMeasurement, ProjectorMeasurement>;

/// Number of outcomes including a synthesized remainder.
Index outcome_count(const Measurement& m);

/// Checks orthonormality/completeness against a joint space of `joint_dim`
/// (`registers` and `register_dim` are used by GhzMeasurement).
void validate_measurement(const Measurement& m, Index joint_dim, Index registers, Index register_dim);

/// One operator per outcome, for a joint space of the given shape.
std::vector<Operator> outcome_operators(const Measurement& m, Index joint_dim, Index registers, Index register_dim);

/// Picks an outcome from unnormalized weights using one uniform draw.
Index sample_outcome(std::span<const double> probabilities, double u);

namespace measurements {

/// Computational-basis measurement of the listed registers' joint index.
DiagonalMeasurement computational(Index joint_dim);
/// Outcome 1 when all digits agree (Σ_j |j..j⟩⟨j..j|), outcome 0 otherwise.
DiagonalMeasurement agreement(Index dim, Index registers);
/// R = Σ r P_r with P_r = Σ_j |j+r⟩⟨j+r|_b ⊗ |j⟩⟨j|_v on (ballot, voting).
DiagonalMeasurement ballot_offset(Index dim);
/// {|Ψ_m⟩ = D^{-1/2} Σ_j e^{2πijm/D}|j⟩^{⊗n}}, m = 0..D−1.
GhzMeasurement phase_ghz(Index dim, bool remainder);
/// {D^{-1/2} Σ_j |j⟩|j+m⟩}, m = 0..D−1, on two registers, with remainder.
RankOneMeasurement shifted_pairs(Index dim);
/// Single-register Fourier basis {D^{-1/2} Σ_k e^{2πimk/D}|k⟩}.
RankOneMeasurement fourier_basis(Index dim);

}  // namespace measurements

}  // namespace qballot
