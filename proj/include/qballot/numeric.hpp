#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qballot {

class Rng;

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = std::size_t;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Tolerances shared by both state backends.
inline constexpr double kUnitaryTol = 1e-10;
inline constexpr double kNormTol = 1e-10;
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kProjectorTol = 1e-10;
// Probabilities below this are reported as exactly zero by both backends.
inline constexpr double kProbabilityFloor = 1e-13;

/// Maximum number of amplitudes in a dense state (and in a dense density matrix row).
inline constexpr Index kDenseBudget = Index{1} << 22;
/// Maximum joint dimension of a fused factor inside a branch state.
inline constexpr Index kGroupBudget = Index{1} << 12;

inline Complex unit_phase(double angle) { return std::polar(1.0, angle); }

/// Reduces an angle into [0, 2π).
double wrap_angle(double angle);

/// Non-negative remainder of a modulo d.
inline Index mod(long long a, Index d) {
    const auto sd = static_cast<long long>(d);
    return static_cast<Index>(((a % sd) + sd) % sd);
}

/// Max-entry deviation of U†U from the identity; infinity for non-square input.
double unitarity_defect(const Matrix& u);
bool is_unitary(const Matrix& u, double tol = kUnitaryTol);

/// True when every column has at most one non-zero entry.
bool is_monomial(const Matrix& m);

namespace ops {

Matrix identity(Index d);
/// |j⟩ → |j+k mod d⟩.
Matrix shift(Index d, long long k = 1);
/// diag(e^{2πi jk/d}); k = 1 is the distributed-ballot "yes" operator.
Matrix clock(Index d, long long k = 1);
/// diag(e^{i j angle}).
Matrix phase_ramp(Index d, double angle);
/// |j⟩ → d^{-1/2} Σ_l e^{2πi jl/d}|l⟩.
Matrix fourier(Index d);
/// Exchanges two d-dimensional registers.
Matrix swap(Index d);
Matrix pauli_x();
Matrix pauli_y();
Matrix pauli_z();
/// Haar-distributed unitary via QR of a complex Gaussian matrix.
Matrix haar_unitary(Index d, Rng& rng);

Vector basis(Index d, Index j);
Vector uniform_superposition(Index d);
/// d^{-1/2} Σ_j e^{ijθ}|j⟩.
Vector phase_state(Index d, double theta);
/// Haar-random unit vector.
Vector random_state(Index d, Rng& rng);

}  // namespace ops

}  // namespace qballot
