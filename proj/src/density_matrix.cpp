#include "qballot/density_matrix.hpp"

#include <string>

#include "qballot/error.hpp"

namespace qballot {

namespace {
// Eigen-decomposition cost grows cubically; larger matrices come from partial
// traces of normalized pure states and are positive by construction.
constexpr Eigen::Index kPsdCheckLimit = 256;
}  // namespace

DensityMatrix::DensityMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
        throw ValidationError("density matrix must be non-empty and square");
    }
    if ((entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol) {
        throw ValidationError("density matrix is not Hermitian");
    }
    const double tr = entries_.trace().real();
    if (std::abs(tr - 1.0) > kNormTol) {
        throw ValidationError("density matrix trace is " + std::to_string(tr));
    }
    if (entries_.rows() <= kPsdCheckLimit) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(entries_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -kNormTol) {
            throw ValidationError("density matrix is not positive semidefinite");
        }
    }
}

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return DensityMatrix(Matrix::Identity(n, n) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::pure(const Vector& psi) {
    const Vector v = psi / psi.norm();
    Matrix m = v * v.adjoint();
    // exact Hermitian symmetrization of round-off
    m = (m + m.adjoint().eval()) * 0.5;
    return DensityMatrix(std::move(m));
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    if (a.dim() != b.dim()) {
        throw ValidationError("trace distance between density matrices of different dimension (" +
                              std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
    }
    Matrix diff = a.entries() - b.entries();
    diff = (diff + diff.adjoint().eval()) * 0.5;
    Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace qballot
