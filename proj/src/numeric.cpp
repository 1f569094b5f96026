#include "qballot/numeric.hpp"

#include <cmath>
#include <limits>

#include "qballot/error.hpp"
#include "qballot/rng.hpp"

namespace qballot {

double wrap_angle(double angle) {
    double w = std::fmod(angle, kTwoPi);
    if (w < 0) {
        w += kTwoPi;
    }
    return w >= kTwoPi ? 0.0 : w;
}

double unitarity_defect(const Matrix& u) {
    if (u.rows() != u.cols() || u.rows() == 0) {
        return std::numeric_limits<double>::infinity();
    }
    const Matrix d = u.adjoint() * u - Matrix::Identity(u.rows(), u.cols());
    return d.cwiseAbs().maxCoeff();
}

bool is_unitary(const Matrix& u, double tol) { return unitarity_defect(u) <= tol; }

bool is_monomial(const Matrix& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        int nonzero = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            if (m(r, c) != Complex{}) {
                ++nonzero;
            }
        }
        if (nonzero > 1) {
            return false;
        }
    }
    return true;
}

namespace ops {

namespace {
Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }
}  // namespace

Matrix identity(Index d) { return Matrix::Identity(ei(d), ei(d)); }

Matrix shift(Index d, long long k) {
    Matrix m = Matrix::Zero(ei(d), ei(d));
    for (Index j = 0; j < d; ++j) {
        m(ei(mod(static_cast<long long>(j) + k, d)), ei(j)) = 1.0;
    }
    return m;
}

Matrix clock(Index d, long long k) {
    Matrix m = Matrix::Zero(ei(d), ei(d));
    for (Index j = 0; j < d; ++j) {
        m(ei(j), ei(j)) = unit_phase(kTwoPi * static_cast<double>(mod(static_cast<long long>(j) * k, d)) / static_cast<double>(d));
    }
    return m;
}

Matrix phase_ramp(Index d, double angle) {
    Matrix m = Matrix::Zero(ei(d), ei(d));
    for (Index j = 0; j < d; ++j) {
        m(ei(j), ei(j)) = unit_phase(static_cast<double>(j) * angle);
    }
    return m;
}

Matrix fourier(Index d) {
    Matrix m(ei(d), ei(d));
    const double norm = 1.0 / std::sqrt(static_cast<double>(d));
    for (Index l = 0; l < d; ++l) {
        for (Index j = 0; j < d; ++j) {
            m(ei(l), ei(j)) = norm * unit_phase(kTwoPi * static_cast<double>((j * l) % d) / static_cast<double>(d));
        }
    }
    return m;
}

Matrix swap(Index d) {
    Matrix m = Matrix::Zero(ei(d * d), ei(d * d));
    for (Index a = 0; a < d; ++a) {
        for (Index b = 0; b < d; ++b) {
            m(ei(b * d + a), ei(a * d + b)) = 1.0;
        }
    }
    return m;
}

Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Matrix pauli_y() {
    Matrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}

Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Matrix haar_unitary(Index d, Rng& rng) {
    Matrix g(ei(d), ei(d));
    for (Eigen::Index c = 0; c < g.cols(); ++c) {
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            g(r, c) = Complex(rng.normal(), rng.normal());
        }
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix rmat = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the phases of R's diagonal so Q is Haar distributed.
    for (Eigen::Index k = 0; k < q.cols(); ++k) {
        const Complex r = rmat(k, k);
        const double a = std::abs(r);
        if (a > 0) {
            q.col(k) *= r / a;
        }
    }
    return q;
}

Vector basis(Index d, Index j) {
    Vector v = Vector::Zero(ei(d));
    v(ei(j)) = 1.0;
    return v;
}

Vector uniform_superposition(Index d) { return Vector::Constant(ei(d), 1.0 / std::sqrt(static_cast<double>(d))); }

Vector phase_state(Index d, double theta) {
    Vector v(ei(d));
    const double norm = 1.0 / std::sqrt(static_cast<double>(d));
    for (Index j = 0; j < d; ++j) {
        v(ei(j)) = norm * unit_phase(static_cast<double>(j) * theta);
    }
    return v;
}

Vector random_state(Index d, Rng& rng) {
    Vector v(ei(d));
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        v(j) = Complex(rng.normal(), rng.normal());
    }
    return v / v.norm();
}

}  // namespace ops

}  // namespace qballot
