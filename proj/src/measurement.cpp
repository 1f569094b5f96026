#include "qballot/measurement.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "qballot/error.hpp"

namespace qballot {

namespace {

Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }

Index ipow(Index base, Index exp) {
    Index r = 1;
    for (Index i = 0; i < exp; ++i) {
        if (r > kDenseBudget * 16) {
            throw BudgetError("GHZ measurement over too many registers for a dense expansion");
        }
        r *= base;
    }
    return r;
}

void check_orthonormal(const std::vector<Vector>& vs, const char* what) {
    for (Index a = 0; a < vs.size(); ++a) {
        for (Index b = 0; b <= a; ++b) {
            const Complex g = vs[a].dot(vs[b]);
            const Complex expect = a == b ? Complex(1.0) : Complex{};
            if (std::abs(g - expect) > kProjectorTol) {
                throw ValidationError(std::string(what) + ": vectors are not orthonormal (pair " + std::to_string(a) +
                                      "," + std::to_string(b) + ")");
            }
        }
    }
}

SparseVector ghz_sparse(const Vector& c, Index registers) {
    const auto d = static_cast<Index>(c.size());
    // index of |j…j⟩ = j·(d^{n−1} + … + 1)
    Index repunit = 0;
    for (Index i = 0; i < registers; ++i) {
        repunit = repunit * d + 1;
    }
    SparseVector v;
    for (Index j = 0; j < d; ++j) {
        if (c(ei(j)) != Complex{}) {
            v.emplace_back(j * repunit, c(ei(j)));
        }
    }
    return v;
}

}  // namespace

Index outcome_count(const Measurement& m) {
    return std::visit(
        [](const auto& f) -> Index {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, DiagonalMeasurement>) {
                return f.outcomes;
            } else if constexpr (std::is_same_v<T, RankOneMeasurement>) {
                return f.vectors.size() + (f.remainder ? 1 : 0);
            } else if constexpr (std::is_same_v<T, GhzMeasurement>) {
                return f.coefficients.size() + (f.remainder ? 1 : 0);
            } else {
                return f.projectors.size() + (f.remainder ? 1 : 0);
            }
        },
        m);
}

void validate_measurement(const Measurement& m, Index joint_dim, Index registers, Index register_dim) {
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, DiagonalMeasurement>) {
                if (f.outcome_of.size() != joint_dim) {
                    throw ValidationError("diagonal measurement covers " + std::to_string(f.outcome_of.size()) +
                                          " basis states, expected " + std::to_string(joint_dim));
                }
                if (f.outcomes == 0) {
                    throw ValidationError("measurement has no outcomes");
                }
                for (Index k : f.outcome_of) {
                    if (k >= f.outcomes) {
                        throw ValidationError("diagonal measurement outcome out of range");
                    }
                }
            } else if constexpr (std::is_same_v<T, RankOneMeasurement>) {
                if (f.vectors.empty()) {
                    throw ValidationError("measurement has no outcomes");
                }
                for (const auto& v : f.vectors) {
                    if (static_cast<Index>(v.size()) != joint_dim) {
                        throw ValidationError("rank-one measurement vector has wrong dimension");
                    }
                }
                check_orthonormal(f.vectors, "rank-one measurement");
                if (!f.remainder && f.vectors.size() != joint_dim) {
                    throw ValidationError("projectors do not sum to the identity (missing remainder outcome)");
                }
            } else if constexpr (std::is_same_v<T, GhzMeasurement>) {
                if (f.coefficients.empty()) {
                    throw ValidationError("measurement has no outcomes");
                }
                for (const auto& c : f.coefficients) {
                    if (static_cast<Index>(c.size()) != register_dim) {
                        throw ValidationError("GHZ coefficient vector must have one entry per basis label");
                    }
                }
                check_orthonormal(f.coefficients, "GHZ measurement");
                const bool complete = registers == 1 && f.coefficients.size() == register_dim;
                if (!f.remainder && !complete) {
                    throw ValidationError("projectors do not sum to the identity (missing remainder outcome)");
                }
            } else {
                if (f.projectors.empty()) {
                    throw ValidationError("measurement has no outcomes");
                }
                const auto n = ei(joint_dim);
                Matrix sum = Matrix::Zero(n, n);
                for (Index a = 0; a < f.projectors.size(); ++a) {
                    const Matrix& p = f.projectors[a];
                    if (p.rows() != n || p.cols() != n) {
                        throw ValidationError("projector has wrong dimension");
                    }
                    if ((p - p.adjoint()).cwiseAbs().maxCoeff() > kProjectorTol ||
                        (p * p - p).cwiseAbs().maxCoeff() > kProjectorTol) {
                        throw ValidationError("operator " + std::to_string(a) + " is not an orthogonal projector");
                    }
                    for (Index b = 0; b < a; ++b) {
                        if ((p * f.projectors[b]).cwiseAbs().maxCoeff() > kProjectorTol) {
                            throw ValidationError("projectors " + std::to_string(b) + " and " + std::to_string(a) +
                                                  " are not mutually orthogonal");
                        }
                    }
                    sum += p;
                }
                const Matrix gap = Matrix::Identity(n, n) - sum;
                if (f.remainder) {
                    if ((gap * gap - gap).cwiseAbs().maxCoeff() > kProjectorTol) {
                        throw ValidationError("I − ΣP is not a projector");
                    }
                } else if (gap.cwiseAbs().maxCoeff() > kProjectorTol) {
                    throw ValidationError("projectors do not sum to the identity");
                }
            }
        },
        m);
}

std::vector<Operator> outcome_operators(const Measurement& m, Index joint_dim, Index registers, Index register_dim) {
    std::vector<Operator> out;
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, DiagonalMeasurement>) {
                for (Index k = 0; k < f.outcomes; ++k) {
                    std::vector<Complex> diag(joint_dim);
                    for (Index x = 0; x < joint_dim; ++x) {
                        diag[x] = f.outcome_of[x] == k ? 1.0 : 0.0;
                    }
                    out.push_back(Operator::diagonal(std::move(diag)));
                }
            } else if constexpr (std::is_same_v<T, RankOneMeasurement> || std::is_same_v<T, GhzMeasurement>) {
                std::vector<SparseVector> all;
                if constexpr (std::is_same_v<T, RankOneMeasurement>) {
                    for (const auto& v : f.vectors) {
                        all.push_back(to_sparse(v));
                    }
                } else {
                    if (ipow(register_dim, registers) != joint_dim) {
                        throw ValidationError("GHZ measurement shape does not match registers");
                    }
                    for (const auto& c : f.coefficients) {
                        all.push_back(ghz_sparse(c, registers));
                    }
                }
                for (const auto& v : all) {
                    out.push_back(Operator::projector({v}, joint_dim, false));
                }
                if (f.remainder) {
                    out.push_back(Operator::projector(all, joint_dim, true));
                }
            } else {
                for (const auto& p : f.projectors) {
                    out.push_back(Operator::from_matrix(p));
                }
                if (f.remainder) {
                    Matrix gap = Matrix::Identity(ei(joint_dim), ei(joint_dim));
                    for (const auto& p : f.projectors) {
                        gap -= p;
                    }
                    out.push_back(Operator::from_matrix(gap));
                }
            }
        },
        m);
    return out;
}

Index sample_outcome(std::span<const double> probabilities, double u) {
    const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    if (!(total > 0.0)) {
        throw InvariantError("measurement has no outcome with positive probability");
    }
    const double target = u * total;
    double cum = 0.0;
    Index last = 0;
    for (Index k = 0; k < probabilities.size(); ++k) {
        if (probabilities[k] <= 0.0) {
            continue;
        }
        cum += probabilities[k];
        last = k;
        if (target < cum) {
            return k;
        }
    }
    return last;
}

namespace measurements {

DiagonalMeasurement computational(Index joint_dim) {
    DiagonalMeasurement m{std::vector<Index>(joint_dim), joint_dim};
    std::iota(m.outcome_of.begin(), m.outcome_of.end(), Index{0});
    return m;
}

DiagonalMeasurement agreement(Index dim, Index registers) {
    const Index n = ipow(dim, registers);
    DiagonalMeasurement m{std::vector<Index>(n, 0), 2};
    Index repunit = 0;
    for (Index i = 0; i < registers; ++i) {
        repunit = repunit * dim + 1;
    }
    for (Index j = 0; j < dim; ++j) {
        m.outcome_of[j * repunit] = 1;
    }
    return m;
}

DiagonalMeasurement ballot_offset(Index dim) {
    DiagonalMeasurement m{std::vector<Index>(dim * dim), dim};
    for (Index b = 0; b < dim; ++b) {
        for (Index v = 0; v < dim; ++v) {
            m.outcome_of[b * dim + v] = mod(static_cast<long long>(b) - static_cast<long long>(v), dim);
        }
    }
    return m;
}

GhzMeasurement phase_ghz(Index dim, bool remainder) {
    GhzMeasurement m;
    m.remainder = remainder;
    const double norm = 1.0 / std::sqrt(static_cast<double>(dim));
    for (Index q = 0; q < dim; ++q) {
        Vector c(ei(dim));
        for (Index j = 0; j < dim; ++j) {
            c(ei(j)) = norm * unit_phase(kTwoPi * static_cast<double>((j * q) % dim) / static_cast<double>(dim));
        }
        m.coefficients.push_back(std::move(c));
    }
    return m;
}

RankOneMeasurement shifted_pairs(Index dim) {
    RankOneMeasurement m;
    m.remainder = true;
    const double norm = 1.0 / std::sqrt(static_cast<double>(dim));
    for (Index s = 0; s < dim; ++s) {
        Vector v = Vector::Zero(ei(dim * dim));
        for (Index j = 0; j < dim; ++j) {
            v(ei(j * dim + (j + s) % dim)) = norm;
        }
        m.vectors.push_back(std::move(v));
    }
    return m;
}

RankOneMeasurement fourier_basis(Index dim) {
    RankOneMeasurement m;
    const double norm = 1.0 / std::sqrt(static_cast<double>(dim));
    for (Index s = 0; s < dim; ++s) {
        Vector v(ei(dim));
        for (Index k = 0; k < dim; ++k) {
            v(ei(k)) = norm * unit_phase(kTwoPi * static_cast<double>((s * k) % dim) / static_cast<double>(dim));
        }
        m.vectors.push_back(std::move(v));
    }
    return m;
}

}  // namespace measurements

}  // namespace qballot
