#include "qballot/operator.hpp"

#include <string>

#include "qballot/error.hpp"

namespace qballot {

SparseVector to_sparse(const Vector& v) {
    SparseVector out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v(i) != Complex{}) {
            out.emplace_back(static_cast<Index>(i), v(i));
        }
    }
    return out;
}

Operator Operator::from_matrix(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw ValidationError("operator must be a non-empty square matrix");
    }
    const auto d = static_cast<Index>(m.rows());
    if (!qballot::is_monomial(m)) {
        return Operator(Dense{m}, d);
    }
    Monomial mono{std::vector<Index>(d, 0), std::vector<Complex>(d, Complex{})};
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        mono.row[static_cast<Index>(c)] = static_cast<Index>(c);
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            if (m(r, c) != Complex{}) {
                mono.row[static_cast<Index>(c)] = static_cast<Index>(r);
                mono.value[static_cast<Index>(c)] = m(r, c);
            }
        }
    }
    return Operator(std::move(mono), d);
}

Operator Operator::unitary(const Matrix& m) {
    const double defect = unitarity_defect(m);
    if (!(defect <= kUnitaryTol)) {
        throw ValidationError("operator is not unitary (max |U†U − I| = " + std::to_string(defect) + ")");
    }
    return from_matrix(m);
}

Operator Operator::monomial(std::vector<Index> row, std::vector<Complex> value) {
    if (row.size() != value.size() || row.empty()) {
        throw ValidationError("monomial operator needs one (row, value) per column");
    }
    const Index d = row.size();
    for (Index r : row) {
        if (r >= d) {
            throw ValidationError("monomial row index out of range");
        }
    }
    return Operator(Monomial{std::move(row), std::move(value)}, d);
}

Operator Operator::diagonal(std::vector<Complex> value) {
    std::vector<Index> row(value.size());
    for (Index i = 0; i < row.size(); ++i) {
        row[i] = i;
    }
    return monomial(std::move(row), std::move(value));
}

Operator Operator::projector(std::vector<SparseVector> vectors, Index dim, bool complement) {
    for (const auto& v : vectors) {
        for (const auto& [i, a] : v) {
            if (i >= dim) {
                throw ValidationError("projector vector index out of range");
            }
        }
    }
    return Operator(Projector{std::move(vectors), dim, complement}, dim);
}

void Operator::apply(std::span<const Complex> in, std::span<Complex> out) const {
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Dense>) {
                const auto n = static_cast<Eigen::Index>(dim_);
                Eigen::Map<const Vector> x(in.data(), n);
                Eigen::Map<Vector> y(out.data(), n);
                y.noalias() = f.matrix * x;
            } else if constexpr (std::is_same_v<T, Monomial>) {
                std::fill(out.begin(), out.end(), Complex{});
                for (Index c = 0; c < dim_; ++c) {
                    out[f.row[c]] += f.value[c] * in[c];
                }
            } else {
                if (f.complement) {
                    std::copy(in.begin(), in.end(), out.begin());
                } else {
                    std::fill(out.begin(), out.end(), Complex{});
                }
                const double sign = f.complement ? -1.0 : 1.0;
                for (const auto& v : f.vectors) {
                    Complex overlap{};
                    for (const auto& [i, a] : v) {
                        overlap += std::conj(a) * in[i];
                    }
                    if (overlap == Complex{}) {
                        continue;
                    }
                    for (const auto& [i, a] : v) {
                        out[i] += sign * a * overlap;
                    }
                }
            }
        },
        form_);
}

Matrix Operator::to_matrix() const {
    const auto n = static_cast<Eigen::Index>(dim_);
    Matrix m(n, n);
    std::vector<Complex> in(dim_), out(dim_);
    for (Index c = 0; c < dim_; ++c) {
        std::fill(in.begin(), in.end(), Complex{});
        in[c] = 1.0;
        apply(in, out);
        for (Index r = 0; r < dim_; ++r) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = out[r];
        }
    }
    return m;
}

}  // namespace qballot
