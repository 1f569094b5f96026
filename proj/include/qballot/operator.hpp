#pragma once

#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "qballot/numeric.hpp"

namespace qballot {

/// Sparse vector on a joint register space: (basis index, amplitude) pairs.
using SparseVector = std::vector<std::pair<Index, Complex>>;

SparseVector to_sparse(const Vector& v);

/// A linear map on the joint space of a few registers, stored in the cheapest
/// exact form: dense, monomial (at most one non-zero per column), or an
/// orthogonal projector given by orthonormal vectors.
class Operator {
  public:
    struct Dense {
        Matrix matrix;
    };
    struct Monomial {
        std::vector<Index> row;      // row[col]
        std::vector<Complex> value;  // value[col]; zero entries annihilate
    };
    struct Projector {
        std::vector<SparseVector> vectors;
        Index dim = 0;
        bool complement = false;  // I − Σ|v⟩⟨v| instead of Σ|v⟩⟨v|
    };

    /// Wraps a matrix, choosing the monomial form when possible.
    static Operator from_matrix(const Matrix& m);
    /// Same as from_matrix but rejects matrices that are not unitary within kUnitaryTol.
    static Operator unitary(const Matrix& m);
    static Operator monomial(std::vector<Index> row, std::vector<Complex> value);
    static Operator diagonal(std::vector<Complex> value);
    static Operator projector(std::vector<SparseVector> vectors, Index dim, bool complement);

    Index dim() const { return dim_; }
    bool is_monomial() const { return std::holds_alternative<Monomial>(form_); }
    const Monomial* as_monomial() const { return std::get_if<Monomial>(&form_); }

    /// out = Op · in. Both spans have length dim().
    void apply(std::span<const Complex> in, std::span<Complex> out) const;

    Matrix to_matrix() const;

  private:
    explicit Operator(std::variant<Dense, Monomial, Projector> form, Index dim) : form_(std::move(form)), dim_(dim) {}

    std::variant<Dense, Monomial, Projector> form_;
    Index dim_;
};

}  // namespace qballot
