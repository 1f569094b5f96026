#pragma once

#include "qballot/numeric.hpp"

namespace qballot {

/// Reduced state on a set of registers. Construction checks Hermiticity,
/// unit trace and positive semidefiniteness.
class DensityMatrix {
  public:
    explicit DensityMatrix(Matrix entries);

    Index dim() const { return static_cast<Index>(entries_.rows()); }
    const Matrix& entries() const { return entries_; }
    Complex operator()(Index r, Index c) const { return entries_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)); }

    static DensityMatrix maximally_mixed(Index dim);
    static DensityMatrix pure(const Vector& psi);

  private:
    Matrix entries_;
};

/// (1/2)‖a − b‖₁.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

}  // namespace qballot
