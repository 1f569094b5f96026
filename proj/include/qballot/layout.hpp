#pragma once

#include <span>
#include <vector>

#include "qballot/numeric.hpp"

namespace qballot {

/// Ordered list of register dimensions. Register 0 is the most significant
/// digit of a flattened basis index.
class RegisterLayout {
  public:
    RegisterLayout() = default;
    explicit RegisterLayout(std::vector<Index> dims);

    static RegisterLayout uniform(Index dim, Index count) { return RegisterLayout(std::vector<Index>(count, dim)); }

    const std::vector<Index>& dims() const { return dims_; }
    Index size() const { return dims_.size(); }
    Index dim(Index reg) const { return dims_.at(reg); }

    /// Product of all dims, saturating at max Index on overflow.
    Index total() const { return total_; }
    Index stride(Index reg) const { return strides_.at(reg); }

    /// Product of the dims of the listed registers; throws on invalid/duplicate indices.
    Index joint_dim(std::span<const Index> regs) const;

    /// Offsets within a flattened index of every joint basis state of `regs`
    /// (the first listed register is the most significant joint digit).
    std::vector<Index> offsets(std::span<const Index> regs) const;

    /// All flattened indices whose digits on `regs` are zero.
    std::vector<Index> bases(std::span<const Index> regs) const;

    /// Digit of register `reg` inside flattened index `flat`.
    Index digit(Index flat, Index reg) const { return (flat / strides_[reg]) % dims_[reg]; }

    RegisterLayout with_register(Index dim) const;
    RegisterLayout without_register(Index reg) const;
    RegisterLayout subset(std::span<const Index> regs) const;

    void check_registers(std::span<const Index> regs) const;

    friend bool operator==(const RegisterLayout& a, const RegisterLayout& b) { return a.dims_ == b.dims_; }

  private:
    std::vector<Index> dims_;
    std::vector<Index> strides_;
    Index total_ = 1;
};

}  // namespace qballot
