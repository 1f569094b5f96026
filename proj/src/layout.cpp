#include "qballot/layout.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "qballot/error.hpp"

namespace qballot {

RegisterLayout::RegisterLayout(std::vector<Index> dims) : dims_(std::move(dims)), strides_(dims_.size(), 1) {
    constexpr Index kMax = std::numeric_limits<Index>::max();
    for (Index d : dims_) {
        if (d < 2) {
            throw ValidationError("register dimension must be at least 2, got " + std::to_string(d));
        }
    }
    Index stride = 1;
    for (Index r = dims_.size(); r-- > 0;) {
        strides_[r] = stride;
        stride = (stride > kMax / dims_[r]) ? kMax : stride * dims_[r];
    }
    total_ = stride;
}

void RegisterLayout::check_registers(std::span<const Index> regs) const {
    for (Index i = 0; i < regs.size(); ++i) {
        if (regs[i] >= dims_.size()) {
            throw ValidationError("register index " + std::to_string(regs[i]) + " out of range (layout has " +
                                  std::to_string(dims_.size()) + " registers)");
        }
        for (Index j = 0; j < i; ++j) {
            if (regs[j] == regs[i]) {
                throw ValidationError("register " + std::to_string(regs[i]) + " listed twice");
            }
        }
    }
}

Index RegisterLayout::joint_dim(std::span<const Index> regs) const {
    check_registers(regs);
    Index d = 1;
    for (Index r : regs) {
        if (d > std::numeric_limits<Index>::max() / dims_[r]) {
            return std::numeric_limits<Index>::max();
        }
        d *= dims_[r];
    }
    return d;
}

std::vector<Index> RegisterLayout::offsets(std::span<const Index> regs) const {
    const Index n = joint_dim(regs);
    std::vector<Index> out(n, 0);
    Index block = 1;
    for (Index k = regs.size(); k-- > 0;) {
        const Index r = regs[k];
        for (Index x = 0; x < n; ++x) {
            out[x] += ((x / block) % dims_[r]) * strides_[r];
        }
        block *= dims_[r];
    }
    return out;
}

std::vector<Index> RegisterLayout::bases(std::span<const Index> regs) const {
    check_registers(regs);
    std::vector<Index> rest;
    for (Index r = 0; r < dims_.size(); ++r) {
        if (std::find(regs.begin(), regs.end(), r) == regs.end()) {
            rest.push_back(r);
        }
    }
    return offsets(rest);
}

RegisterLayout RegisterLayout::with_register(Index dim) const {
    auto d = dims_;
    d.push_back(dim);
    return RegisterLayout(std::move(d));
}

RegisterLayout RegisterLayout::without_register(Index reg) const {
    check_registers(std::span<const Index>(&reg, 1));
    auto d = dims_;
    d.erase(d.begin() + static_cast<std::ptrdiff_t>(reg));
    return RegisterLayout(std::move(d));
}

RegisterLayout RegisterLayout::subset(std::span<const Index> regs) const {
    check_registers(regs);
    std::vector<Index> d;
    for (Index r : regs) {
        d.push_back(dims_[r]);
    }
    return RegisterLayout(std::move(d));
}

}  // namespace qballot
