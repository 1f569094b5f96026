#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <type_traits>

#include "qballot/branch_state.hpp"
#include "qballot/dense_state.hpp"

namespace qballot {

enum class Backend { dense, branch };

std::string_view backend_name(Backend b);
/// Accepts "dense" or "branch".
Backend parse_backend(std::string_view name);

/// Called with a dense snapshot of the state after each protocol step.
using StepObserver = std::function<void(std::string_view step, const DenseState& state)>;

template <class S>
S initial_ghz(Index dim, Index count) {
    if constexpr (std::is_same_v<S, DenseState>) {
        return make_uniform_ghz(dim, count);
    } else {
        return ghz_branches(dim, count);
    }
}

template <class S>
void notify(const StepObserver& observer, std::string_view step, const S& state) {
    if (observer) {
        observer(step, to_dense(state));
    }
}

/// Calls f(std::type_identity<S>{}) with the state type selected by `b`.
template <class F>
decltype(auto) dispatch(Backend b, F&& f) {
    if (b == Backend::dense) {
        return f(std::type_identity<DenseState>{});
    }
    return f(std::type_identity<BranchState>{});
}

}  // namespace qballot
