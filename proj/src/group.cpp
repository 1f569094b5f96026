#include "qballot/group.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "qballot/error.hpp"
#include "qballot/rng.hpp"

namespace qballot {

namespace {

Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }

std::vector<std::string> default_names(Index n) {
    std::vector<std::string> names;
    for (Index i = 0; i < n; ++i) {
        names.push_back("g" + std::to_string(i));
    }
    return names;
}

/// True when a equals a unit-modulus multiple of b.
bool phase_equal(const Matrix& a, const Matrix& b, double tol) {
    Eigen::Index r = 0, c = 0;
    b.cwiseAbs().maxCoeff(&r, &c);
    if (std::abs(a(r, c)) < 0.5 * std::abs(b(r, c))) {
        return false;
    }
    const Complex phase = a(r, c) / b(r, c);
    if (std::abs(std::abs(phase) - 1.0) > tol) {
        return false;
    }
    return (a - phase * b).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

FiniteGroup::FiniteGroup(std::vector<std::vector<Index>> table, std::vector<std::string> names)
    : table_(std::move(table)), names_(std::move(names)) {
    const Index n = table_.size();
    if (n == 0) {
        throw ValidationError("group must have at least one element");
    }
    if (names_.empty()) {
        names_ = default_names(n);
    }
    if (names_.size() != n) {
        throw ValidationError("group needs one name per element");
    }
    for (Index a = 0; a < n; ++a) {
        if (table_[a].size() != n) {
            throw ValidationError("Cayley table row " + std::to_string(a) + " has wrong length");
        }
        for (Index b = 0; b < n; ++b) {
            if (table_[a][b] >= n) {
                throw ValidationError("Cayley table entry out of range at (" + std::to_string(a) + "," + std::to_string(b) + ")");
            }
        }
    }
    for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b < n; ++b) {
            for (Index c = 0; c < n; ++c) {
                if (table_[table_[a][b]][c] != table_[a][table_[b][c]]) {
                    throw ValidationError("Cayley table is not associative at (" + std::to_string(a) + "," +
                                          std::to_string(b) + "," + std::to_string(c) + ")");
                }
            }
        }
    }
    bool found = false;
    for (Index e = 0; e < n && !found; ++e) {
        bool ok = true;
        for (Index a = 0; a < n && ok; ++a) {
            ok = table_[e][a] == a && table_[a][e] == a;
        }
        if (ok) {
            identity_ = e;
            found = true;
        }
    }
    if (!found) {
        throw ValidationError("Cayley table has no identity element");
    }
    inverse_.assign(n, n);
    for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b < n; ++b) {
            if (table_[a][b] == identity_ && table_[b][a] == identity_) {
                inverse_[a] = b;
            }
        }
        if (inverse_[a] == n) {
            throw ValidationError("element " + std::to_string(a) + " has no inverse");
        }
    }
}

FiniteGroup FiniteGroup::cyclic(Index n) {
    if (n < 1) {
        throw ValidationError("cyclic group order must be positive");
    }
    std::vector<std::vector<Index>> t(n, std::vector<Index>(n));
    for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b < n; ++b) {
            t[a][b] = (a + b) % n;
        }
    }
    return FiniteGroup(std::move(t));
}

FiniteGroup FiniteGroup::klein4() {
    std::vector<std::vector<Index>> t(4, std::vector<Index>(4));
    for (Index a = 0; a < 4; ++a) {
        for (Index b = 0; b < 4; ++b) {
            t[a][b] = a ^ b;
        }
    }
    return FiniteGroup(std::move(t), {"e", "x1", "x2", "x3"});
}

FiniteGroup FiniteGroup::symmetric3() {
    std::vector<std::array<Index, 3>> perms;
    std::array<Index, 3> p{0, 1, 2};
    do {
        perms.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    const Index n = perms.size();
    std::vector<std::vector<Index>> t(n, std::vector<Index>(n));
    std::vector<std::string> names;
    for (Index a = 0; a < n; ++a) {
        names.push_back(std::to_string(perms[a][0]) + std::to_string(perms[a][1]) + std::to_string(perms[a][2]));
        for (Index b = 0; b < n; ++b) {
            std::array<Index, 3> c{};
            for (Index x = 0; x < 3; ++x) {
                c[x] = perms[a][perms[b][x]];
            }
            t[a][b] = static_cast<Index>(std::find(perms.begin(), perms.end(), c) - perms.begin());
        }
    }
    return FiniteGroup(std::move(t), std::move(names));
}

FiniteGroup FiniteGroup::direct_product(const FiniteGroup& a, const FiniteGroup& b) {
    const Index na = a.order(), nb = b.order();
    std::vector<std::vector<Index>> t(na * nb, std::vector<Index>(na * nb));
    std::vector<std::string> names;
    for (Index x = 0; x < na * nb; ++x) {
        names.push_back("(" + a.name(x / nb) + "," + b.name(x % nb) + ")");
        for (Index y = 0; y < na * nb; ++y) {
            t[x][y] = a.multiply(x / nb, y / nb) * nb + b.multiply(x % nb, y % nb);
        }
    }
    return FiniteGroup(std::move(t), std::move(names));
}

FiniteGroup FiniteGroup::from_text(const std::string& text) {
    std::istringstream in(text);
    long long order = 0;
    if (!(in >> order) || order < 1) {
        throw ValidationError("Cayley table text must start with a positive order");
    }
    const auto n = static_cast<Index>(order);
    std::vector<std::vector<Index>> t(n, std::vector<Index>(n));
    for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b < n; ++b) {
            long long v = 0;
            if (!(in >> v)) {
                throw ValidationError("Cayley table text ends early at row " + std::to_string(a + 1));
            }
            if (v < 0) {
                throw ValidationError("Cayley table entries must be non-negative");
            }
            t[a][b] = static_cast<Index>(v);
        }
    }
    std::string extra;
    if (in >> extra) {
        throw ValidationError("unexpected trailing text in Cayley table: '" + extra + "'");
    }
    return FiniteGroup(std::move(t));
}

Index FiniteGroup::sequential_product(const std::vector<Index>& choices) const {
    Index p = identity_;
    for (Index g : choices) {
        if (g >= order()) {
            throw ValidationError("group element " + std::to_string(g) + " out of range");
        }
        p = multiply(g, p);
    }
    return p;
}

Representation make_representation(FiniteGroup group, std::vector<Matrix> matrices, bool projective) {
    const Index n = group.order();
    if (matrices.size() != n) {
        throw ValidationError("representation needs one matrix per group element");
    }
    const Index dim = static_cast<Index>(matrices[0].rows());
    for (Index g = 0; g < n; ++g) {
        if (static_cast<Index>(matrices[g].rows()) != dim || !is_unitary(matrices[g])) {
            throw ValidationError("matrix for element " + group.name(g) + " is not a unitary of dimension " +
                                  std::to_string(dim));
        }
    }
    for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b < n; ++b) {
            const Matrix prod = matrices[a] * matrices[b];
            const Matrix& target = matrices[group.multiply(a, b)];
            const bool ok = projective ? phase_equal(prod, target, kUnitaryTol)
                                       : (prod - target).cwiseAbs().maxCoeff() <= kUnitaryTol;
            if (!ok) {
                throw ValidationError("U(" + group.name(a) + ")U(" + group.name(b) + ") does not match U(" +
                                      group.name(group.multiply(a, b)) + ")" + (projective ? " up to a phase" : ""));
            }
        }
    }
    return Representation{std::move(group), dim, std::move(matrices), projective};
}

std::pair<FiniteGroup, Representation> klein4() {
    auto g = FiniteGroup::klein4();
    auto rep = make_representation(g, {ops::identity(2), ops::pauli_x(), ops::pauli_y(), ops::pauli_z()}, true);
    return {std::move(g), std::move(rep)};
}

Representation regular_representation(const FiniteGroup& group) {
    const Index n = group.order();
    std::vector<Matrix> mats;
    for (Index g = 0; g < n; ++g) {
        Matrix u = Matrix::Zero(ei(n), ei(n));
        for (Index j = 0; j < n; ++j) {
            for (Index k = 0; k < n; ++k) {
                if (group.multiply(group.inverse(j), k) == g) {
                    u(ei(j), ei(k)) = 1.0;
                }
            }
        }
        mats.push_back(std::move(u));
    }
    return make_representation(group, std::move(mats), false);
}

ReadinessReport check_protocol_ready(const Representation& rep) {
    const auto& g = rep.group;
    const Index n = g.order();
    ReadinessReport r;
    r.ready = true;
    for (Index a = 0; a < n; ++a) {
        const double t = std::abs(rep.matrices[a].trace());
        r.trace_magnitudes.push_back(t);
        if (a != g.identity() && t > 1e-10) {
            r.ready = false;
        }
    }
    // ⟨Ψ| I ⊗ U |Ψ⟩ = Tr(U)/d for |Ψ⟩ = Σ|jj⟩/√d.
    r.overlaps = Matrix::Zero(ei(n), ei(n));
    const double d = static_cast<double>(rep.dim);
    for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b < n; ++b) {
            const Index h = g.multiply(g.inverse(b), a);
            const double o = std::abs(rep.matrices[h].trace()) / d;
            r.overlaps(ei(a), ei(b)) = o;
            if (a != b) {
                r.max_overlap = std::max(r.max_overlap, o);
            }
        }
    }
    return r;
}

namespace {

template <class S>
GroupRunResult group_traveling_impl(const Representation& rep, const std::vector<Index>& choices, Rng& rng,
                                    const StepObserver& obs) {
    const Index d = rep.dim;
    S state = initial_ghz<S>(d, 2);
    notify(obs, "prepared", state);
    std::vector<Operator> ops;
    for (const auto& m : rep.matrices) {
        ops.push_back(Operator::unitary(m));
    }
    for (Index k = 0; k < choices.size(); ++k) {
        state = apply_local(state, 1, ops[choices[k]]);
        notify(obs, "party " + std::to_string(k), state);
    }
    RankOneMeasurement m;
    m.remainder = true;
    const double norm = 1.0 / std::sqrt(static_cast<double>(d));
    for (const auto& u : rep.matrices) {
        // (I ⊗ U)|Ψ⟩ has amplitude U_{kj}/√d at |j⟩|k⟩
        Vector v(ei(d * d));
        for (Index j = 0; j < d; ++j) {
            for (Index k = 0; k < d; ++k) {
                v(ei(j * d + k)) = norm * u(ei(k), ei(j));
            }
        }
        m.vectors.push_back(std::move(v));
    }
    const std::vector<Index> regs{0, 1};
    auto r = measure(state, regs, m, rng);
    if (r.outcome >= rep.group.order()) {
        throw InvariantError("Donna's measurement returned the residual outcome");
    }
    return {r.outcome, r.probability};
}

template <class S>
std::vector<Index> abelian_impl(const std::vector<Index>& moduli, const std::vector<std::vector<Index>>& choices, Rng& rng,
                                const StepObserver& obs) {
    const Index parties = choices.size();
    S state = initial_ghz<S>(moduli[0], parties);
    for (Index f = 1; f < moduli.size(); ++f) {
        state = tensor_product(state, initial_ghz<S>(moduli[f], parties));
    }
    notify(obs, "prepared", state);
    for (Index p = 0; p < parties; ++p) {
        for (Index f = 0; f < moduli.size(); ++f) {
            if (choices[p][f] != 0) {
                state = apply_local(state, f * parties + p, Operator::unitary(ops::clock(moduli[f], static_cast<long long>(choices[p][f]))));
            }
        }
        notify(obs, "party " + std::to_string(p), state);
    }
    std::vector<Index> out;
    for (Index f = 0; f < moduli.size(); ++f) {
        std::vector<Index> regs(parties);
        for (Index p = 0; p < parties; ++p) {
            regs[p] = f * parties + p;
        }
        auto r = measure(state, regs, measurements::phase_ghz(moduli[f], true), rng);
        if (r.outcome >= moduli[f]) {
            throw InvariantError("factor ballot left the phase basis");
        }
        state = std::move(r.state);
        out.push_back(r.outcome);
    }
    return out;
}

}  // namespace

GroupRunResult run_group_traveling(const Representation& rep, const std::vector<Index>& choices, Backend backend, Rng& rng,
                                   const StepObserver& observer) {
    for (Index g : choices) {
        if (g >= rep.group.order()) {
            throw ValidationError("group element " + std::to_string(g) + " out of range");
        }
    }
    const auto ready = check_protocol_ready(rep);
    if (!ready.ready) {
        throw ValidationError("representation violates the trace condition; products would not be distinguishable (max overlap " +
                              std::to_string(ready.max_overlap) + ")");
    }
    if (rep.dim * rep.dim > kDenseBudget) {
        throw BudgetError("representation dimension too large for the two-register state");
    }
    return dispatch(backend, [&]<class S>(std::type_identity<S>) { return group_traveling_impl<S>(rep, choices, rng, observer); });
}

std::vector<Index> run_abelian_distributed(const std::vector<Index>& moduli, const std::vector<std::vector<Index>>& choices,
                                           Backend backend, Rng& rng, const StepObserver& observer) {
    if (moduli.empty()) {
        throw ValidationError("need at least one cyclic factor");
    }
    for (Index m : moduli) {
        if (m < 2) {
            throw ValidationError("cyclic factor moduli must be at least 2");
        }
    }
    if (choices.empty()) {
        throw ValidationError("need at least one party");
    }
    for (Index p = 0; p < choices.size(); ++p) {
        if (choices[p].size() != moduli.size()) {
            throw ValidationError("party " + std::to_string(p) + " must give one component per factor");
        }
        for (Index f = 0; f < moduli.size(); ++f) {
            if (choices[p][f] >= moduli[f]) {
                throw ValidationError("component " + std::to_string(choices[p][f]) + " of party " + std::to_string(p) +
                                      " out of range for Z_" + std::to_string(moduli[f]));
            }
        }
    }
    return dispatch(backend, [&]<class S>(std::type_identity<S>) { return abelian_impl<S>(moduli, choices, rng, observer); });
}

}  // namespace qballot
