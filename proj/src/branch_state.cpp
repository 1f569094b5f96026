#include "qballot/branch_state.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "qballot/error.hpp"
#include "qballot/rng.hpp"

namespace qballot {

namespace {

Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }

// Entries below this fraction of a vector's largest magnitude are treated as zero.
constexpr double kRelativeZero = 1e-14;
// Residual allowed when recognizing a fused vector as a tensor product.
constexpr double kProductTol = 1e-13;

Index repunit(Index count, Index base) {
    Index r = 0;
    for (Index i = 0; i < count; ++i) {
        r = r * base + 1;
    }
    return r;
}

/// Registers of the groups touched by an operation, in fused order.
struct Fusion {
    std::vector<Index> touched;
    std::vector<Index> regs;
    RegisterLayout layout;
    std::vector<Index> group_dims;
    Index dim = 1;
};

Fusion plan_fusion(const BranchState& s, std::span<const Index> regs) {
    s.layout().check_registers(regs);
    Fusion f;
    for (Index r : regs) {
        f.touched.push_back(s.group_of(r));
    }
    std::sort(f.touched.begin(), f.touched.end());
    f.touched.erase(std::unique(f.touched.begin(), f.touched.end()), f.touched.end());
    std::vector<Index> dims;
    for (Index g : f.touched) {
        const Index gd = s.group_dim(g);
        f.group_dims.push_back(gd);
        if (f.dim > kGroupBudget / gd) {
            throw BudgetError("operation would fuse registers into a factor larger than " + std::to_string(kGroupBudget) +
                              " amplitudes; use the dense backend");
        }
        f.dim *= gd;
        for (Index r : s.groups()[g]) {
            f.regs.push_back(r);
            dims.push_back(s.layout().dim(r));
        }
    }
    f.layout = RegisterLayout(std::move(dims));
    return f;
}

Vector fused_vector(const Branch& b, const Fusion& f) {
    Vector v = Vector::Ones(1);
    for (Index t = 0; t < f.touched.size(); ++t) {
        const Index gd = f.group_dims[t];
        const LocalFactor& fac = b.factors[f.touched[t]];
        Vector next = Vector::Zero(v.size() * ei(gd));
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (v(i) == Complex{}) {
                continue;
            }
            if (fac.is_basis()) {
                next(i * ei(gd) + ei(fac.label())) = v(i);
            } else {
                next.segment(i * ei(gd), ei(gd)) = v(i) * fac.amps();
            }
        }
        v = std::move(next);
    }
    return v;
}

/// Splits `w` over `layout` as a(pos) ⊗ rest when it is a tensor product.
std::optional<std::pair<Vector, Vector>> try_split(const Vector& w, const RegisterLayout& layout, Index pos) {
    const auto offs = layout.offsets(std::span<const Index>(&pos, 1));
    const auto bases = layout.bases(std::span<const Index>(&pos, 1));
    Index x0 = 0, y0 = 0;
    double best = -1.0;
    for (Index x = 0; x < offs.size(); ++x) {
        for (Index y = 0; y < bases.size(); ++y) {
            const double m = std::abs(w(ei(bases[y] + offs[x])));
            if (m > best) {
                best = m;
                x0 = x;
                y0 = y;
            }
        }
    }
    if (!(best > 0.0)) {
        return std::nullopt;
    }
    Vector a(ei(offs.size()));
    Vector rest(ei(bases.size()));
    const Complex pivot = w(ei(bases[y0] + offs[x0]));
    for (Index x = 0; x < offs.size(); ++x) {
        a(ei(x)) = w(ei(bases[y0] + offs[x]));
    }
    for (Index y = 0; y < bases.size(); ++y) {
        rest(ei(y)) = w(ei(bases[y] + offs[x0])) / pivot;
    }
    const double tol = kProductTol * best;
    for (Index x = 0; x < offs.size(); ++x) {
        for (Index y = 0; y < bases.size(); ++y) {
            if (std::abs(w(ei(bases[y] + offs[x])) - a(ei(x)) * rest(ei(y))) > tol) {
                return std::nullopt;
            }
        }
    }
    return std::make_pair(std::move(a), std::move(rest));
}

/// Turns a raw factor vector into canonical form, folding its scale into `coeff`.
LocalFactor canonical_factor(Vector v, Complex& coeff) {
    const double maxabs = v.cwiseAbs().maxCoeff();
    if (!(maxabs > 0.0)) {
        coeff = 0.0;
        return LocalFactor::basis(0);
    }
    Index nonzero = 0, where = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) <= kRelativeZero * maxabs) {
            v(i) = 0.0;
        } else {
            ++nonzero;
            where = static_cast<Index>(i);
        }
    }
    if (nonzero == 1) {
        coeff *= v(ei(where));
        return LocalFactor::basis(where);
    }
    const double n = v.norm();
    coeff *= n;
    return LocalFactor::vector(v / n);
}

bool same_factor(const LocalFactor& a, const LocalFactor& b) {
    if (a.is_basis() != b.is_basis()) {
        return false;
    }
    if (a.is_basis()) {
        return a.label() == b.label();
    }
    return a.amps().size() == b.amps().size() && (a.amps() - b.amps()).cwiseAbs().maxCoeff() <= 1e-14;
}

/// Merges branches with identical factors and drops vanishing ones.
std::vector<Branch> merge_branches(std::vector<Branch> in) {
    std::vector<Branch> out;
    for (auto& b : in) {
        if (b.coeff == Complex{}) {
            continue;
        }
        bool merged = false;
        for (auto& o : out) {
            bool same = true;
            for (Index g = 0; g < b.factors.size() && same; ++g) {
                same = same_factor(o.factors[g], b.factors[g]);
            }
            if (same) {
                o.coeff += b.coeff;
                merged = true;
                break;
            }
        }
        if (!merged) {
            out.push_back(std::move(b));
        }
    }
    double maxc = 0.0;
    for (const auto& b : out) {
        maxc = std::max(maxc, std::abs(b.coeff));
    }
    std::erase_if(out, [&](const Branch& b) { return std::abs(b.coeff) <= kRelativeZero * maxc; });
    return out;
}

/// Sorts groups by their first register and permutes branch factors to match.
BranchState assemble(RegisterLayout layout, std::vector<std::vector<Index>> groups, std::vector<Branch> branches) {
    std::vector<Index> order(groups.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return groups[a].front() < groups[b].front(); });
    std::vector<std::vector<Index>> sorted_groups;
    for (Index i : order) {
        sorted_groups.push_back(std::move(groups[i]));
    }
    for (auto& b : branches) {
        std::vector<LocalFactor> f;
        f.reserve(order.size());
        for (Index i : order) {
            f.push_back(std::move(b.factors[i]));
        }
        b.factors = std::move(f);
    }
    return BranchState::unchecked(std::move(layout), std::move(sorted_groups), merge_branches(std::move(branches)));
}

/// Replaces the touched groups by the finest product structure shared by all
/// branches' new fused vectors.
BranchState restructure(const BranchState& s, const Fusion& f, std::vector<Complex> coeffs, std::vector<Vector> fused) {
    // Drop vanishing branches first.
    std::vector<Index> live;
    for (Index b = 0; b < fused.size(); ++b) {
        if (coeffs[b] != Complex{} && fused[b].cwiseAbs().maxCoeff() > 0.0) {
            live.push_back(b);
        }
    }
    std::vector<std::vector<Index>> new_groups;
    std::vector<std::vector<Vector>> new_factors(live.size());
    std::vector<Index> remaining = f.regs;
    std::vector<Index> remaining_dims(f.layout.dims());
    std::vector<Vector> work;
    for (Index b : live) {
        work.push_back(fused[b]);
    }
    Index pos = 0;
    while (remaining.size() > 1 && pos < remaining.size()) {
        RegisterLayout rl(remaining_dims);
        std::vector<std::pair<Vector, Vector>> parts;
        bool ok = true;
        for (const auto& w : work) {
            auto split = try_split(w, rl, pos);
            if (!split) {
                ok = false;
                break;
            }
            parts.push_back(std::move(*split));
        }
        if (!ok) {
            ++pos;
            continue;
        }
        new_groups.push_back({remaining[pos]});
        for (Index i = 0; i < parts.size(); ++i) {
            new_factors[i].push_back(std::move(parts[i].first));
            work[i] = std::move(parts[i].second);
        }
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pos));
        remaining_dims.erase(remaining_dims.begin() + static_cast<std::ptrdiff_t>(pos));
    }
    new_groups.push_back(remaining);
    for (Index i = 0; i < work.size(); ++i) {
        new_factors[i].push_back(std::move(work[i]));
    }

    std::vector<std::vector<Index>> groups;
    std::vector<Index> kept;
    for (Index g = 0; g < s.groups().size(); ++g) {
        if (!std::binary_search(f.touched.begin(), f.touched.end(), g)) {
            groups.push_back(s.groups()[g]);
            kept.push_back(g);
        }
    }
    for (auto& g : new_groups) {
        groups.push_back(g);
    }
    std::vector<Branch> branches;
    branches.reserve(live.size());
    for (Index i = 0; i < live.size(); ++i) {
        const Branch& src = s.branches()[live[i]];
        Branch nb{coeffs[live[i]], {}};
        nb.factors.reserve(groups.size());
        for (Index g : kept) {
            nb.factors.push_back(src.factors[g]);
        }
        for (auto& v : new_factors[i]) {
            nb.factors.push_back(canonical_factor(std::move(v), nb.coeff));
        }
        branches.push_back(std::move(nb));
    }
    return assemble(s.layout(), std::move(groups), std::move(branches));
}

/// (op ⊗ I) on `regs` without renormalization.
BranchState transform(const BranchState& s, std::span<const Index> regs, const Operator& op) {
    if (regs.empty()) {
        throw ValidationError("operation needs at least one register");
    }
    const Index joint = s.layout().joint_dim(regs);
    if (joint != op.dim()) {
        throw ValidationError("operator dimension " + std::to_string(op.dim()) +
                              " does not match joint register dimension " + std::to_string(joint));
    }
    const Fusion f = plan_fusion(s, regs);
    std::vector<Index> pos;
    for (Index r : regs) {
        pos.push_back(static_cast<Index>(std::find(f.regs.begin(), f.regs.end(), r) - f.regs.begin()));
    }
    const auto offsets = f.layout.offsets(pos);
    const auto bases = f.layout.bases(pos);

    const auto* mono = op.as_monomial();
    bool all_basis = mono != nullptr;
    for (const auto& b : s.branches()) {
        for (Index g : f.touched) {
            all_basis = all_basis && b.factors[g].is_basis();
        }
    }
    if (all_basis) {
        // Basis labels map to basis labels; the group structure is unchanged.
        std::vector<Index> op_index(f.dim), base_of(f.dim);
        for (Index base : bases) {
            for (Index x = 0; x < joint; ++x) {
                op_index[base + offsets[x]] = x;
                base_of[base + offsets[x]] = base;
            }
        }
        std::vector<Branch> out;
        out.reserve(s.branch_count());
        for (const auto& b : s.branches()) {
            Index label = 0;
            for (Index t = 0; t < f.touched.size(); ++t) {
                label = label * f.group_dims[t] + b.factors[f.touched[t]].label();
            }
            const Index x = op_index[label];
            const Complex v = mono->value[x];
            if (v == Complex{}) {
                continue;
            }
            Index next = base_of[label] + offsets[mono->row[x]];
            Branch nb = b;
            nb.coeff *= v;
            for (Index t = f.touched.size(); t-- > 0;) {
                nb.factors[f.touched[t]] = LocalFactor::basis(next % f.group_dims[t]);
                next /= f.group_dims[t];
            }
            out.push_back(std::move(nb));
        }
        return BranchState::unchecked(s.layout(), s.groups(), merge_branches(std::move(out)));
    }

    std::vector<Complex> coeffs;
    std::vector<Vector> fused;
    std::vector<Complex> sub_in(joint), sub_out(joint);
    for (const auto& b : s.branches()) {
        Vector v = fused_vector(b, f);
        Vector w = Vector::Zero(v.size());
        for (Index base : bases) {
            for (Index x = 0; x < joint; ++x) {
                sub_in[x] = v(ei(base + offsets[x]));
            }
            op.apply(sub_in, sub_out);
            for (Index x = 0; x < joint; ++x) {
                w(ei(base + offsets[x])) = sub_out[x];
            }
        }
        coeffs.push_back(b.coeff);
        fused.push_back(std::move(w));
    }
    return restructure(s, f, std::move(coeffs), std::move(fused));
}

BranchState normalized(BranchState s) {
    const double n2 = norm_squared(s);
    if (!(n2 > 0.0) || !std::isfinite(n2)) {
        throw InvariantError("branch state has zero norm");
    }
    auto branches = s.branches();
    const double scale = 1.0 / std::sqrt(n2);
    for (auto& b : branches) {
        b.coeff *= scale;
    }
    return BranchState(s.layout(), s.groups(), std::move(branches));
}

Index common_dim(const RegisterLayout& layout, std::span<const Index> regs) {
    const Index d = layout.dim(regs[0]);
    for (Index r : regs) {
        if (layout.dim(r) != d) {
            return 0;
        }
    }
    return d;
}

/// Whether every group touching `regs` lies inside `regs`.
bool whole_groups(const BranchState& s, std::span<const Index> regs) {
    for (Index r : regs) {
        for (Index q : s.groups()[s.group_of(r)]) {
            if (std::find(regs.begin(), regs.end(), q) == regs.end()) {
                return false;
            }
        }
    }
    return true;
}

/// Direct evaluation of GHZ-type rank-one projectors over whole groups.
struct GhzEvaluation {
    std::vector<Index> inside;
    std::vector<Index> outside;
    std::vector<std::vector<Complex>> overlaps;  // [outcome][branch]
    Matrix rest_gram;                             // ⟨rest_b|rest_b'⟩
    std::vector<double> probabilities;
    Index dim = 0;
};

GhzEvaluation evaluate_ghz(const BranchState& s, std::span<const Index> regs, const GhzMeasurement& m) {
    GhzEvaluation e;
    e.dim = common_dim(s.layout(), regs);
    for (Index g = 0; g < s.groups().size(); ++g) {
        if (std::find(regs.begin(), regs.end(), s.groups()[g].front()) != regs.end()) {
            e.inside.push_back(g);
        } else {
            e.outside.push_back(g);
        }
    }
    const Index nb = s.branch_count();
    e.rest_gram = Matrix::Ones(ei(nb), ei(nb));
    for (Index a = 0; a < nb; ++a) {
        for (Index b = 0; b < nb; ++b) {
            Complex g = 1.0;
            for (Index og : e.outside) {
                g *= overlap(s.branches()[a].factors[og], s.branches()[b].factors[og]);
                if (g == Complex{}) {
                    break;
                }
            }
            e.rest_gram(ei(a), ei(b)) = g;
        }
    }
    double total = 0.0;
    for (const auto& c : m.coefficients) {
        std::vector<Complex> ov(nb);
        for (Index b = 0; b < nb; ++b) {
            Complex acc{};
            for (Index j = 0; j < e.dim; ++j) {
                const Complex cj = c(ei(j));
                if (cj == Complex{}) {
                    continue;
                }
                Complex prod = s.branches()[b].coeff;
                for (Index g : e.inside) {
                    prod *= s.branches()[b].factors[g].at(j * repunit(s.groups()[g].size(), e.dim));
                    if (prod == Complex{}) {
                        break;
                    }
                }
                acc += std::conj(cj) * prod;
            }
            ov[b] = acc;
        }
        Complex p{};
        for (Index a = 0; a < nb; ++a) {
            if (ov[a] == Complex{}) {
                continue;
            }
            for (Index b = 0; b < nb; ++b) {
                p += std::conj(ov[a]) * ov[b] * e.rest_gram(ei(a), ei(b));
            }
        }
        const double pr = p.real() < kProbabilityFloor ? 0.0 : p.real();
        total += pr;
        e.overlaps.push_back(std::move(ov));
        e.probabilities.push_back(pr);
    }
    if (m.remainder) {
        const double rest = 1.0 - total;
        e.probabilities.push_back(rest < kProbabilityFloor ? 0.0 : rest);
    }
    return e;
}

std::vector<Branch> ghz_projected_branches(const BranchState& s, const GhzEvaluation& e, const Vector& c, Index k,
                                           Complex sign) {
    std::vector<Branch> out;
    for (Index j = 0; j < e.dim; ++j) {
        if (c(ei(j)) == Complex{}) {
            continue;
        }
        for (Index b = 0; b < s.branch_count(); ++b) {
            if (e.overlaps[k][b] == Complex{}) {
                continue;
            }
            Branch nb{sign * c(ei(j)) * e.overlaps[k][b], s.branches()[b].factors};
            for (Index g : e.inside) {
                nb.factors[g] = LocalFactor::basis(j * repunit(s.groups()[g].size(), e.dim));
            }
            out.push_back(std::move(nb));
        }
    }
    return out;
}

BranchState ghz_post_state(const BranchState& s, const GhzEvaluation& e, const GhzMeasurement& m, Index outcome) {
    std::vector<Branch> branches;
    if (outcome < m.coefficients.size()) {
        branches = ghz_projected_branches(s, e, m.coefficients[outcome], outcome, 1.0);
    } else {
        branches = s.branches();
        for (Index k = 0; k < m.coefficients.size(); ++k) {
            auto extra = ghz_projected_branches(s, e, m.coefficients[k], k, -1.0);
            branches.insert(branches.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
        }
    }
    return BranchState::unchecked(s.layout(), s.groups(), merge_branches(std::move(branches)));
}

std::vector<Operator> operators_for(const BranchState& s, std::span<const Index> regs, const Measurement& m) {
    const Index joint = s.layout().joint_dim(regs);
    const Index d = common_dim(s.layout(), regs);
    if (std::holds_alternative<GhzMeasurement>(m) && d == 0) {
        throw ValidationError("GHZ measurement requires registers of equal dimension");
    }
    if (joint > kGroupBudget) {
        throw BudgetError("measured registers exceed the branch factor budget; use a GHZ-type measurement or the dense backend");
    }
    validate_measurement(m, joint, regs.size(), d);
    return outcome_operators(m, joint, regs.size(), d);
}

bool use_ghz_path(const BranchState& s, std::span<const Index> regs, const Measurement& m) {
    if (!std::holds_alternative<GhzMeasurement>(m)) {
        return false;
    }
    const Index d = common_dim(s.layout(), regs);
    if (d == 0) {
        throw ValidationError("GHZ measurement requires registers of equal dimension");
    }
    const auto& g = std::get<GhzMeasurement>(m);
    validate_measurement(m, 0, regs.size(), d);
    (void)g;
    return whole_groups(s, regs);
}

void check_state(const BranchState& s) {
    if (s.branch_count() == 0 || s.register_count() == 0) {
        throw ValidationError("branch state has no branches");
    }
}

}  // namespace

Vector LocalFactor::dense(Index dim) const {
    if (!is_basis()) {
        return amps_;
    }
    Vector v = Vector::Zero(ei(dim));
    v(ei(label_)) = 1.0;
    return v;
}

Complex overlap(const LocalFactor& a, const LocalFactor& b) {
    if (a.is_basis() && b.is_basis()) {
        return a.label() == b.label() ? Complex(1.0) : Complex{};
    }
    if (a.is_basis()) {
        return b.amps()(ei(a.label()));
    }
    if (b.is_basis()) {
        return std::conj(a.amps()(ei(b.label())));
    }
    return a.amps().dot(b.amps());
}

BranchState BranchState::unchecked(RegisterLayout layout, std::vector<std::vector<Index>> groups, std::vector<Branch> branches) {
    BranchState s;
    s.layout_ = std::move(layout);
    s.groups_ = std::move(groups);
    s.branches_ = std::move(branches);
    s.index_groups();
    return s;
}

void BranchState::index_groups() {
    group_of_.assign(layout_.size(), static_cast<Index>(-1));
    for (Index g = 0; g < groups_.size(); ++g) {
        if (groups_[g].empty()) {
            throw ValidationError("empty register group");
        }
        for (Index r : groups_[g]) {
            if (r >= layout_.size() || group_of_[r] != static_cast<Index>(-1)) {
                throw ValidationError("register groups must partition the layout");
            }
            group_of_[r] = g;
        }
    }
    for (Index g : group_of_) {
        if (g == static_cast<Index>(-1)) {
            throw ValidationError("register groups must partition the layout");
        }
    }
}

Index BranchState::group_dim(Index g) const {
    Index d = 1;
    for (Index r : groups_.at(g)) {
        d *= layout_.dim(r);
    }
    return d;
}

BranchState::BranchState(RegisterLayout layout, std::vector<std::vector<Index>> groups, std::vector<Branch> branches)
    : layout_(std::move(layout)), groups_(std::move(groups)), branches_(std::move(branches)) {
    index_groups();
    if (branches_.empty()) {
        throw ValidationError("branch state has no branches");
    }
    for (const auto& b : branches_) {
        if (b.factors.size() != groups_.size()) {
            throw ValidationError("every branch needs one factor per register group");
        }
        if (!std::isfinite(b.coeff.real()) || !std::isfinite(b.coeff.imag())) {
            throw ValidationError("branch coefficient is not finite");
        }
        for (Index g = 0; g < groups_.size(); ++g) {
            const auto& f = b.factors[g];
            const Index gd = group_dim(g);
            if (f.is_basis() ? f.label() >= gd : static_cast<Index>(f.amps().size()) != gd) {
                throw ValidationError("factor does not match its register group dimension");
            }
            if (!f.is_basis() && (!f.amps().allFinite() || !(f.amps().squaredNorm() > 0.0))) {
                throw ValidationError("factor vector must be finite and non-zero");
            }
        }
    }
    const double n2 = norm_squared(*this);
    if (std::abs(std::sqrt(n2) - 1.0) > kNormTol) {
        throw ValidationError("branch state is not normalized (norm² = " + std::to_string(n2) + ")");
    }
}

double norm_squared(const BranchState& s) {
    Complex acc{};
    const auto& br = s.branches();
    for (Index a = 0; a < br.size(); ++a) {
        for (Index b = 0; b < br.size(); ++b) {
            Complex g = std::conj(br[a].coeff) * br[b].coeff;
            for (Index f = 0; f < br[a].factors.size() && g != Complex{}; ++f) {
                g *= overlap(br[a].factors[f], br[b].factors[f]);
            }
            acc += g;
        }
    }
    return acc.real();
}

BranchState ghz_branches(Index dim, Index count) {
    if (dim < 2) {
        throw ValidationError("register dimension must be at least 2, got " + std::to_string(dim));
    }
    if (count < 1) {
        throw ValidationError("GHZ state needs at least one register");
    }
    std::vector<std::vector<Index>> groups;
    for (Index r = 0; r < count; ++r) {
        groups.push_back({r});
    }
    std::vector<Branch> branches;
    const double a = 1.0 / std::sqrt(static_cast<double>(dim));
    for (Index j = 0; j < dim; ++j) {
        branches.push_back({a, std::vector<LocalFactor>(count, LocalFactor::basis(j))});
    }
    return BranchState(RegisterLayout::uniform(dim, count), std::move(groups), std::move(branches));
}

BranchState apply_local(const BranchState& state, Index reg, const Matrix& u) {
    return apply_joint(state, std::span<const Index>(&reg, 1), Operator::unitary(u));
}

BranchState apply_local(const BranchState& state, Index reg, const Operator& u) {
    return apply_joint(state, std::span<const Index>(&reg, 1), u);
}

BranchState apply_joint(const BranchState& state, std::span<const Index> regs, const Matrix& u) {
    return apply_joint(state, regs, Operator::unitary(u));
}

BranchState apply_joint(const BranchState& state, std::span<const Index> regs, const Operator& u) {
    check_state(state);
    return normalized(transform(state, regs, u));
}

BranchState attach_register(const BranchState& state, Index dim, const LocalFactor& initial) {
    check_state(state);
    if (initial.is_basis() ? initial.label() >= dim : static_cast<Index>(initial.amps().size()) != dim) {
        throw ValidationError("initial factor does not match the register dimension");
    }
    const double n2 = initial.norm_squared();
    if (!(n2 > 0.0) || std::sqrt(n2) > 1.0 + kNormTol) {
        throw ValidationError("initial factor norm must lie in (0, 1]");
    }
    const Index reg = state.register_count();
    auto groups = state.groups();
    groups.push_back({reg});
    auto branches = state.branches();
    Complex scale = 1.0;
    const LocalFactor f = initial.is_basis() ? initial : canonical_factor(initial.amps(), scale);
    for (auto& b : branches) {
        b.coeff *= scale;
        b.factors.push_back(f);
    }
    return normalized(BranchState::unchecked(state.layout().with_register(dim), std::move(groups), std::move(branches)));
}

BranchState attach_register(const BranchState& state, const Vector& initial) {
    return attach_register(state, static_cast<Index>(initial.size()), LocalFactor::vector(initial));
}

BranchState detach_register(const BranchState& state, Index reg, const Vector& expected) {
    check_state(state);
    if (state.register_count() < 2) {
        throw ValidationError("cannot detach the only register");
    }
    const Index dim = state.layout().dim(reg);
    if (static_cast<Index>(expected.size()) != dim) {
        throw ValidationError("expected local state has wrong dimension");
    }
    const Index g = state.group_of(reg);
    const auto& members = state.groups()[g];
    std::vector<std::vector<Index>> groups;
    std::vector<Branch> branches = state.branches();
    const Index pos = static_cast<Index>(std::find(members.begin(), members.end(), reg) - members.begin());
    std::vector<Index> member_dims;
    for (Index r : members) {
        member_dims.push_back(state.layout().dim(r));
    }
    const RegisterLayout gl(member_dims);
    const auto offs = gl.offsets(std::span<const Index>(&pos, 1));
    const auto bases = gl.bases(std::span<const Index>(&pos, 1));
    for (auto& b : branches) {
        const Vector v = b.factors[g].dense(gl.total());
        Vector rest(ei(bases.size()));
        for (Index y = 0; y < bases.size(); ++y) {
            Complex acc{};
            for (Index x = 0; x < dim; ++x) {
                acc += std::conj(expected(ei(x))) * v(ei(bases[y] + offs[x]));
            }
            rest(ei(y)) = acc;
        }
        if (members.size() == 1) {
            b.coeff *= rest(0);
            b.factors.erase(b.factors.begin() + static_cast<std::ptrdiff_t>(g));
        } else {
            b.factors[g] = canonical_factor(std::move(rest), b.coeff);
        }
    }
    for (Index h = 0; h < state.groups().size(); ++h) {
        std::vector<Index> grp;
        for (Index r : state.groups()[h]) {
            if (r != reg) {
                grp.push_back(r > reg ? r - 1 : r);
            }
        }
        if (!grp.empty()) {
            groups.push_back(std::move(grp));
        }
    }
    auto out = BranchState::unchecked(state.layout().without_register(reg), std::move(groups), merge_branches(std::move(branches)));
    const double n2 = norm_squared(out);
    if (std::abs(std::sqrt(std::max(n2, 0.0)) - 1.0) > 1e-10) {
        throw InvariantError("register " + std::to_string(reg) + " is not in the expected product state (overlap " +
                             std::to_string(std::sqrt(std::max(n2, 0.0))) + ")");
    }
    return normalized(std::move(out));
}

std::vector<double> outcome_probabilities(const BranchState& state, std::span<const Index> regs, const Measurement& m) {
    check_state(state);
    if (regs.empty()) {
        throw ValidationError("measurement needs at least one register");
    }
    state.layout().check_registers(regs);
    if (use_ghz_path(state, regs, m)) {
        return evaluate_ghz(state, regs, std::get<GhzMeasurement>(m)).probabilities;
    }
    std::vector<double> p;
    for (const auto& op : operators_for(state, regs, m)) {
        const double w = norm_squared(transform(state, regs, op));
        p.push_back(w < kProbabilityFloor ? 0.0 : w);
    }
    return p;
}

Projection<BranchState> project(const BranchState& state, std::span<const Index> regs, const Measurement& m, Index outcome) {
    check_state(state);
    if (regs.empty()) {
        throw ValidationError("measurement needs at least one register");
    }
    state.layout().check_registers(regs);
    if (outcome >= outcome_count(m)) {
        throw ValidationError("outcome " + std::to_string(outcome) + " out of range");
    }
    BranchState post;
    if (use_ghz_path(state, regs, m)) {
        const auto& g = std::get<GhzMeasurement>(m);
        const auto e = evaluate_ghz(state, regs, g);
        if (e.probabilities[outcome] <= 0.0) {
            throw InvariantError("projection onto outcome " + std::to_string(outcome) + " has zero probability");
        }
        post = ghz_post_state(state, e, g, outcome);
    } else {
        post = transform(state, regs, operators_for(state, regs, m)[outcome]);
    }
    const double p = norm_squared(post);
    if (p < kProbabilityFloor) {
        throw InvariantError("projection onto outcome " + std::to_string(outcome) + " has zero probability");
    }
    return {normalized(std::move(post)), p};
}

MeasureResult<BranchState> measure(const BranchState& state, std::span<const Index> regs, const Measurement& m, Rng& rng) {
    check_state(state);
    if (regs.empty()) {
        throw ValidationError("measurement needs at least one register");
    }
    state.layout().check_registers(regs);
    if (use_ghz_path(state, regs, m)) {
        const auto& g = std::get<GhzMeasurement>(m);
        const auto e = evaluate_ghz(state, regs, g);
        const Index k = sample_outcome(e.probabilities, rng.uniform());
        auto post = ghz_post_state(state, e, g, k);
        const double p = norm_squared(post);
        return {k, normalized(std::move(post)), p};
    }
    std::vector<BranchState> posts;
    std::vector<double> p;
    for (const auto& op : operators_for(state, regs, m)) {
        posts.push_back(transform(state, regs, op));
        const double w = posts.back().branch_count() == 0 ? 0.0 : norm_squared(posts.back());
        p.push_back(w < kProbabilityFloor ? 0.0 : w);
    }
    const Index k = sample_outcome(p, rng.uniform());
    const double pk = norm_squared(posts[k]);
    return {k, normalized(std::move(posts[k])), pk};
}

DensityMatrix partial_trace(const BranchState& state, std::span<const Index> keep) {
    check_state(state);
    if (keep.empty()) {
        throw ValidationError("partial trace must keep at least one register");
    }
    const auto& layout = state.layout();
    const Index kd = layout.joint_dim(keep);
    if (kd * kd > kDenseBudget * 4) {
        throw BudgetError("reduced density matrix on the kept registers exceeds the dense budget");
    }
    const auto& groups = state.groups();
    const auto& br = state.branches();

    // Per group: which of its registers are kept, and the kept-space digits.
    struct GroupPart {
        std::vector<Index> kept_pos;  // positions within group
        std::vector<Index> sub_of;    // kept-space index -> group-kept sub-index
        Index kept_dim = 1;
    };
    std::vector<GroupPart> parts(groups.size());
    const RegisterLayout kl = layout.subset(keep);
    for (Index g = 0; g < groups.size(); ++g) {
        auto& part = parts[g];
        part.sub_of.assign(kd, 0);
        for (Index p = 0; p < groups[g].size(); ++p) {
            const auto it = std::find(keep.begin(), keep.end(), groups[g][p]);
            if (it == keep.end()) {
                continue;
            }
            const Index kpos = static_cast<Index>(it - keep.begin());
            part.kept_pos.push_back(p);
            const Index dim = layout.dim(groups[g][p]);
            for (Index x = 0; x < kd; ++x) {
                part.sub_of[x] = part.sub_of[x] * dim + kl.digit(x, kpos);
            }
            part.kept_dim *= dim;
        }
    }

    // M_g(a,b) = Tr_{group ∖ keep} |f_a⟩⟨f_b|, a matrix on the group's kept registers.
    auto group_matrix = [&](Index g, const LocalFactor& fa, const LocalFactor& fb) -> Matrix {
        const auto& part = parts[g];
        std::vector<Index> dims;
        for (Index r : groups[g]) {
            dims.push_back(layout.dim(r));
        }
        const RegisterLayout gl(dims);
        const Vector va = fa.dense(gl.total());
        const Vector vb = fb.dense(gl.total());
        const auto offs = gl.offsets(part.kept_pos);
        const auto bases = gl.bases(part.kept_pos);
        Matrix m = Matrix::Zero(ei(part.kept_dim), ei(part.kept_dim));
        for (Index base : bases) {
            for (Index x = 0; x < part.kept_dim; ++x) {
                const Complex ax = va(ei(base + offs[x]));
                if (ax == Complex{}) {
                    continue;
                }
                for (Index y = 0; y < part.kept_dim; ++y) {
                    m(ei(x), ei(y)) += ax * std::conj(vb(ei(base + offs[y])));
                }
            }
        }
        return m;
    };

    Matrix rho = Matrix::Zero(ei(kd), ei(kd));
    for (Index a = 0; a < br.size(); ++a) {
        for (Index b = 0; b < br.size(); ++b) {
            Complex w = br[a].coeff * std::conj(br[b].coeff);
            std::vector<Index> active;
            for (Index g = 0; g < groups.size() && w != Complex{}; ++g) {
                if (parts[g].kept_pos.empty()) {
                    w *= overlap(br[b].factors[g], br[a].factors[g]);
                } else {
                    active.push_back(g);
                }
            }
            if (w == Complex{}) {
                continue;
            }
            std::vector<Matrix> mats;
            for (Index g : active) {
                mats.push_back(group_matrix(g, br[a].factors[g], br[b].factors[g]));
            }
            for (Index x = 0; x < kd; ++x) {
                for (Index y = 0; y < kd; ++y) {
                    Complex v = w;
                    for (Index i = 0; i < active.size() && v != Complex{}; ++i) {
                        const auto& part = parts[active[i]];
                        v *= mats[i](ei(part.sub_of[x]), ei(part.sub_of[y]));
                    }
                    rho(ei(x), ei(y)) += v;
                }
            }
        }
    }
    rho = (rho + rho.adjoint().eval()) * 0.5;
    return DensityMatrix(std::move(rho));
}

DenseState to_dense(const BranchState& state) {
    check_state(state);
    const auto& layout = state.layout();
    if (layout.total() > kDenseBudget) {
        throw BudgetError("dense expansion would need " + std::to_string(layout.total()) + " amplitudes (budget " +
                          std::to_string(kDenseBudget) + ")");
    }
    const Index n = layout.total();
    const auto& groups = state.groups();
    // sub-index of every flat index inside each group
    std::vector<std::vector<Index>> sub(groups.size(), std::vector<Index>(n, 0));
    for (Index g = 0; g < groups.size(); ++g) {
        for (Index r : groups[g]) {
            for (Index i = 0; i < n; ++i) {
                sub[g][i] = sub[g][i] * layout.dim(r) + layout.digit(i, r);
            }
        }
    }
    Vector v = Vector::Zero(ei(n));
    for (const auto& b : state.branches()) {
        for (Index i = 0; i < n; ++i) {
            Complex a = b.coeff;
            for (Index g = 0; g < groups.size() && a != Complex{}; ++g) {
                a *= b.factors[g].at(sub[g][i]);
            }
            v(ei(i)) += a;
        }
    }
    return DenseState::normalized(layout, std::move(v));
}

}  // namespace qballot

namespace qballot {

BranchState tensor_product(const BranchState& a, const BranchState& b) {
    check_state(a);
    check_state(b);
    std::vector<Index> dims = a.layout().dims();
    dims.insert(dims.end(), b.layout().dims().begin(), b.layout().dims().end());
    auto groups = a.groups();
    const Index shift = a.register_count();
    for (auto g : b.groups()) {
        for (auto& r : g) {
            r += shift;
        }
        groups.push_back(std::move(g));
    }
    std::vector<Branch> branches;
    for (const auto& x : a.branches()) {
        for (const auto& y : b.branches()) {
            Branch nb{x.coeff * y.coeff, x.factors};
            nb.factors.insert(nb.factors.end(), y.factors.begin(), y.factors.end());
            branches.push_back(std::move(nb));
        }
    }
    return normalized(BranchState::unchecked(RegisterLayout(std::move(dims)), std::move(groups), std::move(branches)));
}

}  // namespace qballot
