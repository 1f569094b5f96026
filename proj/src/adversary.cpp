#include "qballot/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

#include "qballot/error.hpp"
#include "qballot/protocols.hpp"
#include "qballot/rng.hpp"

namespace qballot {

namespace {

Eigen::Index ei(Index i) { return static_cast<Eigen::Index>(i); }

constexpr double kCdfTolerance = 1e-7;
constexpr Index kInitialCells = 4096;
constexpr Index kMaxCells = Index{1} << 22;

std::vector<double> exact_cdf(Index dim, Index cells) {
    std::vector<double> f(cells + 1);
    for (Index i = 0; i <= cells; ++i) {
        f[i] = phase_cdf(dim, kTwoPi * static_cast<double>(i) / static_cast<double>(cells));
    }
    return f;
}

void check_votes_binary(const std::vector<Index>& votes) {
    for (Index v : votes) {
        if (v > 1) {
            throw ValidationError("votes must be 0 or 1");
        }
    }
}

void check_target(const std::vector<Index>& votes, Index target) {
    if (votes.empty()) {
        throw ValidationError("requires N >= 1 voters");
    }
    if (target >= votes.size()) {
        throw ValidationError("target voter " + std::to_string(target) + " out of range");
    }
}

void check_dim(Index dim) {
    if (dim < 2) {
        throw ValidationError("requires qudit dimension D >= 2");
    }
}

void check_pairing(const Pairing& pairing, Index voters) {
    std::vector<bool> used(voters, false);
    for (const auto& [a, b] : pairing) {
        if (a == b) {
            throw ValidationError("pair check needs two distinct registers");
        }
        if (a >= voters || b >= voters) {
            throw ValidationError("pairing refers to a voter out of range");
        }
        if (used[a] || used[b]) {
            throw ValidationError("pairs must be disjoint");
        }
        used[a] = used[b] = true;
    }
}

std::vector<Index> iota_regs(Index n) {
    std::vector<Index> r(n);
    std::iota(r.begin(), r.end(), Index{0});
    return r;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Matrix cheater_power(Index dim, const CheaterPlan& plan) {
    return ops::phase_ramp(dim, static_cast<double>(plan.s) * (plan.theta_n_est - plan.theta_y_est));
}

template <class S>
std::optional<S> pass_pair_checks(S state, const Pairing& pairing, Rng& rng) {
    for (const auto& p : pairing) {
        auto r = run_pair_check(state, p, rng);
        if (!r.pass) {
            return std::nullopt;
        }
        state = std::move(r.state);
    }
    return state;
}

template <class S>
AttackOutcome mitm_impl(Index dim, const std::vector<Index>& votes, Index target, Rng& rng, bool repair) {
    S state = initial_ghz<S>(dim, 2);
    const Operator plus = Operator::unitary(ops::shift(dim, 1));
    for (Index k = 0; k < target; ++k) {
        if (votes[k]) {
            state = apply_local(state, 0, plus);
        }
    }
    state = attach_register(state, ops::basis(dim, 0));
    if (votes[target]) {
        state = apply_local(state, 2, plus);
    }
    const Index eve = 2;
    auto seen = measure(state, std::span<const Index>(&eve, 1), measurements::computational(dim), rng);
    state = detach_register(seen.state, 2, ops::basis(dim, seen.outcome));
    AttackOutcome out;
    out.leaked_vote = seen.outcome;
    if (repair) {
        state = apply_local(state, 0, Operator::unitary(ops::shift(dim, static_cast<long long>(seen.outcome))));
    }
    for (Index k = target + 1; k < votes.size(); ++k) {
        if (votes[k]) {
            state = apply_local(state, 0, plus);
        }
    }
    const std::vector<Index> regs{1, 0};
    auto t = measure(state, regs, measurements::shifted_pairs(dim), rng);
    if (t.outcome < dim) {
        out.tally = t.outcome;
    }
    return out;
}

template <class S>
S cast_votes(S state, const std::vector<Index>& votes, Index dim) {
    const Operator yes = Operator::unitary(ops::clock(dim, 1));
    for (Index k = 0; k < votes.size(); ++k) {
        if (votes[k]) {
            state = apply_local(state, k, yes);
        }
    }
    return state;
}

template <class S>
std::optional<Index> authority_tally(const S& state, Index voters, Index dim, Rng& rng) {
    auto t = measure(state, iota_regs(voters), measurements::phase_ghz(dim, true), rng);
    if (t.outcome < dim) {
        return t.outcome;
    }
    return std::nullopt;
}

template <class S>
AttackOutcome swap_impl(Index dim, const std::vector<Index>& votes, Index target, const Pairing& pairing, Rng& rng,
                        bool repair) {
    const Index n = votes.size();
    S state = attach_register(initial_ghz<S>(dim, n), ops::uniform_superposition(dim));
    const std::vector<Index> eve_pair{n, target};
    const Operator sw = Operator::unitary(ops::swap(dim));
    state = apply_joint(state, eve_pair, sw);
    AttackOutcome out;
    auto checked = pass_pair_checks(std::move(state), pairing, rng);
    if (!checked) {
        out.detected = true;
        return out;
    }
    state = cast_votes(std::move(*checked), votes, dim);
    state = apply_joint(state, eve_pair, sw);
    const auto fb = measurements::fourier_basis(dim);
    auto seen = measure(state, std::span<const Index>(&n, 1), fb, rng);
    out.leaked_vote = seen.outcome;
    state = detach_register(seen.state, n, fb.vectors[seen.outcome]);
    if (repair) {
        state = apply_local(state, target, Operator::unitary(ops::clock(dim, static_cast<long long>(seen.outcome))));
    }
    out.tally = authority_tally(state, n, dim, rng);
    return out;
}

template <class S>
AttackOutcome entangling_impl(Index dim, const std::vector<Index>& votes, Index target, const Matrix& u, const Pairing& pairing,
                              Rng& rng) {
    const Index n = votes.size();
    const Index de = static_cast<Index>(u.rows()) / dim;
    S state = attach_register(initial_ghz<S>(dim, n), ops::basis(de, 0));
    const std::vector<Index> eve_pair{n, target};
    state = apply_joint(state, eve_pair, Operator::unitary(u));
    AttackOutcome out;
    auto checked = pass_pair_checks(std::move(state), pairing, rng);
    if (!checked) {
        out.detected = true;
        return out;
    }
    state = cast_votes(std::move(*checked), votes, dim);
    state = apply_joint(state, eve_pair, Operator::unitary(u.adjoint()));
    auto seen = measure(state, std::span<const Index>(&n, 1), measurements::computational(de), rng);
    out.leaked_vote = seen.outcome;
    state = detach_register(seen.state, n, ops::basis(de, seen.outcome));
    out.tally = authority_tally(state, n, dim, rng);
    return out;
}

}  // namespace

// ---- phase estimation ------------------------------------------------------

double phase_density(Index dim, double x) {
    const double d = static_cast<double>(dim);
    double acc = d;
    for (Index k = 1; k < dim; ++k) {
        acc += 2.0 * (d - static_cast<double>(k)) * std::cos(static_cast<double>(k) * x);
    }
    return acc / (kTwoPi * d);
}

double phase_cdf(Index dim, double x) {
    const double d = static_cast<double>(dim);
    double acc = d * x;
    for (Index k = 1; k < dim; ++k) {
        const double kk = static_cast<double>(k);
        acc += 2.0 * (d - kk) * std::sin(kk * x) / kk;
    }
    return acc / (kTwoPi * d);
}

PhaseSampler::PhaseSampler(Index dim) : dim_(dim) {
    if (dim < 1) {
        throw ValidationError("phase estimation needs dimension >= 1");
    }
    Index cells = kInitialCells;
    while (true) {
        cdf_ = exact_cdf(dim, cells);
        max_error_ = 0.0;
        for (Index i = 0; i < cells; ++i) {
            const double mid = kTwoPi * (static_cast<double>(i) + 0.5) / static_cast<double>(cells);
            max_error_ = std::max(max_error_, std::abs(phase_cdf(dim, mid) - 0.5 * (cdf_[i] + cdf_[i + 1])));
        }
        if (max_error_ <= kCdfTolerance || cells >= kMaxCells) {
            break;
        }
        cells *= 2;
    }
    cdf_.front() = 0.0;
    cdf_.back() = 1.0;
}

double PhaseSampler::sample_offset(Rng& rng) const {
    const double u = rng.uniform();
    const Index cells = grid_cells();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    Index i = static_cast<Index>(it - cdf_.begin());
    i = std::clamp<Index>(i, 1, cells) - 1;
    const double lo = cdf_[i], hi = cdf_[i + 1];
    const double frac = hi > lo ? (u - lo) / (hi - lo) : 0.5;
    const double x = kTwoPi * (static_cast<double>(i) + frac) / static_cast<double>(cells);
    return x >= kTwoPi ? 0.0 : x;
}

const PhaseSampler& PhaseSampler::for_dim(Index dim) {
    static std::mutex lock;
    static std::map<Index, std::unique_ptr<PhaseSampler>> cache;
    std::lock_guard guard(lock);
    auto& slot = cache[dim];
    if (!slot) {
        slot = std::make_unique<PhaseSampler>(dim);
    }
    return *slot;
}

double sample_phase_estimate(const PhasePOVM& povm, Rng& rng) {
    return wrap_angle(povm.theta_true + PhaseSampler::for_dim(povm.dim).sample_offset(rng));
}

// ---- cheating voter --------------------------------------------------------

Matrix cheater_operator(Index dim, double theta_y_est, double theta_n_est) {
    return ops::phase_ramp(dim, theta_n_est - theta_y_est);
}

CheaterOutcome run_cheater_attack(Index dim, const AuthoritySecrets& secrets, const std::vector<Index>& honest_votes,
                                  const CheaterPlan& plan, Index cheater_position, Backend backend, Rng& rng) {
    const Index n = honest_votes.size() + 1;
    validate_secrets(secrets, dim, n);
    check_votes_binary(honest_votes);
    if (plan.s == 0) {
        throw ValidationError("cheater shift count s must be at least 1 (s = 0 is an honest vote)");
    }
    if (cheater_position >= n) {
        throw ValidationError("cheater position out of range");
    }
    if (plan.r && *plan.r >= dim) {
        throw ValidationError("forced R outcome out of range");
    }
    return dispatch(backend, [&]<class S>(std::type_identity<S>) {
        auto [ballot, kits] = setup<S>(dim, n, secrets, AntiCheatVariant::distributed);
        CheaterOutcome out;
        out.plan = plan;
        Index h = 0;
        for (Index k = 0; k < n; ++k) {
            if (k == cheater_position) {
                auto step = vote_distributed(ballot, k, VotingQudit{plan.theta_n_est}, false, rng, plan.r);
                out.r = step.r;
                ballot = act_on_ballot(step.ballot, k, Operator::unitary(cheater_power(dim, plan)));
            } else {
                const bool yes = honest_votes[h++] == 1;
                ballot = vote_distributed(ballot, k, yes ? kits[k].yes : kits[k].no, yes, rng).ballot;
            }
        }
        ballot = authority_correct(ballot, secrets);
        out.distribution = readout_distribution(ballot);
        out.outcome = sample_outcome(out.distribution, rng.uniform());
        out.readout = interpret_readout(out.outcome, dim, n, secrets);
        out.transcript = ballot.transcript;
        return out;
    });
}

CheaterOutcome run_cheater_attack_sampled(Index dim, const AuthoritySecrets& secrets, const std::vector<Index>& honest_votes,
                                          Index s, Index cheater_position, Backend backend, Rng& rng) {
    CheaterPlan plan;
    plan.s = s;
    plan.theta_y_est = sample_phase_estimate({dim, secrets.theta_y(dim)}, rng);
    plan.theta_n_est = sample_phase_estimate({dim, secrets.theta_n(dim)}, rng);
    return run_cheater_attack(dim, secrets, honest_votes, plan, cheater_position, backend, rng);
}

std::vector<double> cheater_conditional_pq(Index dim, const AuthoritySecrets& secrets, Index s, long long m, Index r,
                                            double theta_y_est, double theta_n_est) {
    if (r >= dim) {
        throw ValidationError("R outcome out of range");
    }
    const double d = static_cast<double>(dim);
    const double ty = secrets.theta_y(dim), tn = secrets.theta_n(dim);
    const double big_delta = ty - tn;
    const Complex wrap = unit_phase(d * (theta_n_est - secrets.delta));
    std::vector<double> p(dim);
    for (Index q = 0; q < dim; ++q) {
        const double phi = static_cast<double>(m) * big_delta - tn - kTwoPi * static_cast<double>(q) / d;
        const double alpha = static_cast<double>(s) * (theta_n_est - theta_y_est) + theta_n_est + phi;
        Complex head{}, tail{};
        for (Index j = 0; j < dim; ++j) {
            const Complex e = unit_phase(static_cast<double>(j) * alpha);
            (j < r ? head : tail) += e;
        }
        p[q] = std::norm(wrap * head + tail) / (d * d);
    }
    return p;
}

double analytic_pq_contrast(Index dim, Index s) {
    if (dim < 2 || 2 * s <= dim || s >= dim) {
        throw ValidationError("closed form holds only for D/2 < s < D (got D=" + std::to_string(dim) + ", s=" +
                              std::to_string(s) + ")");
    }
    const double d = static_cast<double>(dim), ss = static_cast<double>(s);
    return 2.0 * (d - ss) * ((d - 2.0) * (d - ss - 1.0) + (ss + 1.0)) / (d * d * d);
}

double analytic_pq(Index dim, Index s, long long m, Index q) {
    const double c = analytic_pq_contrast(dim, s);
    if (q >= dim) {
        throw ValidationError("q out of range");
    }
    const double d = static_cast<double>(dim);
    const long long arg = m - static_cast<long long>(s) - static_cast<long long>(q);
    return (1.0 + c * std::cos(kTwoPi * static_cast<double>(arg) / d)) / d;
}

PqHistogram monte_carlo_pq(Index dim, Index s, long long m, Index trials, Rng& rng) {
    analytic_pq_contrast(dim, s);
    const Index n = dim - 1;
    if (m < 0 || m > static_cast<long long>(n)) {
        throw ValidationError("m must lie in [0, N]");
    }
    PqHistogram h;
    h.counts.assign(dim, 0);
    h.by_r.assign(dim, std::vector<Index>(dim, 0));
    const auto& sampler = PhaseSampler::for_dim(dim);
    const double d = static_cast<double>(dim);
    const auto readout = measurements::phase_ghz(dim, true);
    const auto offset = measurements::ballot_offset(dim);
    const std::vector<Index> cheater{1, 2};
    for (Index t = 0; t < trials; ++t) {
        Rng stream = rng.split(t);
        AuthoritySecrets sec{1, 0, stream.uniform() * kTwoPi / d};
        const double ty = sec.theta_y(dim), tn = sec.theta_n(dim);
        const double ty_est = wrap_angle(ty + sampler.sample_offset(stream));
        const double tn_est = wrap_angle(tn + sampler.sample_offset(stream));
        // Corrected state of the 2N−1 registers before the cheater, carried by register 0 and the cheater's ballot.
        const double phase = static_cast<double>(m) * ty + static_cast<double>(static_cast<long long>(n) - 1 - m) * tn;
        Vector pre = Vector::Zero(ei(dim * dim));
        for (Index j = 0; j < dim; ++j) {
            pre(ei(j * dim + j)) = unit_phase(static_cast<double>(j) * phase) / std::sqrt(d);
        }
        DenseState state(RegisterLayout::uniform(dim, 2), pre);
        state = attach_register(state, ops::phase_state(dim, tn_est));
        auto rm = measure(state, cheater, offset, stream);
        const Index r = rm.outcome;
        state = apply_local(rm.state, 2, Operator::unitary(ops::shift(dim, static_cast<long long>(r))));
        const CheaterPlan plan{s, ty_est, tn_est, r};
        state = apply_local(state, 1, Operator::unitary(cheater_power(dim, plan)));
        Matrix corr = correction_w(dim, r, sec.delta) * ops::phase_ramp(dim, -static_cast<double>(n) * tn);
        state = apply_local(state, 0, Operator::unitary(corr));
        // Born rule for the GHZ readout, read off the |jjj⟩ amplitudes.
        const Vector& amp = state.amplitudes();
        const Index diag = dim * dim + dim + 1;
        std::vector<double> probs(dim + 1);
        double covered = 0.0;
        for (Index k = 0; k < dim; ++k) {
            Complex overlap{};
            for (Index j = 0; j < dim; ++j) {
                overlap += std::conj(readout.coefficients[k](ei(j))) * amp(ei(j * diag));
            }
            probs[k] = std::norm(overlap);
            covered += probs[k];
        }
        probs[dim] = std::max(0.0, 1.0 - covered);
        for (double& p : probs) {
            if (p < kProbabilityFloor) {
                p = 0.0;
            }
        }
        const Index q = sample_outcome(probs, stream.uniform());
        ++h.trials;
        if (q >= dim) {
            ++h.errors;
            continue;
        }
        ++h.counts[q];
        ++h.by_r[r][q];
    }
    return h;
}

PqHistogram cheater_histogram(Index dim, const AuthoritySecrets& secrets, const std::vector<Index>& honest_votes, Index s,
                              Index cheater_position, Index trials, Backend backend, Rng& rng) {
    PqHistogram h;
    h.counts.assign(dim, 0);
    h.by_r.assign(dim, std::vector<Index>(dim, 0));
    for (Index t = 0; t < trials; ++t) {
        Rng stream = rng.split(t);
        auto out = run_cheater_attack_sampled(dim, secrets, honest_votes, s, cheater_position, backend, stream);
        ++h.trials;
        if (out.outcome >= dim) {
            ++h.errors;
            continue;
        }
        ++h.counts[out.outcome];
        ++h.by_r[out.r][out.outcome];
    }
    return h;
}

double tv_distance(const std::vector<Index>& counts, const std::vector<double>& probabilities) {
    if (counts.size() != probabilities.size()) {
        throw ValidationError("histogram and distribution sizes differ");
    }
    const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), Index{0}));
    if (total == 0.0) {
        throw ValidationError("empty histogram");
    }
    double tv = 0.0;
    for (Index i = 0; i < counts.size(); ++i) {
        tv += std::abs(static_cast<double>(counts[i]) / total - probabilities[i]);
    }
    return 0.5 * tv;
}

// ---- eavesdroppers ---------------------------------------------------------

AttackReport run_trials(std::string kind, Index trials, std::uint64_t seed, std::optional<Index> true_vote,
                        const std::function<AttackOutcome(Rng&)>& trial) {
    AttackReport rep;
    rep.kind = std::move(kind);
    rep.seed = seed;
    const Rng root(seed);
    rep.outcomes.reserve(trials);
    for (Index t = 0; t < trials; ++t) {
        Rng stream = root.split(t);
        AttackOutcome o = trial(stream);
        ++rep.trials;
        if (o.detected) {
            ++rep.detections;
        }
        if (o.leaked_vote) {
            ++rep.leaks;
            if (rep.histogram.size() <= *o.leaked_vote) {
                rep.histogram.resize(*o.leaked_vote + 1, 0);
            }
            ++rep.histogram[*o.leaked_vote];
            if (true_vote && *o.leaked_vote == *true_vote) {
                ++rep.leaks_correct;
            }
        }
        rep.outcomes.push_back(o);
    }
    return rep;
}

AttackOutcome run_mitm_traveling(Index dim, const std::vector<Index>& votes, Index target, Backend backend, Rng& rng,
                                 bool repair) {
    check_target(votes, target);
    check_votes_binary(votes);
    check_dim(dim);
    return dispatch(backend, [&]<class S>(std::type_identity<S>) { return mitm_impl<S>(dim, votes, target, rng, repair); });
}

AttackOutcome run_swap_attack(Index dim, const std::vector<Index>& votes, Index target, const Pairing& pairing,
                              Backend backend, Rng& rng, bool repair) {
    check_target(votes, target);
    check_votes_binary(votes);
    check_dim(dim);
    check_pairing(pairing, votes.size());
    return dispatch(backend,
                    [&]<class S>(std::type_identity<S>) { return swap_impl<S>(dim, votes, target, pairing, rng, repair); });
}

AttackOutcome run_entangling_attack(Index dim, const std::vector<Index>& votes, Index target, const Matrix& u_e1,
                                    const Pairing& pairing, Backend backend, Rng& rng) {
    check_target(votes, target);
    check_votes_binary(votes);
    check_dim(dim);
    check_pairing(pairing, votes.size());
    if (u_e1.rows() % static_cast<Eigen::Index>(dim) != 0 || u_e1.rows() / static_cast<Eigen::Index>(dim) < 2) {
        throw ValidationError("U_E1 must act on (ancilla of dimension >= 2) x (ballot register)");
    }
    if (!is_unitary(u_e1)) {
        throw ValidationError("U_E1 is not unitary");
    }
    return dispatch(backend,
                    [&]<class S>(std::type_identity<S>) { return entangling_impl<S>(dim, votes, target, u_e1, pairing, rng); });
}

Matrix swap_attack_unitary(Index dim) { return ops::swap(dim) * kron(ops::fourier(dim), ops::identity(dim)); }

Matrix product_form_unitary(Index dim, Index ancilla_dim, Rng& rng) {
    if (ancilla_dim < 2) {
        throw ValidationError("ancilla dimension must be at least 2");
    }
    const Index n = ancilla_dim * dim;
    Matrix u = Matrix::Zero(ei(n), ei(n));
    for (Index j = 0; j < dim; ++j) {
        const Matrix v = ops::haar_unitary(ancilla_dim, rng);
        for (Index a = 0; a < ancilla_dim; ++a) {
            for (Index b = 0; b < ancilla_dim; ++b) {
                u(ei(a * dim + j), ei(b * dim + j)) = v(ei(a), ei(b));
            }
        }
    }
    return u;
}

EntanglingAnalysis analyze_entangling_attack(Index dim, Index voters, Index target, Index partner, const Matrix& u_e1) {
    if (target >= voters || partner >= voters || target == partner) {
        throw ValidationError("target and partner must be distinct voters");
    }
    if (!is_unitary(u_e1) || u_e1.rows() % static_cast<Eigen::Index>(dim) != 0) {
        throw ValidationError("U_E1 must be unitary on (ancilla) x (ballot register)");
    }
    const Index de = static_cast<Index>(u_e1.rows()) / dim;
    EntanglingAnalysis a;
    for (Index j = 0; j < dim; ++j) {
        for (Index e = 0; e < de; ++e) {
            a.analytic_non_detection += std::norm(u_e1(ei(e * dim + j), ei(j)));
        }
    }
    a.analytic_non_detection /= static_cast<double>(dim);

    DenseState attacked = attach_register(make_uniform_ghz(dim, voters), ops::basis(de, 0));
    const std::vector<Index> eve_pair{voters, target};
    attacked = apply_joint(attacked, eve_pair, u_e1);
    const std::vector<Index> pair{target, partner};
    const auto check = measurements::agreement(dim, 2);
    a.simulated_non_detection = outcome_probabilities(attacked, pair, check)[1];
    std::optional<DenseState> passed;
    if (a.simulated_non_detection > 0.0) {
        passed = project(attacked, pair, check, 1).state;
    }
    const std::vector<Index> keep{voters, target};
    std::optional<DensityMatrix> ref_passed, ref_unchecked;
    for (Index mask = 0; mask < (Index{1} << voters); ++mask) {
        std::vector<Index> votes(voters);
        for (Index k = 0; k < voters; ++k) {
            votes[k] = (mask >> k) & 1;
        }
        auto unchecked = partial_trace(cast_votes(attacked, votes, dim), keep);
        if (!ref_unchecked) {
            ref_unchecked = unchecked;
        }
        a.rho_e1_spread_unchecked = std::max(a.rho_e1_spread_unchecked, trace_distance(*ref_unchecked, unchecked));
        if (passed) {
            auto rho = partial_trace(cast_votes(*passed, votes, dim), keep);
            if (!ref_passed) {
                ref_passed = rho;
            }
            a.rho_e1_spread = std::max(a.rho_e1_spread, trace_distance(*ref_passed, rho));
        }
    }
    return a;
}

template <class S>
PairCheckResult<S> run_pair_check(const S& state, std::pair<Index, Index> pair, Rng& rng) {
    if (pair.first == pair.second) {
        throw ValidationError("pair check needs two distinct registers");
    }
    const std::vector<Index> regs{pair.first, pair.second};
    const Index d = state.layout().dim(pair.first);
    if (state.layout().dim(pair.second) != d) {
        throw ValidationError("pair check registers must have equal dimension");
    }
    auto r = measure(state, regs, measurements::agreement(d, 2), rng);
    return {r.outcome == 1, std::move(r.state)};
}

template PairCheckResult<DenseState> run_pair_check<DenseState>(const DenseState&, std::pair<Index, Index>, Rng&);
template PairCheckResult<BranchState> run_pair_check<BranchState>(const BranchState&, std::pair<Index, Index>, Rng&);

AttackOutcome run_classical_eavesdrop(Index voters, const std::vector<Index>& votes, Index target, Rng& rng) {
    check_target(votes, target);
    check_votes_binary(votes);
    if (votes.size() != voters) {
        throw ValidationError("expected one vote per voter");
    }
    const Index base = voters + 1;
    auto ballots = sample_zero_sum_ballots(voters, rng);
    const Index before = ballots[target];
    Index total = 0;
    for (Index k = 0; k < voters; ++k) {
        ballots[k] = (ballots[k] + votes[k]) % base;
        total += ballots[k];
    }
    AttackOutcome out;
    out.leaked_vote = mod(static_cast<long long>(ballots[target]) - static_cast<long long>(before), base);
    out.tally = total % base;
    return out;
}

}  // namespace qballot
