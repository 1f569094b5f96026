// One line per acceptance criterion; exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "qballot/adversary.hpp"
#include "qballot/anticheat.hpp"
#include "qballot/cli.hpp"
#include "qballot/error.hpp"
#include "qballot/group.hpp"
#include "qballot/protocols.hpp"
#include "qballot/rng.hpp"

using namespace qballot;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<std::vector<Index>> vectors(Index n, Index levels = 2) {
    std::vector<std::vector<Index>> out;
    std::vector<Index> v(n, 0);
    while (true) {
        out.push_back(v);
        Index k = 0;
        while (k < n && ++v[k] == levels) v[k++] = 0;
        if (k == n) break;
    }
    return out;
}

Index total(const std::vector<Index>& v) { return std::accumulate(v.begin(), v.end(), Index{0}); }

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

struct Recorder {
    std::vector<DenseState> states;
    StepObserver observer() {
        return [this](std::string_view, const DenseState& s) { states.push_back(s); };
    }
};

double deviation(const Recorder& a, const Recorder& b) {
    if (a.states.size() != b.states.size()) return INFINITY;
    double worst = 0.0;
    for (Index i = 0; i < a.states.size(); ++i) worst = std::max(worst, max_amplitude_deviation(a.states[i], b.states[i]));
    return worst;
}

double single_register_distance(const DenseState& s) {
    double worst = 0.0;
    for (Index r = 0; r < s.layout().size(); ++r) {
        auto rho = partial_trace(s, std::span<const Index>(&r, 1));
        worst = std::max(worst, trace_distance(rho, DensityMatrix::maximally_mixed(s.layout().dim(r))));
    }
    return worst;
}

double gram_error(const std::vector<Vector>& vs) {
    double worst = 0.0;
    for (Index a = 0; a < vs.size(); ++a)
        for (Index b = 0; b < vs.size(); ++b)
            worst = std::max(worst, std::abs(vs[a].dot(vs[b]) - (a == b ? Complex(1.0) : Complex{})));
    return worst;
}

// ---- 1 ---------------------------------------------------------------------
Outcome tally_sweep() {
    Index runs = 0, failures = 0;
    Rng rng(101);
    for (Index n = 1; n <= 4; ++n) {
        for (Backend b : {Backend::dense, Backend::branch}) {
            const Index d = n + 1;
            for (const auto& v : vectors(n)) {
                for (Scheme s : {Scheme::traveling, Scheme::distributed, Scheme::dolev}) {
                    ++runs;
                    failures += run_protocol({d, n, s, 0}, v, b, rng).m != total(v);
                }
            }
            for (Index sender = 0; sender < n; ++sender) {
                for (Index msg = 0; msg < d; ++msg) {
                    ++runs;
                    failures += run_broadcast({d, n, Scheme::broadcast, 0}, sender, msg, b, rng).m != msg;
                }
            }
            const Index sd = 3 * n + 1;
            for (const auto& v : vectors(n, 4)) {
                ++runs;
                failures += run_survey({sd, n, Scheme::survey, 0}, v, b).m != total(v);
            }
        }
    }
    return {failures == 0, std::to_string(failures) + " failures in " + std::to_string(runs) + " runs"};
}

// ---- 2 ---------------------------------------------------------------------
Outcome privacy() {
    double worst = 0.0;
    Index states = 0;
    Rng rng(202);
    auto obs = [&](std::string_view, const DenseState& s) {
        ++states;
        worst = std::max(worst, single_register_distance(s));
    };
    for (Index d = 2; d <= 4; ++d) {
        for (Index n = 1; n <= 3; ++n) {
            for (const auto& v : vectors(n)) {
                if (d > n) run_traveling({d, n, Scheme::traveling, 0}, v, Backend::dense, obs);
                if (total(v) < d) run_survey({d, n, Scheme::survey, 0}, v, Backend::dense, obs);
                // a one-party ballot is a pure single register
                if (n < 2) continue;
                if (d > n) run_distributed({d, n, Scheme::distributed, 0}, v, Backend::dense, obs);
                if (d == n + 1) run_dolev({d, n, Scheme::dolev, 0}, v, Backend::dense, rng, obs);
            }
            if (n >= 2)
                for (Index msg = 0; msg < d; ++msg) run_broadcast({d, n, Scheme::broadcast, 0}, 0, msg, Backend::dense, rng, obs);
            // anti-cheat ballots: every register after each vote
            if (n >= 2 && n < d) {
                AuthoritySecrets sec{1, 0, 0.21};
                for (const auto& v : vectors(n)) {
                    auto [ballot, kits] = setup<DenseState>(d, n, sec, AntiCheatVariant::distributed);
                    obs("setup", ballot.state);
                    for (Index k = 0; k < n; ++k) {
                        ballot = vote_distributed(ballot, k, v[k] ? kits[k].yes : kits[k].no, v[k] == 1, rng).ballot;
                        obs("vote", ballot.state);
                    }
                }
            }
        }
    }
    return {worst <= 1e-12, "max trace distance " + fmt("%.3g", worst) + " over " + std::to_string(states) + " states"};
}

// ---- 3 ---------------------------------------------------------------------
Outcome orthogonality() {
    double worst = 0.0;
    for (Index d = 2; d <= 5; ++d) {
        worst = std::max(worst, gram_error(measurements::shifted_pairs(d).vectors));
        for (Index n = 1; n <= 3; ++n) {
            // distributed ballot states for m = 0..D-1
            std::vector<Vector> psi;
            auto ghz = make_uniform_ghz(d, n);
            for (Index m = 0; m < d; ++m) {
                DenseState s = ghz;
                for (Index k = 0; k < m; ++k) s = apply_local(s, k % n, ops::clock(d, 1));
                psi.push_back(s.amplitudes());
            }
            worst = std::max(worst, gram_error(psi));
            // readout basis on the 2N ballot and voting registers
            std::vector<Vector> omega;
            const Index regs = 2 * n;
            if (std::pow(double(d), double(regs)) > 1 << 16) continue;
            Index repunit = 0;
            for (Index i = 0; i < regs; ++i) repunit = repunit * d + 1;
            Index size = 1;
            for (Index i = 0; i < regs; ++i) size *= d;
            for (const auto& c : measurements::phase_ghz(d, false).coefficients) {
                Vector v = Vector::Zero(Eigen::Index(size));
                for (Index j = 0; j < d; ++j) v(Eigen::Index(j * repunit)) = c(Eigen::Index(j));
                omega.push_back(v);
            }
            worst = std::max(worst, gram_error(omega));
        }
    }
    return {worst <= 1e-12, "max |G - I| " + fmt("%.3g", worst)};
}

// ---- 4 ---------------------------------------------------------------------
Outcome groups() {
    Index failures = 0;
    Rng rng(404);
    auto [k4, krep] = klein4();
    for (Index a = 0; a < 4; ++a)
        for (Index b = 0; b < 4; ++b)
            for (Index c = 0; c < 4; ++c)
                for (Backend be : {Backend::dense, Backend::branch})
                    failures += run_group_traveling(krep, {a, b, c}, be, rng).element != k4.multiply(c, k4.multiply(b, a));
    auto s3 = FiniteGroup::symmetric3();
    auto sreg = regular_representation(s3);
    for (Index a = 0; a < 6; ++a)
        for (Index b = 0; b < 6; ++b)
            for (Index c = 0; c < 6; ++c)
                for (Backend be : {Backend::dense, Backend::branch})
                    failures += run_group_traveling(sreg, {a, b, c}, be, rng).element != s3.multiply(c, s3.multiply(b, a));
    double trace = 0.0;
    for (const auto* rep : {&krep, &sreg})
        for (Index g = 0; g < rep->group.order(); ++g)
            if (g != rep->group.identity()) trace = std::max(trace, std::abs(rep->matrices[g].trace()));
    Index voting = 0;
    for (Index n = 1; n <= 4; ++n) {
        for (const auto& v : vectors(n)) {
            std::vector<std::vector<Index>> choices;
            for (Index x : v) choices.push_back({x});
            const Index d = n + 1;
            voting += run_abelian_distributed({d}, choices, Backend::branch, rng)[0] !=
                      run_distributed({d, n, Scheme::distributed, 0}, v, Backend::branch).m;
        }
    }
    const bool ok = failures == 0 && trace <= 1e-12 && voting == 0;
    return {ok, std::to_string(failures) + " product mismatches, max |Tr U(g!=e)| " + fmt("%.3g", trace) + ", " +
                    std::to_string(voting) + " voting mismatches"};
}

// ---- 5 ---------------------------------------------------------------------
Outcome anticheat_honest() {
    Rng rng(505);
    Index rounds = 0, wrong = 0, errors = 0;
    const Index shots = 10000;
    auto check = [&](Index d, Index n, Backend b) {
        for (const auto& v : vectors(n)) {
            for (int draw = 0; draw < 20; ++draw) {
                auto sec = draw_secrets(d, n, rng);
                for (auto variant : {AntiCheatVariant::distributed, AntiCheatVariant::traveling}) {
                    auto r = run_round(d, v, sec, {variant, b, 0}, rng);
                    ++rounds;
                    const Index want = total(v) * Index(sec.gap());
                    if (r.readout.q != want || r.readout.cheat_detected) ++wrong;
                    for (Index s = 0; s < shots; ++s) {
                        const Index o = sample_outcome(r.distribution, rng.uniform());
                        if (o == d) ++errors;
                        else if (o != want) ++wrong;
                    }
                }
            }
        }
    };
    for (Index n = 1; n <= 3; ++n) check(n + 2, n, Backend::dense);
    for (Index n = 1; n <= 6; ++n) check(n + 2, n, Backend::branch);
    return {wrong == 0 && errors == 0, std::to_string(rounds) + " rounds x " + std::to_string(shots) + " shots: " +
                                           std::to_string(wrong) + " wrong, " + std::to_string(errors) + " M_error"};
}

// ---- 6 ---------------------------------------------------------------------
Outcome cheater_distribution() {
    const Index d = 8, s = 5, trials = 100000;
    double worst_tv = 0.0;
    bool argmax_ok = true, broad = true;
    std::ostringstream modes;
    for (long long m = 0; m < 8; ++m) {
        Rng rng(600 + std::uint64_t(m));
        auto h = monte_carlo_pq(d, s, m, trials, rng);
        std::vector<double> p(d);
        for (Index q = 0; q < d; ++q) p[q] = analytic_pq(d, s, m, q);
        worst_tv = std::max(worst_tv, tv_distance(h.counts, p));
        const Index arg = Index(std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
        argmax_ok = argmax_ok && arg == mod(m - (long long)s, d);
        for (Index c : h.counts) broad = broad && c > 0;
        modes << arg << (m < 7 ? "," : "");
    }
    return {argmax_ok && broad && worst_tv <= 0.02,
            "modes [" + modes.str() + "], max TV " + fmt("%.4f", worst_tv) + (broad ? ", all outcomes seen" : ", missing outcomes")};
}

// ---- 7 ---------------------------------------------------------------------
Outcome conditional() {
    const Index d = 4;
    AuthoritySecrets sec{1, 0, 0.29};
    Rng rng(707);
    double worst = 0.0;
    Index cases = 0;
    for (const std::vector<Index>& honest : {std::vector<Index>{0, 0}, {1, 0}, {1, 1}}) {
        const long long m = (long long)total(honest);
        for (Index s = 1; s < d; ++s)
            for (int a = 0; a < 16; ++a)
                for (int b = 0; b < 16; ++b) {
                    const double ty = kTwoPi * a / 16, tn = kTwoPi * b / 16;
                    for (Index r = 0; r < d; ++r) {
                        auto out = run_cheater_attack(d, sec, honest, {s, ty, tn, r}, honest.size(), Backend::dense, rng);
                        auto want = cheater_conditional_pq(d, sec, s, m, r, ty, tn);
                        ++cases;
                        for (Index q = 0; q < d; ++q) worst = std::max(worst, std::abs(out.distribution[q] - want[q]));
                    }
                }
    }
    return {worst <= 1e-10, std::to_string(cases) + " (m,s,theta',r) cases, max deviation " + fmt("%.3g", worst)};
}

// ---- 8 ---------------------------------------------------------------------
Outcome eavesdropper() {
    const Index trials = 100000;
    bool ok = true;
    std::ostringstream detail;
    const std::vector<Index> votes{1, 0, 1};
    for (Index d : {2u, 3u, 4u, 8u}) {
        auto rep = run_trials("swap", trials, 800 + d, votes[0],
                              [&](Rng& r) { return run_swap_attack(d, votes, 0, {{0, 1}}, Backend::branch, r); });
        const double p = 1.0 - 1.0 / double(d);
        const double sigma = std::sqrt(p * (1 - p) / double(trials));
        const double z = std::abs(rep.detection_rate() - p) / sigma;
        auto open = run_trials("swap", 2000, 850 + d, votes[0],
                               [&](Rng& r) { return run_swap_attack(d, votes, 0, {}, Backend::branch, r); });
        const bool pass = z <= 3.0 && open.leaks == open.trials && open.leaks_correct == open.leaks;
        ok = ok && pass;
        if (d != 2) detail << "; ";
        detail << "D=" << d << " det " << fmt("%.4f", rep.detection_rate()) << " (" << fmt("%.2f", z) << " sigma), leak "
               << fmt("%.3f", open.leak_accuracy());
    }
    return {ok, detail.str()};
}

// ---- 9 ---------------------------------------------------------------------
Outcome no_leak_no_detect() {
    Rng rng(909);
    const Index d = 3, n = 3;
    double worst_detect = 0.0, worst_spread = 0.0;
    for (int k = 0; k < 50; ++k) {
        auto a = analyze_entangling_attack(d, n, 0, 1 + Index(k % 2), product_form_unitary(d, 2 + Index(k % 2), rng));
        worst_detect = std::max(worst_detect, 1.0 - a.simulated_non_detection);
        worst_spread = std::max({worst_spread, a.rho_e1_spread, a.rho_e1_spread_unchecked});
    }
    auto sw = analyze_entangling_attack(d, n, 0, 1, swap_attack_unitary(d));
    const double swap_detect = 1.0 - sw.simulated_non_detection;
    Index leaks = 0, correct = 0;
    for (const auto& v : vectors(n)) {
        for (int t = 0; t < 20; ++t) {
            auto o = run_swap_attack(d, v, 0, {}, Backend::dense, rng);
            leaks += o.leaked_vote.has_value();
            correct += o.leaked_vote == v[0];
        }
    }
    const bool ok = worst_detect <= 1e-9 && worst_spread <= 1e-12 && std::abs(swap_detect - (1.0 - 1.0 / d)) <= 1e-12 &&
                    leaks == correct && leaks == 160;
    return {ok, "product-form: max detection " + fmt("%.3g", worst_detect) + ", max rho_E1 spread " +
                    fmt("%.3g", worst_spread) + "; swap: detection " + fmt("%.6f", swap_detect) + ", leak accuracy " +
                    fmt("%.3f", leaks ? double(correct) / double(leaks) : 0.0)};
}

// ---- 10 --------------------------------------------------------------------
Outcome backend_equivalence() {
    double worst = 0.0;
    Index mismatches = 0, scenarios = 0;
    auto compare_protocol = [&](const std::function<Index(Backend, Rng&, const StepObserver&)>& run, std::uint64_t seed) {
        Recorder a, b;
        Rng ra(seed), rb(seed);
        const Index oa = run(Backend::dense, ra, a.observer());
        const Index ob = run(Backend::branch, rb, b.observer());
        worst = std::max(worst, deviation(a, b));
        mismatches += oa != ob;
        ++scenarios;
    };
    std::uint64_t seed = 1000;
    for (Index d = 2; d <= 4; ++d) {
        for (Index n = 1; n <= 3; ++n) {
            for (const auto& v : vectors(n)) {
                for (Scheme s : {Scheme::traveling, Scheme::distributed, Scheme::dolev, Scheme::survey}) {
                    ProtocolConfig c{d, n, s, 0};
                    try {
                        validate_votes(c, v);
                    } catch (const ValidationError&) {
                        continue;
                    }
                    compare_protocol([&](Backend b, Rng& r, const StepObserver& o) {
                        auto res = run_protocol(c, v, b, r, o);
                        Index code = res.m;
                        for (Index x : res.announcements) code = code * 31 + x;
                        return code;
                    }, ++seed);
                }
                // anti-cheat, both variants, state after every step and readout distribution
                if (n < d) {
                    AuthoritySecrets sec{1, 0, 0.37};
                    for (auto variant : {AntiCheatVariant::distributed, AntiCheatVariant::traveling}) {
                        Rng r1(++seed), r2(seed);
                        auto [bd, kd] = setup<DenseState>(d, n, sec, variant);
                        auto [bb, kb] = setup<BranchState>(d, n, sec, variant);
                        for (Index k = 0; k < n; ++k) {
                            const bool yes = v[k] == 1;
                            if (variant == AntiCheatVariant::distributed) {
                                auto sd = vote_distributed(bd, k, yes ? kd[k].yes : kd[k].no, yes, r1);
                                auto sb = vote_distributed(bb, k, yes ? kb[k].yes : kb[k].no, yes, r2);
                                mismatches += sd.r != sb.r;
                                bd = sd.ballot;
                                bb = sb.ballot;
                            } else {
                                auto sd = vote_traveling(bd, k, yes ? kd[k].yes : kd[k].no, yes, sec, r1);
                                auto sb = vote_traveling(bb, k, yes ? kb[k].yes : kb[k].no, yes, sec, r2);
                                mismatches += sd.r != sb.r;
                                bd = sd.ballot;
                                bb = sb.ballot;
                            }
                            worst = std::max(worst, max_amplitude_deviation(bd.state, to_dense(bb.state)));
                        }
                        bd = authority_correct(bd, sec);
                        bb = authority_correct(bb, sec);
                        worst = std::max(worst, max_amplitude_deviation(bd.state, to_dense(bb.state)));
                        auto pd = readout_distribution(bd), pb = readout_distribution(bb);
                        for (Index q = 0; q < pd.size(); ++q) worst = std::max(worst, std::abs(pd[q] - pb[q]));
                        mismatches += authority_readout(bd, sec, r1).q != authority_readout(bb, sec, r2).q;
                        ++scenarios;
                    }
                }
                // eavesdroppers: identical outcomes from identical seeds
                for (Index t = 0; t < 20; ++t) {
                    Rng r1(++seed), r2(seed);
                    auto eq = [&](const AttackOutcome& a, const AttackOutcome& b) {
                        return a.detected == b.detected && a.leaked_vote == b.leaked_vote && a.tally == b.tally;
                    };
                    if (n >= 2) {
                        mismatches += !eq(run_swap_attack(d, v, 0, {{0, 1}}, Backend::dense, r1),
                                          run_swap_attack(d, v, 0, {{0, 1}}, Backend::branch, r2));
                        mismatches += !eq(run_entangling_attack(d, v, 0, swap_attack_unitary(d), {{0, 1}}, Backend::dense, r1),
                                          run_entangling_attack(d, v, 0, swap_attack_unitary(d), {{0, 1}}, Backend::branch, r2));
                    }
                    mismatches += !eq(run_mitm_traveling(d, v, n - 1, Backend::dense, r1),
                                      run_mitm_traveling(d, v, n - 1, Backend::branch, r2));
                    ++scenarios;
                }
            }
            for (Index msg = 0; msg < d; ++msg) {
                compare_protocol([&](Backend b, Rng& r, const StepObserver& o) {
                    auto res = run_broadcast({d, n, Scheme::broadcast, 0}, n - 1, msg, b, r, o);
                    Index code = res.m;
                    for (Index x : res.announcements) code = code * 31 + x;
                    return code;
                }, ++seed);
            }
        }
    }
    // group multiplication with the Klein-4 representation (dimension 2)
    auto [k4, krep] = klein4();
    for (const auto& c : vectors(3, 4)) {
        compare_protocol([&](Backend b, Rng& r, const StepObserver& o) { return run_group_traveling(krep, c, b, r, o).element; },
                         ++seed);
    }
    return {worst <= 1e-12 && mismatches == 0, std::to_string(scenarios) + " scenarios, max amplitude deviation " +
                                                   fmt("%.3g", worst) + ", " + std::to_string(mismatches) + " outcome mismatches"};
}

// ---- 11 --------------------------------------------------------------------
Outcome determinism() {
    const std::vector<std::pair<std::string, Command>> scenarios{
        {"[protocol]\nscheme = dolev\nD = 4\nN = 3\nvotes = random\n[run]\nbackend = both\ntrials = 50\nseed = 3\n", Command::run},
        {"[protocol]\nscheme = distributed\nD = 4\nN = 4\nvotes = 1,0,1,0\n[attack]\nkind = swap\ntarget = 0\npairing = 0-1\n[run]\ntrials = 2000\nseed = 9\n",
         Command::attack},
        {"[protocol]\nscheme = anticheat\nD = 5\nN = 4\nvotes = 1,0,1\nl_y = 1\nl_n = 0\ndelta = 0.1\n[attack]\nkind = cheater\ns = 3\n[run]\ntrials = 200\nseed = 5\n",
         Command::attack},
        {"[protocol]\nscheme = anticheat\nD = 8\nN = 7\n[attack]\nkind = cheater_mc\ns = 5\nm = 6\n[run]\ntrials = 2000\nseed = 1\n", Command::attack},
        {"[protocol]\nscheme = traveling\nD = 5\nN = 4\nvotes = all\n[run]\nbackend = both\nseed = 2\n", Command::sweep},
        {"[protocol]\nscheme = group\ngroup = s3\nchoices = 1,2,5\n[run]\ntrials = 4\n", Command::run},
    };
    Index differing = 0;
    for (const auto& [text, cmd] : scenarios) {
        auto cfg = parse_scenario(text);
        const auto a = emit_report(execute(cfg, cmd), ReportFormat::jsonl);
        const auto b = emit_report(execute(parse_scenario(text), cmd), ReportFormat::jsonl);
        differing += a != b;
    }
    return {differing == 0, std::to_string(scenarios.size()) + " scenarios re-run, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"tally correctness sweep", tally_sweep},
        {"single-voter privacy", privacy},
        {"orthogonality of ballot and readout bases", orthogonality},
        {"group multiplication", groups},
        {"anti-cheat honest determinism", anticheat_honest},
        {"cheating-voter distribution", cheater_distribution},
        {"conditional distribution oracle", conditional},
        {"swap-attack eavesdropper statistics", eavesdropper},
        {"no-leak / no-detect dichotomy", no_leak_no_detect},
        {"backend equivalence", backend_equivalence},
        {"json-lines determinism", determinism},
    };
    int failed = 0;
    for (Index i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %zu (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed;
}
