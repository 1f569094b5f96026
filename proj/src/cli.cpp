#include "qballot/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "qballot/error.hpp"
#include "qballot/group.hpp"
#include "qballot/rng.hpp"

namespace qballot {

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"protocol",
         {"scheme", "D", "N", "votes", "yes_probability", "sender", "message", "l_y", "l_n", "delta", "variant", "group",
          "choices"}},
        {"attack",
         {"kind", "target", "s", "theta_mode", "theta_y_est", "theta_n_est", "pairing", "repair", "position", "m", "unitary",
          "ancilla_dim"}},
        {"run", {"backend", "repetitions", "trials", "seed"}},
    };
    return keys;
}

const std::set<std::string> kAttackKinds{"cheater", "cheater_mc", "mitm", "swap", "entangling", "classical"};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

[[noreturn]] void fail_at(Index line, const std::string& field, const std::string& msg) {
    std::string where = line ? "line " + std::to_string(line) + ", " : std::string();
    throw ValidationError(where + "field '" + field + "': " + msg);
}

Index line_of(const ScenarioConfig& c, const std::string& key) {
    auto it = c.lines.find(key);
    return it == c.lines.end() ? 0 : it->second;
}

[[noreturn]] void fail(const ScenarioConfig& c, const std::string& key, const std::string& msg) {
    const auto dot = key.find('.');
    fail_at(line_of(c, key), dot == std::string::npos ? key : key.substr(dot + 1), msg);
}

std::uint64_t parse_u64(const std::string& v, Index line, const std::string& field) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
        fail_at(line, field, "expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

Index parse_index(const std::string& v, Index line, const std::string& field) {
    return static_cast<Index>(parse_u64(v, line, field));
}

long long parse_int(const std::string& v, Index line, const std::string& field) {
    long long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
        fail_at(line, field, "expected an integer, got '" + v + "'");
    }
    return out;
}

double parse_real(const std::string& v, Index line, const std::string& field) {
    std::istringstream in(v);
    in.imbue(std::locale::classic());
    double out = 0.0;
    char extra = 0;
    if (!(in >> out) || (in >> extra) || !std::isfinite(out)) {
        fail_at(line, field, "expected a real number, got '" + v + "'");
    }
    return out;
}

bool parse_flag(const std::string& v, Index line, const std::string& field) {
    const auto s = lower(v);
    if (s == "true" || s == "yes" || s == "on" || s == "1") {
        return true;
    }
    if (s == "false" || s == "no" || s == "off" || s == "0") {
        return false;
    }
    fail_at(line, field, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
        out.push_back(trim(item));
    }
    if (!v.empty() && v.back() == ',') {
        out.push_back({});
    }
    return out;
}

std::vector<Index> parse_index_list(const std::string& v, Index line, const std::string& field) {
    std::vector<Index> out;
    if (trim(v).empty()) {
        return out;
    }
    for (const auto& item : split_list(v)) {
        out.push_back(parse_index(item, line, field));
    }
    return out;
}

Pairing parse_pairing(const std::string& v, Index line) {
    Pairing out;
    if (trim(v).empty()) {
        return out;
    }
    for (const auto& item : split_list(v)) {
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
            fail_at(line, "pairing", "expected pairs like '0-1, 2-3', got '" + item + "'");
        }
        out.emplace_back(parse_index(trim(item.substr(0, dash)), line, "pairing"),
                         parse_index(trim(item.substr(dash + 1)), line, "pairing"));
    }
    return out;
}

bool is_protocol_scheme(const std::string& s) {
    try {
        parse_scheme(s);
        return true;
    } catch (const ValidationError&) {
        return false;
    }
}

Index sum(const std::vector<Index>& v) { return std::accumulate(v.begin(), v.end(), Index{0}); }

std::vector<Backend> backends_of(BackendChoice b) {
    switch (b) {
        case BackendChoice::dense: return {Backend::dense};
        case BackendChoice::branch: return {Backend::branch};
        case BackendChoice::both: return {Backend::dense, Backend::branch};
    }
    return {};
}

Representation representation_for(const std::string& name) {
    if (name == "klein4") {
        return klein4().second;
    }
    if (name == "s3") {
        return regular_representation(FiniteGroup::symmetric3());
    }
    if (name.rfind("cyclic-", 0) == 0) {
        const Index n = parse_index(name.substr(7), 0, "group");
        if (n < 2) {
            throw ValidationError("cyclic group order must be at least 2");
        }
        return regular_representation(FiniteGroup::cyclic(n));
    }
    throw ValidationError("unknown group '" + name + "' (expected klein4, s3 or cyclic-<n>)");
}

/// Number of honest votes the scenario lists.
Index expected_vote_count(const ScenarioConfig& c) {
    if (c.attack && c.attack->kind == "cheater") {
        return c.voters - 1;
    }
    return c.voters;
}

bool binary_votes(const ScenarioConfig& c) { return c.scheme != "survey" && c.scheme != "broadcast" && c.scheme != "group"; }

// ---- execution helpers -----------------------------------------------------

std::vector<Index> votes_for_trial(const ScenarioConfig& c, Rng& rng) {
    if (c.vote_mode != VoteMode::random) {
        return c.votes;
    }
    std::vector<Index> v(expected_vote_count(c));
    for (auto& x : v) {
        x = rng.uniform() < c.yes_probability ? 1 : 0;
    }
    return v;
}

std::vector<std::vector<Index>> enumerate_votes(const ScenarioConfig& c) {
    std::vector<std::vector<Index>> out;
    if (c.scheme == "broadcast") {
        for (Index s = 0; s < c.voters; ++s) {
            for (Index m = 0; m < c.dim; ++m) {
                out.push_back({s, m});
            }
        }
        return out;
    }
    Index levels = 2;
    Index n = expected_vote_count(c);
    if (c.scheme == "survey") {
        levels = c.dim;
    } else if (c.scheme == "group") {
        levels = representation_for(c.group).group.order();
        n = c.voters;
    }
    std::vector<Index> v(n, 0);
    while (true) {
        if (c.scheme != "survey" || sum(v) < c.dim) {
            out.push_back(v);
        }
        Index k = 0;
        while (k < n && ++v[k] == levels) {
            v[k++] = 0;
        }
        if (k == n) {
            break;
        }
    }
    return out;
}

ProtocolConfig protocol_config(const ScenarioConfig& c) {
    return ProtocolConfig{c.dim, c.voters, parse_scheme(c.scheme), c.seed};
}

AuthoritySecrets secrets_for(const ScenarioConfig& c, Rng& rng) {
    return c.secrets_given ? c.secrets : draw_secrets(c.dim, c.voters, rng);
}

Json votes_json(const std::vector<Index>& v) {
    Json a = Json::array();
    for (Index x : v) {
        a.push_back(x);
    }
    return a;
}

template <class T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

struct Snapshots {
    std::vector<DenseState> states;
    StepObserver observer() {
        return [this](std::string_view, const DenseState& s) { states.push_back(s); };
    }
};

double snapshot_deviation(const Snapshots& a, const Snapshots& b) {
    if (a.states.size() != b.states.size()) {
        return std::numeric_limits<double>::infinity();
    }
    double worst = 0.0;
    for (Index i = 0; i < a.states.size(); ++i) {
        worst = std::max(worst, max_amplitude_deviation(a.states[i], b.states[i]));
    }
    return worst;
}

double privacy_deviation(const Snapshots& s) {
    double worst = 0.0;
    for (const auto& st : s.states) {
        for (Index r = 0; r < st.layout().size(); ++r) {
            const auto mixed = DensityMatrix::maximally_mixed(st.layout().dim(r));
            worst = std::max(worst, trace_distance(partial_trace(st, std::span<const Index>(&r, 1)), mixed));
        }
    }
    return worst;
}

Json tally_json(const TallyResult& r) {
    Json j;
    j["tally"] = r.m;
    if (!r.announcements.empty()) {
        j["announcements"] = votes_json(r.announcements);
    }
    if (r.average) {
        j["average"] = {r.average->first, r.average->second};
    }
    return j;
}

Index expected_tally(const ScenarioConfig& c, const std::vector<Index>& votes) {
    if (c.scheme == "broadcast") {
        return votes.at(1);
    }
    return sum(votes);
}

/// Runs one honest trial on every selected backend; returns the record.
Json honest_trial(const ScenarioConfig& c, Index t, const std::vector<Index>& votes, const Rng& root, bool snapshots,
                  std::vector<std::string>& failures, double* privacy = nullptr) {
    Json rec;
    rec["type"] = "trial";
    rec["trial"] = t;
    rec["votes"] = votes_json(votes);
    const auto backends = backends_of(c.backend);
    const bool compare = backends.size() > 1;
    std::vector<Json> results;
    std::vector<Snapshots> snaps(backends.size());
    for (Index i = 0; i < backends.size(); ++i) {
        Rng rng = root.split(t);
        const Backend b = backends[i];
        StepObserver obs = (compare || snapshots) ? snaps[i].observer() : StepObserver{};
        Json res;
        if (c.scheme == "anticheat") {
            const auto sec = secrets_for(c, rng);
            auto rep = run_repeated(c.dim, votes, sec, c.repetitions, {c.variant, b, 0}, rng);
            Json rounds = Json::array();
            for (const auto& r : rep.rounds) {
                rounds.push_back(optional_json(r.q));
            }
            res["rounds"] = rounds;
            res["m_inferred"] = optional_json(rep.rounds.front().m_inferred);
            res["cheat_detected"] = rep.cheat_detected;
            res["gap"] = sec.gap();
            const Index want = sum(votes);
            if (rep.cheat_detected || rep.rounds.front().m_inferred != want) {
                failures.push_back("trial " + std::to_string(t) + ": honest anti-cheat readout did not return m=" +
                                   std::to_string(want));
            }
        } else if (c.scheme == "group") {
            const auto rep = representation_for(c.group);
            auto r = run_group_traveling(rep, votes, b, rng, obs);
            const Index want = rep.group.sequential_product(votes);
            res["element"] = r.element;
            res["name"] = rep.group.name(r.element);
            res["expected"] = want;
            if (r.element != want) {
                failures.push_back("trial " + std::to_string(t) + ": group product mismatch");
            }
        } else {
            auto r = run_protocol(protocol_config(c), votes, b, rng, obs);
            res = tally_json(r);
            const Index want = expected_tally(c, votes);
            res["expected"] = want;
            if (r.m != want) {
                failures.push_back("trial " + std::to_string(t) + ": tally " + std::to_string(r.m) + " != " +
                                   std::to_string(want));
            }
        }
        results.push_back(std::move(res));
    }
    for (auto it = results.front().begin(); it != results.front().end(); ++it) {
        rec[it.key()] = it.value();
    }
    if (compare) {
        const double dev = snapshot_deviation(snaps[0], snaps[1]);
        rec["backend_deviation"] = dev;
        if (results[0] != results[1]) {
            failures.push_back("trial " + std::to_string(t) + ": dense and branch outcomes differ");
        }
        if (!(dev <= 1e-12)) {
            failures.push_back("trial " + std::to_string(t) + ": dense and branch amplitudes differ by " + std::to_string(dev));
        }
    }
    if (privacy) {
        *privacy = std::max(*privacy, privacy_deviation(snaps[0]));
    }
    return rec;
}

Json histogram_json(const std::vector<Index>& h) { return votes_json(h); }

double gram_deviation(const std::vector<Vector>& vs) {
    double worst = 0.0;
    for (Index a = 0; a < vs.size(); ++a) {
        for (Index b = 0; b < vs.size(); ++b) {
            const Complex g = vs[a].dot(vs[b]);
            worst = std::max(worst, std::abs(g - (a == b ? Complex(1.0) : Complex{})));
        }
    }
    return worst;
}

Json orthogonality_checks(const ScenarioConfig& c, std::vector<std::string>& failures) {
    Json j;
    const Index d = c.dim;
    std::vector<Vector> pairs;
    for (const auto& v : measurements::shifted_pairs(d).vectors) {
        pairs.push_back(v);
    }
    j["traveling_basis_gram"] = gram_deviation(pairs);
    std::vector<Vector> phase;
    for (const auto& v : measurements::phase_ghz(d, false).coefficients) {
        phase.push_back(v);
    }
    j["phase_basis_gram"] = gram_deviation(phase);
    if (c.voters >= 1 && std::pow(static_cast<double>(d), static_cast<double>(c.voters)) <= 65536.0) {
        std::vector<Vector> full;
        auto ghz = make_uniform_ghz(d, c.voters);
        for (Index m = 0; m < d; ++m) {
            full.push_back(apply_local(ghz, 0, ops::clock(d, static_cast<long long>(m))).amplitudes());
        }
        j["ballot_states_gram"] = gram_deviation(full);
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!(it.value().get<double>() <= 1e-12)) {
            failures.push_back(it.key() + " deviates from the identity by " + it.value().dump());
        }
    }
    return j;
}

// ---- attacks ---------------------------------------------------------------

Matrix entangling_unitary(const ScenarioConfig& c) {
    const auto& a = *c.attack;
    if (a.unitary == "identity") {
        return Matrix::Identity(static_cast<Eigen::Index>(a.ancilla_dim * c.dim), static_cast<Eigen::Index>(a.ancilla_dim * c.dim));
    }
    if (a.unitary == "swap") {
        return swap_attack_unitary(c.dim);
    }
    Rng rng = Rng(c.seed).split(0xe17a);
    return product_form_unitary(c.dim, a.ancilla_dim, rng);
}

bool pairing_contains(const Pairing& p, Index v) {
    return std::any_of(p.begin(), p.end(), [&](const auto& x) { return x.first == v || x.second == v; });
}

std::optional<double> analytic_detection(const ScenarioConfig& c) {
    const auto& a = *c.attack;
    if (a.kind == "mitm" || a.kind == "classical") {
        return 0.0;
    }
    if (a.kind == "swap") {
        return pairing_contains(a.pairing, a.target) ? 1.0 - 1.0 / static_cast<double>(c.dim) : 0.0;
    }
    if (a.kind == "entangling") {
        if (!pairing_contains(a.pairing, a.target)) {
            return 0.0;
        }
        const Matrix u = entangling_unitary(c);
        const Index de = static_cast<Index>(u.rows()) / c.dim;
        double nd = 0.0;
        for (Index j = 0; j < c.dim; ++j) {
            for (Index e = 0; e < de; ++e) {
                nd += std::norm(u(static_cast<Eigen::Index>(e * c.dim + j), static_cast<Eigen::Index>(j)));
            }
        }
        return 1.0 - nd / static_cast<double>(c.dim);
    }
    return std::nullopt;
}

AttackOutcome eavesdrop_trial(const ScenarioConfig& c, const std::vector<Index>& votes, Backend b, Rng& rng,
                              const Matrix& u) {
    const auto& a = *c.attack;
    if (a.kind == "mitm") {
        return run_mitm_traveling(c.dim, votes, a.target, b, rng, a.repair);
    }
    if (a.kind == "swap") {
        return run_swap_attack(c.dim, votes, a.target, a.pairing, b, rng, a.repair);
    }
    if (a.kind == "entangling") {
        return run_entangling_attack(c.dim, votes, a.target, u, a.pairing, b, rng);
    }
    return run_classical_eavesdrop(c.voters, votes, a.target, rng);
}

Json outcome_json(const AttackOutcome& o) {
    Json j;
    j["detected"] = o.detected;
    j["leaked_vote"] = optional_json(o.leaked_vote);
    j["tally"] = optional_json(o.tally);
    return j;
}

void eavesdrop_attack(const ScenarioConfig& c, RunReport& rep) {
    const auto& a = *c.attack;
    const Rng root(c.seed);
    const Matrix u = a.kind == "entangling" ? entangling_unitary(c) : Matrix();
    const auto backends = a.kind == "classical" ? std::vector<Backend>{Backend::dense} : backends_of(c.backend);
    Index detections = 0, leaks = 0, correct = 0, tallies_ok = 0;
    std::vector<Index> hist;
    for (Index t = 0; t < c.trials; ++t) {
        Rng vr = root.split(t).split(1);
        const auto votes = votes_for_trial(c, vr);
        std::vector<Json> results;
        AttackOutcome first;
        for (Index i = 0; i < backends.size(); ++i) {
            Rng rng = root.split(t);
            auto o = eavesdrop_trial(c, votes, backends[i], rng, u);
            if (i == 0) {
                first = o;
            }
            results.push_back(outcome_json(o));
        }
        if (results.size() > 1 && results[0] != results[1]) {
            rep.failures.push_back("trial " + std::to_string(t) + ": dense and branch attack outcomes differ");
        }
        Json rec;
        rec["type"] = "trial";
        rec["trial"] = t;
        rec["votes"] = votes_json(votes);
        for (auto it = results[0].begin(); it != results[0].end(); ++it) {
            rec[it.key()] = it.value();
        }
        rep.trials.push_back(std::move(rec));
        detections += first.detected ? 1 : 0;
        if (first.leaked_vote) {
            ++leaks;
            correct += *first.leaked_vote == votes[a.target] ? 1 : 0;
            if (hist.size() <= *first.leaked_vote) {
                hist.resize(*first.leaked_vote + 1, 0);
            }
            ++hist[*first.leaked_vote];
        }
        const Index modulus = a.kind == "classical" ? c.voters + 1 : c.dim;
        if (first.tally && *first.tally == sum(votes) % modulus) {
            ++tallies_ok;
        }
    }
    auto& s = rep.summary;
    s["detections"] = detections;
    s["detection_rate"] = c.trials ? static_cast<double>(detections) / static_cast<double>(c.trials) : 0.0;
    s["leaks"] = leaks;
    s["leaks_correct"] = correct;
    s["leak_accuracy"] = leaks ? static_cast<double>(correct) / static_cast<double>(leaks) : 0.0;
    s["leak_histogram"] = histogram_json(hist);
    s["tallies_correct"] = tallies_ok;
    if (auto p = analytic_detection(c)) {
        s["analytic_detection"] = *p;
        if (c.trials) {
            const double n = static_cast<double>(c.trials);
            const double sigma = std::sqrt(*p * (1.0 - *p) / n);
            s["binomial_sigma"] = sigma;
            const double diff = std::abs(s["detection_rate"].get<double>() - *p);
            s["deviation_sigmas"] = sigma > 0.0 ? diff / sigma : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::max());
        }
    }
}

std::vector<double> closed_form_row(const ScenarioConfig& c, long long m) {
    std::vector<double> p(c.dim);
    for (Index q = 0; q < c.dim; ++q) {
        p[q] = analytic_pq(c.dim, c.attack->s, m, q);
    }
    return p;
}

bool closed_form_regime(const ScenarioConfig& c) {
    const auto& a = *c.attack;
    return c.dim == c.voters + 1 && c.secrets.l_y == 1 && c.secrets.l_n == 0 && 2 * a.s > c.dim && a.s < c.dim;
}

void summarize_pq(const ScenarioConfig& c, RunReport& rep, const std::vector<Index>& counts, Index errors,
                  std::optional<long long> m) {
    auto& s = rep.summary;
    s["q_histogram"] = histogram_json(counts);
    s["error_outcomes"] = errors;
    const Index valid = sum(counts);
    if (valid) {
        const auto arg = std::max_element(counts.begin(), counts.end()) - counts.begin();
        s["modal_q"] = static_cast<Index>(arg);
    }
    if (m && closed_form_regime(c)) {
        const auto p = closed_form_row(c, *m);
        s["analytic_pq"] = p;
        if (valid) {
            s["tv_distance"] = tv_distance(counts, p);
        }
    }
}

void cheater_attack(const ScenarioConfig& c, RunReport& rep) {
    const auto& a = *c.attack;
    const Rng root(c.seed);
    const auto backends = backends_of(c.backend);
    std::vector<Index> counts(c.dim, 0);
    Index errors = 0, detected = 0;
    std::optional<long long> honest_m;
    for (Index t = 0; t < c.trials; ++t) {
        Rng vr = root.split(t).split(1);
        const auto votes = votes_for_trial(c, vr);
        if (c.vote_mode != VoteMode::random) {
            honest_m = static_cast<long long>(sum(votes));
        }
        std::vector<Json> results;
        CheaterOutcome first;
        for (Index i = 0; i < backends.size(); ++i) {
            Rng rng = root.split(t);
            const auto sec = secrets_for(c, rng);
            const Index pos = a.position.value_or(c.voters - 1);
            CheaterOutcome o;
            if (a.theta_mode == "sampled") {
                o = run_cheater_attack_sampled(c.dim, sec, votes, a.s, pos, backends[i], rng);
            } else {
                o = run_cheater_attack(c.dim, sec, votes, {a.s, a.theta_y_est, a.theta_n_est, std::nullopt}, pos, backends[i], rng);
            }
            Json j;
            j["r"] = o.r;
            j["outcome"] = o.outcome;
            j["q"] = optional_json(o.readout.q);
            j["m_inferred"] = optional_json(o.readout.m_inferred);
            j["cheat_detected"] = o.readout.cheat_detected;
            if (i == 0) {
                first = o;
            }
            results.push_back(std::move(j));
        }
        if (results.size() > 1 && results[0] != results[1]) {
            rep.failures.push_back("trial " + std::to_string(t) + ": dense and branch cheater outcomes differ");
        }
        Json rec;
        rec["type"] = "trial";
        rec["trial"] = t;
        rec["votes"] = votes_json(votes);
        for (auto it = results[0].begin(); it != results[0].end(); ++it) {
            rec[it.key()] = it.value();
        }
        rep.trials.push_back(std::move(rec));
        if (first.outcome >= c.dim) {
            ++errors;
        } else {
            ++counts[first.outcome];
        }
        detected += first.readout.cheat_detected ? 1 : 0;
    }
    rep.summary["detections"] = detected;
    rep.summary["detection_rate"] = c.trials ? static_cast<double>(detected) / static_cast<double>(c.trials) : 0.0;
    summarize_pq(c, rep, counts, errors, a.theta_mode == "sampled" ? honest_m : std::nullopt);
}

void cheater_mc_attack(const ScenarioConfig& c, RunReport& rep) {
    const auto& a = *c.attack;
    const Rng root(c.seed);
    std::vector<Index> counts(c.dim, 0);
    Index errors = 0;
    for (Index t = 0; t < c.trials; ++t) {
        Rng rng = root.split(t);
        const auto h = monte_carlo_pq(c.dim, a.s, a.m, 1, rng);
        Json rec;
        rec["type"] = "trial";
        rec["trial"] = t;
        for (Index r = 0; r < c.dim; ++r) {
            for (Index q = 0; q < c.dim; ++q) {
                if (h.by_r[r][q]) {
                    rec["r"] = r;
                    rec["q"] = q;
                    ++counts[q];
                }
            }
        }
        if (h.errors) {
            rec["q"] = nullptr;
            ++errors;
        }
        rep.trials.push_back(std::move(rec));
    }
    summarize_pq(c, rep, counts, errors, a.m);
}

}  // namespace

// ---- names -----------------------------------------------------------------

std::string_view command_name(Command c) {
    switch (c) {
        case Command::run: return "run";
        case Command::verify: return "verify";
        case Command::sweep: return "sweep";
        case Command::attack: return "attack";
    }
    return "run";
}

Command parse_command(std::string_view name) {
    for (Command c : {Command::run, Command::verify, Command::sweep, Command::attack}) {
        if (command_name(c) == name) {
            return c;
        }
    }
    throw ValidationError("unknown subcommand '" + std::string(name) + "'");
}

std::string_view backend_choice_name(BackendChoice b) {
    switch (b) {
        case BackendChoice::dense: return "dense";
        case BackendChoice::branch: return "branch";
        case BackendChoice::both: return "both";
    }
    return "branch";
}

BackendChoice parse_backend_choice(std::string_view name) {
    for (BackendChoice b : {BackendChoice::dense, BackendChoice::branch, BackendChoice::both}) {
        if (backend_choice_name(b) == name) {
            return b;
        }
    }
    throw ValidationError("unknown backend '" + std::string(name) + "' (expected dense, branch or both)");
}

ReportFormat parse_report_format(std::string_view name) {
    if (name == "text") {
        return ReportFormat::text;
    }
    if (name == "jsonl" || name == "json-lines") {
        return ReportFormat::jsonl;
    }
    throw ValidationError("unknown format '" + std::string(name) + "' (expected text or jsonl)");
}

// ---- parsing ---------------------------------------------------------------

ScenarioConfig parse_scenario(const std::string& text) {
    ScenarioConfig c;
    std::istringstream in(text);
    std::string raw, section;
    Index line = 0;
    std::map<std::string, std::pair<std::string, Index>> values;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find_first_of("#;");
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) {
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']') {
                throw ValidationError("line " + std::to_string(line) + ": malformed section header '" + s + "'");
            }
            section = trim(s.substr(1, s.size() - 2));
            if (!known_keys().count(section)) {
                throw ValidationError("line " + std::to_string(line) + ": unknown section [" + section +
                                      "] (expected [protocol], [attack] or [run])");
            }
            values["[" + section + "]"] = {"", line};
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("line " + std::to_string(line) + ": expected 'key = value', got '" + s + "'");
        }
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (section.empty()) {
            fail_at(line, key, "key appears before any [section] header");
        }
        if (!known_keys().at(section).count(key)) {
            fail_at(line, key, "unknown key in [" + section + "]");
        }
        const std::string full = section + "." + key;
        if (values.count(full)) {
            fail_at(line, key, "duplicate key (first set on line " + std::to_string(values[full].second) + ")");
        }
        values[full] = {value, line};
        c.lines[full] = line;
    }

    auto get = [&](const std::string& k) -> const std::pair<std::string, Index>* {
        auto it = values.find(k);
        return it == values.end() ? nullptr : &it->second;
    };

    if (auto v = get("protocol.scheme")) {
        c.scheme = lower(v->first);
    }
    if (auto v = get("protocol.D")) c.dim = parse_index(v->first, v->second, "D");
    if (auto v = get("protocol.N")) c.voters = parse_index(v->first, v->second, "N");
    if (auto v = get("protocol.votes")) {
        const auto s = lower(v->first);
        if (s == "all") {
            c.vote_mode = VoteMode::all;
        } else if (s == "random") {
            c.vote_mode = VoteMode::random;
        } else {
            c.votes = parse_index_list(v->first, v->second, "votes");
        }
    }
    if (auto v = get("protocol.yes_probability")) c.yes_probability = parse_real(v->first, v->second, "yes_probability");
    if (auto v = get("protocol.sender")) c.sender = parse_index(v->first, v->second, "sender");
    if (auto v = get("protocol.message")) c.message = parse_index(v->first, v->second, "message");
    if (auto v = get("protocol.l_y")) {
        c.secrets.l_y = parse_int(v->first, v->second, "l_y");
        c.secrets_given = true;
    }
    if (auto v = get("protocol.l_n")) {
        c.secrets.l_n = parse_int(v->first, v->second, "l_n");
        c.secrets_given = true;
    }
    if (auto v = get("protocol.delta")) {
        c.secrets.delta = parse_real(v->first, v->second, "delta");
        c.secrets_given = true;
    }
    if (auto v = get("protocol.variant")) {
        const auto s = lower(v->first);
        if (s == "distributed") {
            c.variant = AntiCheatVariant::distributed;
        } else if (s == "traveling") {
            c.variant = AntiCheatVariant::traveling;
        } else {
            fail_at(v->second, "variant", "expected distributed or traveling, got '" + v->first + "'");
        }
    }
    if (auto v = get("protocol.group")) c.group = lower(v->first);
    if (auto v = get("protocol.choices")) c.choices = parse_index_list(v->first, v->second, "choices");

    if (get("[attack]") || std::any_of(values.begin(), values.end(), [](const auto& kv) { return kv.first.rfind("attack.", 0) == 0; })) {
        AttackConfig a;
        if (auto v = get("attack.kind")) a.kind = lower(v->first);
        if (auto v = get("attack.target")) a.target = parse_index(v->first, v->second, "target");
        if (auto v = get("attack.s")) a.s = parse_index(v->first, v->second, "s");
        if (auto v = get("attack.theta_mode")) a.theta_mode = lower(v->first);
        if (auto v = get("attack.theta_y_est")) a.theta_y_est = parse_real(v->first, v->second, "theta_y_est");
        if (auto v = get("attack.theta_n_est")) a.theta_n_est = parse_real(v->first, v->second, "theta_n_est");
        if (auto v = get("attack.pairing")) a.pairing = parse_pairing(v->first, v->second);
        if (auto v = get("attack.repair")) a.repair = parse_flag(v->first, v->second, "repair");
        if (auto v = get("attack.position")) a.position = parse_index(v->first, v->second, "position");
        if (auto v = get("attack.m")) a.m = parse_int(v->first, v->second, "m");
        if (auto v = get("attack.unitary")) a.unitary = lower(v->first);
        if (auto v = get("attack.ancilla_dim")) a.ancilla_dim = parse_index(v->first, v->second, "ancilla_dim");
        c.attack = a;
    }

    if (auto v = get("run.backend")) {
        try {
            c.backend = parse_backend_choice(lower(v->first));
        } catch (const ValidationError& e) {
            fail_at(v->second, "backend", e.what());
        }
    }
    if (auto v = get("run.repetitions")) c.repetitions = parse_index(v->first, v->second, "repetitions");
    if (auto v = get("run.trials")) c.trials = parse_index(v->first, v->second, "trials");
    if (auto v = get("run.seed")) c.seed = parse_u64(v->first, v->second, "seed");

    validate_scenario(c);
    return c;
}

void validate_scenario(ScenarioConfig& c) {
    if (c.scheme.empty()) {
        fail(c, "protocol.scheme", "missing (set scheme in [protocol])");
    }
    const bool protocol = is_protocol_scheme(c.scheme);
    if (!protocol && c.scheme != "anticheat" && c.scheme != "group") {
        fail(c, "protocol.scheme",
             "unknown scheme '" + c.scheme +
                 "' (expected traveling, distributed, dolev, broadcast, survey, classical-baseline, anticheat or group)");
    }
    if (c.repetitions < 1) {
        fail(c, "run.repetitions", "must be at least 1");
    }
    if (!(c.yes_probability >= 0.0 && c.yes_probability <= 1.0)) {
        fail(c, "protocol.yes_probability", "must lie in [0, 1]");
    }

    if (c.scheme == "group") {
        std::optional<Representation> found;
        try {
            found = representation_for(c.group);
        } catch (const ValidationError& e) {
            fail(c, "protocol.group", e.what());
        }
        const Representation& rep = *found;
        if (c.choices.empty() && c.vote_mode == VoteMode::listed) {
            fail(c, "protocol.choices", "group scheme needs one element per party");
        }
        if (c.vote_mode == VoteMode::random) {
            fail(c, "protocol.votes", "random votes are not defined for the group scheme");
        }
        if (!c.choices.empty()) {
            c.voters = c.choices.size();
            c.votes = c.choices;
        } else if (c.voters < 1) {
            fail(c, "protocol.N", "group sweep needs N >= 1 parties");
        }
        c.dim = rep.dim;
        for (Index g : c.choices) {
            if (g >= rep.group.order()) {
                fail(c, "protocol.choices", "element " + std::to_string(g) + " out of range for group of order " +
                                                std::to_string(rep.group.order()));
            }
        }
        if (c.attack) {
            fail(c, "attack.kind", "attacks on the group scheme are not modeled");
        }
        return;
    }

    if (c.voters < 1) {
        fail(c, "protocol.N", "requires N >= 1 voters");
    }
    if (c.scheme == "classical-baseline" && c.dim == 0) {
        c.dim = c.voters + 1;
    }
    if (c.dim < 2) {
        fail(c, "protocol.D", "requires qudit dimension D >= 2");
    }

    if (c.scheme == "broadcast") {
        if (c.sender >= c.voters) {
            fail(c, "protocol.sender", "sender index out of range (N=" + std::to_string(c.voters) + ")");
        }
        if (c.message >= c.dim) {
            fail(c, "protocol.message", "broadcast message must lie in [0,D)");
        }
        if (c.vote_mode == VoteMode::random) {
            fail(c, "protocol.votes", "random votes are not defined for broadcast");
        }
        c.votes = {c.sender, c.message};
    }

    const Index want = expected_vote_count(c);
    const bool compressed = c.attack && c.attack->kind == "cheater_mc";
    if (c.vote_mode == VoteMode::listed && c.scheme != "broadcast" && !compressed) {
        if (c.votes.size() != want) {
            fail(c, "protocol.votes", "expected " + std::to_string(want) + " entries, got " + std::to_string(c.votes.size()));
        }
    }
    if (binary_votes(c)) {
        for (Index v : c.votes) {
            if (v > 1) {
                fail(c, "protocol.votes", "votes must be 0 or 1");
            }
        }
    }

    const bool eavesdrop = c.attack && c.attack->kind != "cheater" && c.attack->kind != "cheater_mc";
    if (protocol && c.scheme != "broadcast") {
        ProtocolConfig pc = protocol_config(c);
        std::vector<Index> probe = c.vote_mode == VoteMode::listed ? c.votes : std::vector<Index>(c.voters, 0);
        try {
            if (!eavesdrop) {
                validate_votes(pc, probe);
            }
        } catch (const ValidationError& e) {
            const std::string msg = e.what();
            fail(c, msg.rfind("requires D", 0) == 0 ? "protocol.D" : "protocol.votes", msg);
        }
    }

    if (c.scheme == "anticheat") {
        if (c.secrets_given) {
            try {
                validate_secrets(c.secrets, c.dim, c.voters);
            } catch (const ValidationError& e) {
                const std::string msg = e.what();
                const std::string field = msg.find("delta") != std::string::npos || msg.find("δ") != std::string::npos
                                              ? "protocol.delta"
                                              : (msg.find("N < D") != std::string::npos ? "protocol.D" : "protocol.l_y");
                fail(c, field, msg);
            }
        } else if (c.voters >= c.dim) {
            fail(c, "protocol.D", "requires (l_y-l_n)N < D, impossible for N >= D");
        }
    }

    if (!c.attack) {
        return;
    }
    auto& a = *c.attack;
    if (a.kind.empty()) {
        fail(c, "attack.kind", "missing (set kind in [attack])");
    }
    if (!kAttackKinds.count(a.kind)) {
        fail(c, "attack.kind", "unknown attack '" + a.kind + "' (expected cheater, cheater_mc, mitm, swap, entangling or classical)");
    }
    auto need_scheme = [&](const std::string& s) {
        if (c.scheme != s) {
            fail(c, "attack.kind", "attack '" + a.kind + "' requires scheme = " + s);
        }
    };
    if (a.kind == "cheater" || a.kind == "cheater_mc") {
        need_scheme("anticheat");
        if (c.variant != AntiCheatVariant::distributed) {
            fail(c, "protocol.variant", "the cheating-voter model uses the distributed variant");
        }
        if (a.s == 0) {
            fail(c, "attack.s", "s must be at least 1 (s = 0 is an honest vote)");
        }
        if (a.theta_mode != "sampled" && a.theta_mode != "fixed") {
            fail(c, "attack.theta_mode", "expected sampled or fixed");
        }
        if (c.voters < 2 && a.kind == "cheater") {
            fail(c, "protocol.N", "cheater scenario needs N >= 2 voters");
        }
        if (a.position && *a.position >= c.voters) {
            fail(c, "attack.position", "cheater position out of range");
        }
        if (a.kind == "cheater_mc") {
            if (c.dim != c.voters + 1) {
                fail(c, "protocol.D", "closed form requires D=N+1");
            }
            if (c.secrets_given && (c.secrets.l_y != 1 || c.secrets.l_n != 0)) {
                fail(c, "protocol.l_y", "closed form requires l_y = 1 and l_n = 0");
            }
            try {
                analytic_pq_contrast(c.dim, a.s);
            } catch (const ValidationError& e) {
                fail(c, "attack.s", e.what());
            }
            if (a.m < 0 || a.m > static_cast<long long>(c.voters)) {
                fail(c, "attack.m", "m must lie in [0, N]");
            }
            c.secrets = {1, 0, 0.0};
        }
        return;
    }
    if (a.kind == "mitm") {
        need_scheme("traveling");
    } else if (a.kind == "classical") {
        need_scheme("classical-baseline");
    } else {
        need_scheme("distributed");
    }
    if (a.target >= c.voters) {
        fail(c, "attack.target", "target voter out of range");
    }
    std::vector<bool> used(c.voters, false);
    for (const auto& [x, y] : a.pairing) {
        if (x == y || x >= c.voters || y >= c.voters) {
            fail(c, "attack.pairing", "pairs must join two distinct voters in range");
        }
        if (used[x] || used[y]) {
            fail(c, "attack.pairing", "pairs must be disjoint");
        }
        used[x] = used[y] = true;
    }
    if (a.kind == "entangling") {
        if (a.unitary != "identity" && a.unitary != "swap" && a.unitary != "product") {
            fail(c, "attack.unitary", "expected identity, swap or product");
        }
        if (a.ancilla_dim < 2) {
            fail(c, "attack.ancilla_dim", "ancilla dimension must be at least 2");
        }
        if (a.unitary == "swap") {
            a.ancilla_dim = c.dim;
        }
    }
}

std::string scenario_echo(const ScenarioConfig& c) {
    std::ostringstream o;
    o.precision(17);
    o << "[protocol]\nscheme = " << c.scheme << "\nD = " << c.dim << "\nN = " << c.voters << "\n";
    if (c.scheme == "group") {
        o << "group = " << c.group << "\n";
    }
    o << "votes = ";
    if (c.vote_mode == VoteMode::all) {
        o << "all";
    } else if (c.vote_mode == VoteMode::random) {
        o << "random\nyes_probability = " << c.yes_probability;
    } else {
        for (Index i = 0; i < c.votes.size(); ++i) {
            o << (i ? ", " : "") << c.votes[i];
        }
    }
    o << "\n";
    if (c.scheme == "anticheat") {
        o << "variant = " << (c.variant == AntiCheatVariant::distributed ? "distributed" : "traveling") << "\n";
        if (c.secrets_given) {
            o << "l_y = " << c.secrets.l_y << "\nl_n = " << c.secrets.l_n << "\ndelta = " << c.secrets.delta << "\n";
        }
    }
    if (c.attack) {
        const auto& a = *c.attack;
        o << "[attack]\nkind = " << a.kind << "\n";
        if (a.kind == "cheater" || a.kind == "cheater_mc") {
            o << "s = " << a.s << "\n";
            if (a.kind == "cheater_mc") {
                o << "m = " << a.m << "\n";
            } else {
                o << "theta_mode = " << a.theta_mode << "\n";
                if (a.theta_mode == "fixed") {
                    o << "theta_y_est = " << a.theta_y_est << "\ntheta_n_est = " << a.theta_n_est << "\n";
                }
                if (a.position) {
                    o << "position = " << *a.position << "\n";
                }
            }
        } else {
            o << "target = " << a.target << "\npairing = ";
            for (Index i = 0; i < a.pairing.size(); ++i) {
                o << (i ? ", " : "") << a.pairing[i].first << "-" << a.pairing[i].second;
            }
            o << "\nrepair = " << (a.repair ? "true" : "false") << "\n";
            if (a.kind == "entangling") {
                o << "unitary = " << a.unitary << "\nancilla_dim = " << a.ancilla_dim << "\n";
            }
        }
    }
    o << "[run]\nbackend = " << backend_choice_name(c.backend) << "\nrepetitions = " << c.repetitions
      << "\ntrials = " << c.trials << "\nseed = " << c.seed << "\n";
    return o.str();
}

// ---- execution -------------------------------------------------------------

RunReport execute(const ScenarioConfig& input, Command command) {
    ScenarioConfig config = input;
    validate_scenario(config);
    const auto start = std::chrono::steady_clock::now();
    RunReport rep;
    rep.command = command;
    rep.config = config;
    const auto& c = config;
    const Rng root(c.seed);
    rep.summary["type"] = "summary";
    rep.summary["command"] = command_name(command);
    rep.summary["scheme"] = c.scheme;
    rep.summary["D"] = c.dim;
    rep.summary["N"] = c.voters;
    rep.summary["backend"] = backend_choice_name(c.backend);
    rep.summary["seed"] = c.seed;

    if (command == Command::attack && !c.attack) {
        throw ValidationError("field 'kind': the attack subcommand needs an [attack] section");
    }
    if (c.attack && (command == Command::attack || command == Command::run)) {
        rep.summary["attack"] = c.attack->kind;
        if (c.attack->kind == "cheater") {
            cheater_attack(c, rep);
        } else if (c.attack->kind == "cheater_mc") {
            cheater_mc_attack(c, rep);
        } else {
            eavesdrop_attack(c, rep);
        }
    } else if (command == Command::run) {
        if (c.vote_mode == VoteMode::all) {
            fail(c, "protocol.votes", "'all' is only meaningful for sweep and verify");
        }
        for (Index t = 0; t < c.trials; ++t) {
            Rng vr = root.split(t).split(1);
            const auto votes = votes_for_trial(c, vr);
            rep.trials.push_back(honest_trial(c, t, votes, root, false, rep.failures));
        }
    } else {
        // sweep and verify enumerate vote vectors (verify uses the listed votes when given)
        const bool verify = command == Command::verify;
        auto vectors = (verify && c.vote_mode == VoteMode::listed) ? std::vector<std::vector<Index>>{c.votes} : enumerate_votes(c);
        ScenarioConfig cc = c;
        if (verify) {
            cc.backend = BackendChoice::both;
        }
        double privacy = 0.0;
        const bool track_privacy = verify && is_protocol_scheme(c.scheme) && c.scheme != "classical-baseline";
        for (Index t = 0; t < vectors.size(); ++t) {
            rep.trials.push_back(honest_trial(cc, t, vectors[t], root, verify, rep.failures, track_privacy ? &privacy : nullptr));
        }
        rep.summary["vote_vectors"] = vectors.size();
        if (verify) {
            double dev = 0.0;
            for (const auto& r : rep.trials) {
                dev = std::max(dev, r.value("backend_deviation", 0.0));
            }
            rep.summary["max_backend_deviation"] = dev;
            if (track_privacy) {
                rep.summary["max_single_register_trace_distance"] = privacy;
                if (!(privacy <= 1e-12)) {
                    rep.failures.push_back("single-register state deviates from I/D by " + std::to_string(privacy));
                }
            }
            if (c.scheme != "group" && c.scheme != "classical-baseline") {
                rep.summary["orthogonality"] = orthogonality_checks(c, rep.failures);
            }
        }
    }
    rep.summary["trials"] = rep.trials.size();
    rep.summary["failures"] = rep.failures;
    rep.summary["ok"] = rep.failures.empty();
    rep.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

std::string emit_report(const RunReport& report, ReportFormat format) {
    std::ostringstream o;
    if (format == ReportFormat::jsonl) {
        for (const auto& t : report.trials) {
            o << t.dump() << "\n";
        }
        Json s = report.summary;
        s["scenario"] = scenario_echo(report.config);
        o << s.dump() << "\n";
        return o.str();
    }
    o << "qballot " << command_name(report.command) << ": scheme " << report.config.scheme << ", D=" << report.config.dim
      << ", N=" << report.config.voters << ", backend " << backend_choice_name(report.config.backend) << ", seed "
      << report.config.seed << "\n";
    for (auto it = report.summary.begin(); it != report.summary.end(); ++it) {
        if (it.key() == "type" || it.key() == "failures" || it.key() == "ok") {
            continue;
        }
        o << "  " << it.key() << ": " << it.value().dump() << "\n";
    }
    if (report.summary.contains("tv_distance")) {
        o << "  analytic-vs-empirical TV distance: " << report.summary["tv_distance"].get<double>() << "\n";
    }
    if (report.summary.contains("analytic_detection") && report.summary.contains("detection_rate")) {
        o << "  detection: empirical " << report.summary["detection_rate"].get<double>() << " vs analytic "
          << report.summary["analytic_detection"].get<double>() << "\n";
    }
    if (report.failures.empty()) {
        o << "status: ok\n";
    } else {
        o << "status: FAILED (" << report.failures.size() << ")\n";
        for (const auto& f : report.failures) {
            o << "  - " << f << "\n";
        }
    }
    o << "wall-clock: " << report.wall_clock_seconds << " s\n";
    return o.str();
}

int exit_code_for(const RunReport& report) { return report.ok() ? 0 : 2; }

}  // namespace qballot
