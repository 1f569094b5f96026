#include "qballot/protocols.hpp"

#include <numeric>
#include <string>

#include "qballot/error.hpp"
#include "qballot/rng.hpp"

namespace qballot {

namespace {

std::string voter_name(Index k) { return "voter " + std::to_string(k); }

Index sum(const std::vector<Index>& v) { return std::accumulate(v.begin(), v.end(), Index{0}); }

void require_binary(const std::vector<Index>& votes) {
    for (Index k = 0; k < votes.size(); ++k) {
        if (votes[k] > 1) {
            throw ValidationError("vote of voter " + std::to_string(k) + " must be 0 or 1, got " + std::to_string(votes[k]));
        }
    }
}

void require_count(const ProtocolConfig& c, const std::vector<Index>& votes) {
    if (c.voters < 1) {
        throw ValidationError("requires N >= 1 voters");
    }
    if (votes.size() != c.voters) {
        throw ValidationError("expected " + std::to_string(c.voters) + " votes, got " + std::to_string(votes.size()));
    }
}

template <class S>
TallyResult traveling_impl(const ProtocolConfig& c, const std::vector<Index>& shifts, const StepObserver& obs) {
    TallyResult out;
    // register 0 travels between voters, register 1 stays with the authority
    S state = initial_ghz<S>(c.dim, 2);
    out.transcript.push_back({"authority", "prepare two-register ballot", std::nullopt});
    notify(obs, "prepared", state);
    const Operator plus = Operator::unitary(ops::shift(c.dim, 1));
    for (Index k = 0; k < shifts.size(); ++k) {
        for (Index t = 0; t < shifts[k]; ++t) {
            state = apply_local(state, 0, plus);
        }
        out.transcript.push_back({voter_name(k), "forward ballot", std::nullopt});
        notify(obs, voter_name(k), state);
    }
    const std::vector<Index> regs{1, 0};
    const auto pr = outcome_probabilities(state, regs, measurements::shifted_pairs(c.dim));
    Index m = pr.size();
    for (Index i = 0; i < c.dim; ++i) {
        if (pr[i] > 1.0 - 1e-10) {
            m = i;
        }
    }
    if (m == pr.size()) {
        throw InvariantError("returned traveling ballot is not a shifted-pair state");
    }
    out.m = m;
    out.transcript.push_back({"authority", "measure shifted-pair basis", static_cast<long long>(m)});
    return out;
}

template <class S>
TallyResult distributed_impl(const ProtocolConfig& c, const std::vector<Index>& votes, const StepObserver& obs) {
    TallyResult out;
    S state = initial_ghz<S>(c.dim, c.voters);
    out.transcript.push_back({"authority", "distribute ballot registers", std::nullopt});
    notify(obs, "prepared", state);
    const Operator yes = Operator::unitary(ops::clock(c.dim, 1));
    for (Index k = 0; k < votes.size(); ++k) {
        if (votes[k] == 1) {
            state = apply_local(state, k, yes);
        }
        out.transcript.push_back({voter_name(k), "return ballot register", std::nullopt});
        notify(obs, voter_name(k), state);
    }
    std::vector<Index> regs(c.voters);
    std::iota(regs.begin(), regs.end(), Index{0});
    const auto pr = outcome_probabilities(state, regs, measurements::phase_ghz(c.dim, true));
    Index m = pr.size();
    for (Index i = 0; i < c.dim; ++i) {
        if (pr[i] > 1.0 - 1e-10) {
            m = i;
        }
    }
    if (m == pr.size()) {
        throw InvariantError("returned ballot is not a phase ballot state");
    }
    out.m = m;
    out.transcript.push_back({"authority", "measure phase basis", static_cast<long long>(m)});
    return out;
}

/// Zero-sum ballot, per-party shifts, computational measurement and announcement.
template <class S>
TallyResult zero_sum_impl(const ProtocolConfig& c, const std::vector<Index>& shifts, Rng& rng, const StepObserver& obs,
                          bool record_shifts) {
    TallyResult out;
    S state = initial_ghz<S>(c.dim, c.voters);
    const Operator f = Operator::unitary(ops::fourier(c.dim));
    for (Index k = 0; k < c.voters; ++k) {
        state = apply_local(state, k, f);
    }
    out.transcript.push_back({"authority", "prepare zero-sum ballot", std::nullopt});
    notify(obs, "prepared", state);
    const Operator plus = Operator::unitary(ops::shift(c.dim, 1));
    for (Index k = 0; k < c.voters; ++k) {
        for (Index t = 0; t < shifts[k]; ++t) {
            state = apply_local(state, k, plus);
        }
        if (record_shifts) {
            out.transcript.push_back({voter_name(k), "apply shift", std::nullopt});
        }
        notify(obs, voter_name(k), state);
    }
    const auto comp = measurements::computational(c.dim);
    Index total = 0;
    for (Index k = 0; k < c.voters; ++k) {
        const Index reg = k;
        auto r = measure(state, std::span<const Index>(&reg, 1), comp, rng);
        state = std::move(r.state);
        out.announcements.push_back(r.outcome);
        out.hidden_labels.push_back(mod(static_cast<long long>(r.outcome) - static_cast<long long>(shifts[k]), c.dim));
        out.transcript.push_back({voter_name(k), "announce", static_cast<long long>(r.outcome)});
        total += r.outcome;
    }
    out.m = total % c.dim;
    return out;
}

}  // namespace

std::string_view scheme_name(Scheme s) {
    switch (s) {
        case Scheme::traveling: return "traveling";
        case Scheme::distributed: return "distributed";
        case Scheme::dolev: return "dolev";
        case Scheme::broadcast: return "broadcast";
        case Scheme::survey: return "survey";
        case Scheme::classical_baseline: return "classical-baseline";
    }
    return "unknown";
}

Scheme parse_scheme(std::string_view name) {
    for (Scheme s : {Scheme::traveling, Scheme::distributed, Scheme::dolev, Scheme::broadcast, Scheme::survey,
                     Scheme::classical_baseline}) {
        if (scheme_name(s) == name) {
            return s;
        }
    }
    throw ValidationError("unknown scheme '" + std::string(name) + "'");
}

void validate_votes(const ProtocolConfig& c, const std::vector<Index>& votes) {
    require_count(c, votes);
    if (c.scheme != Scheme::classical_baseline && c.dim < 2) {
        throw ValidationError("requires qudit dimension D >= 2");
    }
    switch (c.scheme) {
        case Scheme::traveling:
        case Scheme::distributed:
            require_binary(votes);
            if (c.dim <= c.voters) {
                throw ValidationError("requires D>N (got D=" + std::to_string(c.dim) + ", N=" + std::to_string(c.voters) + ")");
            }
            break;
        case Scheme::dolev:
            require_binary(votes);
            if (c.dim != c.voters + 1) {
                throw ValidationError("requires D=N+1 (got D=" + std::to_string(c.dim) + ", N=" + std::to_string(c.voters) + ")");
            }
            break;
        case Scheme::survey:
            if (sum(votes) >= c.dim) {
                throw ValidationError("requires D > sum of survey values (got D=" + std::to_string(c.dim) +
                                      ", sum=" + std::to_string(sum(votes)) + ")");
            }
            break;
        case Scheme::broadcast:
            break;
        case Scheme::classical_baseline:
            require_binary(votes);
            break;
    }
}

TallyResult run_traveling(const ProtocolConfig& config, const std::vector<Index>& votes, Backend backend,
                          const StepObserver& observer) {
    ProtocolConfig c = config;
    c.scheme = Scheme::traveling;
    validate_votes(c, votes);
    return dispatch(backend, [&]<class S>(std::type_identity<S>) { return traveling_impl<S>(c, votes, observer); });
}

TallyResult run_distributed(const ProtocolConfig& config, const std::vector<Index>& votes, Backend backend,
                            const StepObserver& observer) {
    ProtocolConfig c = config;
    c.scheme = Scheme::distributed;
    validate_votes(c, votes);
    return dispatch(backend, [&]<class S>(std::type_identity<S>) { return distributed_impl<S>(c, votes, observer); });
}

TallyResult run_dolev(const ProtocolConfig& config, const std::vector<Index>& votes, Backend backend, Rng& rng,
                      const StepObserver& observer) {
    ProtocolConfig c = config;
    c.scheme = Scheme::dolev;
    validate_votes(c, votes);
    return dispatch(backend,
                    [&]<class S>(std::type_identity<S>) { return zero_sum_impl<S>(c, votes, rng, observer, true); });
}

TallyResult run_broadcast(const ProtocolConfig& config, Index sender, Index message, Backend backend, Rng& rng,
                          const StepObserver& observer) {
    ProtocolConfig c = config;
    c.scheme = Scheme::broadcast;
    if (c.voters < 1) {
        throw ValidationError("requires N >= 1 parties");
    }
    if (c.dim < 2) {
        throw ValidationError("requires qudit dimension D >= 2");
    }
    if (sender >= c.voters) {
        throw ValidationError("sender index " + std::to_string(sender) + " out of range");
    }
    if (message >= c.dim) {
        throw ValidationError("broadcast message must lie in [0,D), got " + std::to_string(message));
    }
    std::vector<Index> shifts(c.voters, 0);
    shifts[sender] = message;
    return dispatch(backend,
                    [&]<class S>(std::type_identity<S>) { return zero_sum_impl<S>(c, shifts, rng, observer, false); });
}

TallyResult run_survey(const ProtocolConfig& config, const std::vector<Index>& salaries, Backend backend,
                       const StepObserver& observer) {
    ProtocolConfig c = config;
    c.scheme = Scheme::survey;
    validate_votes(c, salaries);
    auto out = dispatch(backend, [&]<class S>(std::type_identity<S>) { return traveling_impl<S>(c, salaries, observer); });
    const Index g = std::gcd(out.m, c.voters);
    out.average = std::make_pair(out.m / g, c.voters / g);
    return out;
}

std::vector<Index> sample_zero_sum_ballots(Index voters, Rng& rng) {
    if (voters < 1) {
        throw ValidationError("requires N >= 1 voters");
    }
    const Index base = voters + 1;
    std::vector<Index> ballots(voters);
    Index total = 0;
    for (Index k = 0; k + 1 < voters; ++k) {
        ballots[k] = rng.uniform_int(base);
        total += ballots[k];
    }
    ballots[voters - 1] = mod(-static_cast<long long>(total), base);
    return ballots;
}

TallyResult run_classical_baseline(Index voters, const std::vector<Index>& votes, Rng& rng, ClassicalVariant variant) {
    ProtocolConfig c{voters + 1, voters, Scheme::classical_baseline, 0};
    validate_votes(c, votes);
    TallyResult out;
    const Index base = voters + 1;
    if (variant == ClassicalVariant::zero_sum) {
        auto ballots = sample_zero_sum_ballots(voters, rng);
        Index total = 0;
        for (Index k = 0; k < voters; ++k) {
            out.hidden_labels.push_back(ballots[k]);
            out.transcript.push_back({"first authority", "issue ballot", static_cast<long long>(ballots[k])});
            ballots[k] = (ballots[k] + votes[k]) % base;
            out.announcements.push_back(ballots[k]);
            out.transcript.push_back({voter_name(k), "submit ballot", static_cast<long long>(ballots[k])});
            total += ballots[k];
        }
        out.m = total % base;
    } else {
        const Index pad = rng.uniform_int(base);
        out.hidden_labels.push_back(pad);
        Index running = pad;
        out.transcript.push_back({"authority", "issue padded counter", static_cast<long long>(pad)});
        for (Index k = 0; k < voters; ++k) {
            running = (running + votes[k]) % base;
            out.transcript.push_back({voter_name(k), "forward counter", static_cast<long long>(running)});
        }
        out.m = mod(static_cast<long long>(running) - static_cast<long long>(pad), base);
    }
    out.transcript.push_back({"authority", "tally", static_cast<long long>(out.m)});
    return out;
}

TallyResult run_protocol(const ProtocolConfig& config, const std::vector<Index>& votes, Backend backend, Rng& rng,
                         const StepObserver& observer) {
    switch (config.scheme) {
        case Scheme::traveling: return run_traveling(config, votes, backend, observer);
        case Scheme::distributed: return run_distributed(config, votes, backend, observer);
        case Scheme::dolev: return run_dolev(config, votes, backend, rng, observer);
        case Scheme::survey: return run_survey(config, votes, backend, observer);
        case Scheme::classical_baseline: return run_classical_baseline(config.voters, votes, rng);
        case Scheme::broadcast: {
            if (votes.size() != 2) {
                throw ValidationError("broadcast expects (sender, message)");
            }
            return run_broadcast(config, votes[0], votes[1], backend, rng, observer);
        }
    }
    throw ValidationError("unknown scheme");
}

}  // namespace qballot
