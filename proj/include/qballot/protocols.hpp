#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qballot/backend.hpp"

namespace qballot {

class Rng;

enum class Scheme { traveling, distributed, dolev, broadcast, survey, classical_baseline };

std::string_view scheme_name(Scheme s);
Scheme parse_scheme(std::string_view name);

struct ProtocolConfig {
    Index dim = 0;
    Index voters = 0;
    Scheme scheme = Scheme::distributed;
    std::uint64_t seed = 0;
};

/// One public or private record of a protocol run.
struct TranscriptEntry {
    std::string party;
    std::string action;
    std::optional<long long> value;
};

struct TallyResult {
    /// Yes-count, broadcast message or survey total.
    Index m = 0;
    std::vector<TranscriptEntry> transcript;
    /// Publicly announced measurement results (Dolev and broadcast).
    std::vector<Index> announcements;
    /// Hidden zero-sum labels recovered from the announcements (simulation ground truth).
    std::vector<Index> hidden_labels;
    /// Survey average total/N as a reduced fraction.
    std::optional<std::pair<Index, Index>> average;
};

/// Checks the scheme's preconditions; throws ValidationError naming the violated one.
void validate_votes(const ProtocolConfig& config, const std::vector<Index>& votes);

/// Two-register ballot; each yes voter shifts the traveling register.
TallyResult run_traveling(const ProtocolConfig& config, const std::vector<Index>& votes, Backend backend,
                          const StepObserver& observer = {});
/// One ballot register per voter; each yes voter applies the clock phase.
TallyResult run_distributed(const ProtocolConfig& config, const std::vector<Index>& votes, Backend backend,
                            const StepObserver& observer = {});
/// Zero-sum labelled ballot (D = N+1); voters shift, measure and announce.
TallyResult run_dolev(const ProtocolConfig& config, const std::vector<Index>& votes, Backend backend, Rng& rng,
                      const StepObserver& observer = {});
/// Sender applies the shift `message` times to the zero-sum ballot; everybody measures and announces.
TallyResult run_broadcast(const ProtocolConfig& config, Index sender, Index message, Backend backend, Rng& rng,
                          const StepObserver& observer = {});
/// Traveling ballot where voter k applies the shift salaries[k] times.
TallyResult run_survey(const ProtocolConfig& config, const std::vector<Index>& salaries, Backend backend,
                       const StepObserver& observer = {});

enum class ClassicalVariant {
    /// Ballots are integers in [0,N] summing to zero mod N+1.
    zero_sum,
    /// Single traveling number padded by the authority's secret offset.
    traveling_pad,
};

/// Classical ballots; transcript records the sampled ballots.
TallyResult run_classical_baseline(Index voters, const std::vector<Index>& votes, Rng& rng,
                                   ClassicalVariant variant = ClassicalVariant::zero_sum);

/// Samples N integers in [0,N] uniformly from the set summing to zero mod N+1.
std::vector<Index> sample_zero_sum_ballots(Index voters, Rng& rng);

/// Runs the configured scheme (survey reads votes as multiplicities).
TallyResult run_protocol(const ProtocolConfig& config, const std::vector<Index>& votes, Backend backend, Rng& rng,
                         const StepObserver& observer = {});

}  // namespace qballot
