#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qballot/adversary.hpp"
#include "qballot/protocols.hpp"

namespace qballot {

enum class BackendChoice { dense, branch, both };

enum class Command { run, verify, sweep, attack };

std::string_view command_name(Command c);
Command parse_command(std::string_view name);
BackendChoice parse_backend_choice(std::string_view name);
std::string_view backend_choice_name(BackendChoice b);

enum class VoteMode { listed, all, random };

struct AttackConfig {
    /// cheater, cheater_mc, mitm, swap, entangling, classical
    std::string kind;
    Index target = 0;
    Index s = 1;
    /// "sampled" draws θ' from the phase-estimation POVM; "fixed" uses theta_*_est.
    std::string theta_mode = "sampled";
    double theta_y_est = 0.0;
    double theta_n_est = 0.0;
    Pairing pairing;
    bool repair = true;
    std::optional<Index> position;
    long long m = 0;
    /// entangling attack: identity, swap or product
    std::string unitary = "swap";
    Index ancilla_dim = 2;
};

struct ScenarioConfig {
    /// A protocol scheme name, "anticheat" or "group".
    std::string scheme;
    Index dim = 0;
    Index voters = 0;
    VoteMode vote_mode = VoteMode::listed;
    std::vector<Index> votes;
    double yes_probability = 0.5;
    Index sender = 0;
    Index message = 0;
    AuthoritySecrets secrets;
    bool secrets_given = false;
    AntiCheatVariant variant = AntiCheatVariant::distributed;
    /// klein4, s3, or cyclic-<n> (regular representation)
    std::string group = "klein4";
    std::vector<Index> choices;
    BackendChoice backend = BackendChoice::branch;
    Index repetitions = 1;
    Index trials = 1;
    std::uint64_t seed = 0;
    std::optional<AttackConfig> attack;
    /// Line of each key as "section.key".
    std::map<std::string, Index> lines;
};

/// Parses and validates a scenario document; ValidationError messages name the line and field.
ScenarioConfig parse_scenario(const std::string& text);

/// Checks every precondition of the selected scheme and attack, filling derived fields (group D and N, broadcast votes).
void validate_scenario(ScenarioConfig& config);

/// Canonical key = value rendering of a config.
std::string scenario_echo(const ScenarioConfig& config);

using Json = nlohmann::ordered_json;

struct RunReport {
    Command command = Command::run;
    ScenarioConfig config;
    std::vector<Json> trials;
    Json summary;
    std::vector<std::string> failures;
    double wall_clock_seconds = 0.0;

    bool ok() const { return failures.empty(); }
};

/// Runs the scenario for the given subcommand. Invariant violations are collected
/// in `failures`; budget errors propagate as BudgetError.
RunReport execute(const ScenarioConfig& config, Command command);

enum class ReportFormat { text, jsonl };

ReportFormat parse_report_format(std::string_view name);

/// json-lines: one record per trial then one summary record. Wall-clock time only appears in text.
std::string emit_report(const RunReport& report, ReportFormat format);

/// 0 success, 1 validation, 2 invariant failure, 3 budget.
int exit_code_for(const RunReport& report);

}  // namespace qballot
