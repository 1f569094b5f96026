#include <gtest/gtest.h>

#include <sstream>

#include "qballot/cli.hpp"
#include "qballot/error.hpp"

using namespace qballot;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string l;
    while (std::getline(in, l)) out.push_back(l);
    return out;
}

const char* kMinimal = "[protocol]\nscheme = distributed\nD = 4\nN = 3\nvotes = 1, 0, 1\n";

}  // namespace

TEST(Scenario, MinimalParses) {
    auto c = parse_scenario(kMinimal);
    EXPECT_EQ(c.scheme, "distributed");
    EXPECT_EQ(c.dim, 4u);
    EXPECT_EQ(c.votes, (std::vector<Index>{1, 0, 1}));
    EXPECT_EQ(c.backend, BackendChoice::branch);
    EXPECT_EQ(c.lines.at("protocol.D"), 3u);
}

TEST(Scenario, DiagnosticsNameLineAndField) {
    auto e = error_of("[protocol]\nscheme = distributed\nD = 3\nN = 3\nvotes = 1, 0, 1\n");
    EXPECT_TRUE(contains(e, "D>N")) << e;
    EXPECT_TRUE(contains(e, "line 3")) << e;
    EXPECT_TRUE(contains(e, "field 'D'")) << e;

    e = error_of("[protocol]\nscheme = dolev\nD = 5\nN = 3\nvotes = 1, 0, 1\n");
    EXPECT_TRUE(contains(e, "D=N+1")) << e;

    e = error_of("[protocol]\nscheme = distributed\ncolour = red\n");
    EXPECT_TRUE(contains(e, "line 3")) << e;
    EXPECT_TRUE(contains(e, "colour")) << e;

    e = error_of("[protocol]\nscheme = distributed\nD = four\n");
    EXPECT_TRUE(contains(e, "line 3") && contains(e, "integer")) << e;

    e = error_of("[protocol]\nscheme = anticheat\nD = 7\nN = 3\nvotes = 1,1,0\nl_y = 3\nl_n = 0\n");
    EXPECT_TRUE(contains(e, "requires (l_y-l_n)N < D")) << e;

    EXPECT_TRUE(contains(error_of("D = 3\n"), "before any [section]"));
    EXPECT_TRUE(contains(error_of("[nope]\n"), "unknown section"));
    EXPECT_TRUE(contains(error_of(std::string(kMinimal) + "D = 5\n"), "duplicate"));
    EXPECT_TRUE(contains(error_of(std::string(kMinimal) + "[attack]\nkind = mitm\n"), "requires scheme = traveling"));
    EXPECT_TRUE(contains(error_of(std::string(kMinimal) + "[attack]\nkind = swap\npairing = 0-0\n"), "pairing"));
    EXPECT_TRUE(contains(error_of(std::string(kMinimal) + "[run]\nbackend = gpu\n"), "backend"));
}

TEST(Scenario, EchoReparses) {
    auto c = parse_scenario(std::string(kMinimal) + "[attack]\nkind = swap\ntarget = 1\npairing = 1-2\n[run]\ntrials = 7\nseed = 9\n");
    auto again = parse_scenario(scenario_echo(c));
    EXPECT_EQ(scenario_echo(again), scenario_echo(c));
    EXPECT_EQ(again.attack->pairing, c.attack->pairing);
}

TEST(Execute, HonestDistributedTally) {
    auto c = parse_scenario(std::string(kMinimal) + "[run]\nbackend = both\ntrials = 2\nseed = 4\n");
    auto r = execute(c, Command::run);
    EXPECT_TRUE(r.ok());
    ASSERT_EQ(r.trials.size(), 2u);
    EXPECT_EQ(r.trials[0]["tally"].get<Index>(), 2u);
    EXPECT_LE(r.trials[0]["backend_deviation"].get<double>(), 1e-12);
    EXPECT_EQ(exit_code_for(r), 0);
}

TEST(Execute, JsonLinesDeterministicAndRoundTrips) {
    const std::string text = std::string(kMinimal) + "[attack]\nkind = swap\ntarget = 0\npairing = 0-1\n[run]\ntrials = 300\nseed = 12\n";
    auto c = parse_scenario(text);
    const auto a = emit_report(execute(c, Command::attack), ReportFormat::jsonl);
    const auto b = emit_report(execute(c, Command::attack), ReportFormat::jsonl);
    EXPECT_EQ(a, b);
    auto ls = lines_of(a);
    ASSERT_EQ(ls.size(), 301u);
    auto summary = Json::parse(ls.back());
    EXPECT_EQ(summary["type"], "summary");
    EXPECT_EQ(summary.dump(), ls.back());
    const double rate = summary["detection_rate"].get<double>();
    EXPECT_EQ(rate, static_cast<double>(summary["detections"].get<Index>()) / 300.0);
}

TEST(Execute, EmptyTrialsGiveSummaryOnly) {
    auto c = parse_scenario(std::string(kMinimal) + "[run]\ntrials = 0\n");
    auto out = emit_report(execute(c, Command::run), ReportFormat::jsonl);
    auto ls = lines_of(out);
    ASSERT_EQ(ls.size(), 1u);
    EXPECT_TRUE(contains(ls[0], "\"type\":\"summary\""));
}

TEST(Execute, TextReportShowsTvDistance) {
    auto c = parse_scenario("[protocol]\nscheme = anticheat\nD = 8\nN = 7\n[attack]\nkind = cheater_mc\ns = 5\nm = 6\n[run]\ntrials = 500\n");
    auto text = emit_report(execute(c, Command::attack), ReportFormat::text);
    EXPECT_TRUE(contains(text, "analytic-vs-empirical TV distance")) << text;
    EXPECT_TRUE(contains(text, "wall-clock"));
    EXPECT_FALSE(contains(emit_report(execute(c, Command::attack), ReportFormat::jsonl), "wall"));
}

TEST(Execute, SweepAndVerify) {
    auto c = parse_scenario("[protocol]\nscheme = dolev\nD = 4\nN = 3\nvotes = all\n[run]\nbackend = both\n");
    auto s = execute(c, Command::sweep);
    EXPECT_TRUE(s.ok());
    EXPECT_EQ(s.trials.size(), 8u);
    auto v = execute(c, Command::verify);
    EXPECT_TRUE(v.ok());
    EXPECT_LE(v.summary["max_single_register_trace_distance"].get<double>(), 1e-12);
    EXPECT_THROW(execute(c, Command::run), ValidationError);
    EXPECT_THROW(execute(c, Command::attack), ValidationError);
}

TEST(Execute, BudgetErrorSurfaces) {
    auto c = parse_scenario("[protocol]\nscheme = distributed\nD = 16\nN = 9\nvotes = 1,0,0,0,0,0,0,0,1\n[run]\nbackend = dense\n");
    EXPECT_THROW(execute(c, Command::run), BudgetError);
    c.backend = BackendChoice::branch;
    EXPECT_TRUE(execute(c, Command::run).ok());
}

TEST(Execute, GroupAndAnticheat) {
    auto g = parse_scenario("[protocol]\nscheme = group\ngroup = klein4\nchoices = 1, 2, 2\n");
    auto r = execute(g, Command::run);
    EXPECT_TRUE(r.ok());
    EXPECT_EQ(r.trials[0]["element"].get<Index>(), 1u);
    auto a = parse_scenario("[protocol]\nscheme = anticheat\nD = 5\nN = 2\nvotes = 1, 1\n[run]\nrepetitions = 3\ntrials = 2\n");
    EXPECT_TRUE(execute(a, Command::run).ok());
}
