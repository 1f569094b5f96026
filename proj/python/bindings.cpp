#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qballot/adversary.hpp"
#include "qballot/anticheat.hpp"
#include "qballot/cli.hpp"
#include "qballot/error.hpp"
#include "qballot/protocols.hpp"
#include "qballot/rng.hpp"

namespace py = pybind11;
using namespace qballot;

namespace {

Backend backend_of(const std::string& name) {
    if (name == "dense") return Backend::dense;
    if (name == "branch") return Backend::branch;
    throw ValidationError("unknown backend '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Qudit ballot protocol simulator";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<BudgetError>(m, "BudgetError", PyExc_MemoryError);
    py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

    py::class_<TallyResult>(m, "TallyResult")
        .def_readonly("m", &TallyResult::m)
        .def_readonly("announcements", &TallyResult::announcements)
        .def_readonly("hidden_labels", &TallyResult::hidden_labels)
        .def_readonly("average", &TallyResult::average);

    m.def(
        "run_protocol",
        [](const std::string& scheme, Index dim, Index voters, const std::vector<Index>& votes, const std::string& backend,
           std::uint64_t seed) {
            Rng rng(seed);
            return run_protocol({dim, voters, parse_scheme(scheme), seed}, votes, backend_of(backend), rng);
        },
        py::arg("scheme"), py::arg("dim"), py::arg("voters"), py::arg("votes"), py::arg("backend") = "branch",
        py::arg("seed") = 0);

    py::class_<AuthoritySecrets>(m, "AuthoritySecrets")
        .def(py::init([](long long l_y, long long l_n, double delta) { return AuthoritySecrets{l_y, l_n, delta}; }),
             py::arg("l_y") = 1, py::arg("l_n") = 0, py::arg("delta") = 0.0)
        .def_readwrite("l_y", &AuthoritySecrets::l_y)
        .def_readwrite("l_n", &AuthoritySecrets::l_n)
        .def_readwrite("delta", &AuthoritySecrets::delta);

    py::class_<ReadoutResult>(m, "ReadoutResult")
        .def_readonly("q", &ReadoutResult::q)
        .def_readonly("m_inferred", &ReadoutResult::m_inferred)
        .def_readonly("cheat_detected", &ReadoutResult::cheat_detected);

    py::class_<RoundResult>(m, "RoundResult")
        .def_readonly("readout", &RoundResult::readout)
        .def_readonly("distribution", &RoundResult::distribution);

    m.def(
        "run_round",
        [](Index dim, const std::vector<Index>& votes, const AuthoritySecrets& secrets, const std::string& variant,
           const std::string& backend, std::uint64_t seed) {
            Rng rng(seed);
            RoundOptions opt;
            opt.variant = variant == "traveling" ? AntiCheatVariant::traveling : AntiCheatVariant::distributed;
            opt.backend = backend_of(backend);
            return run_round(dim, votes, secrets, opt, rng);
        },
        py::arg("dim"), py::arg("votes"), py::arg("secrets"), py::arg("variant") = "distributed",
        py::arg("backend") = "branch", py::arg("seed") = 0);

    m.def("analytic_pq", &analytic_pq, py::arg("dim"), py::arg("s"), py::arg("m"), py::arg("q"));

    py::class_<PqHistogram>(m, "PqHistogram")
        .def_readonly("counts", &PqHistogram::counts)
        .def_readonly("by_r", &PqHistogram::by_r)
        .def_readonly("errors", &PqHistogram::errors)
        .def_readonly("trials", &PqHistogram::trials);

    m.def(
        "monte_carlo_pq",
        [](Index dim, Index s, long long mm, Index trials, std::uint64_t seed) {
            Rng rng(seed);
            return monte_carlo_pq(dim, s, mm, trials, rng);
        },
        py::arg("dim"), py::arg("s"), py::arg("m"), py::arg("trials"), py::arg("seed") = 0);

    py::class_<AttackOutcome>(m, "AttackOutcome")
        .def_readonly("detected", &AttackOutcome::detected)
        .def_readonly("leaked_vote", &AttackOutcome::leaked_vote)
        .def_readonly("tally", &AttackOutcome::tally);

    m.def(
        "run_swap_attack",
        [](Index dim, const std::vector<Index>& votes, Index target, const Pairing& pairing, const std::string& backend,
           std::uint64_t seed) {
            Rng rng(seed);
            return run_swap_attack(dim, votes, target, pairing, backend_of(backend), rng);
        },
        py::arg("dim"), py::arg("votes"), py::arg("target"), py::arg("pairing") = Pairing{},
        py::arg("backend") = "branch", py::arg("seed") = 0);

    m.def(
        "run_scenario",
        [](const std::string& text, const std::string& command) {
            auto report = execute(parse_scenario(text), parse_command(command));
            return py::make_tuple(report.ok(), emit_report(report, ReportFormat::jsonl));
        },
        py::arg("text"), py::arg("command") = "run",
        "Runs a scenario document and returns (ok, json-lines report).");
}
