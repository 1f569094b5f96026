#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qballot/backend.hpp"

namespace qballot {

class Rng;

/// Finite group given by its Cayley table; table[a][b] is the index of a·b.
class FiniteGroup {
  public:
    /// Checks closure, associativity, a two-sided identity and inverses.
    explicit FiniteGroup(std::vector<std::vector<Index>> table, std::vector<std::string> names = {});

    static FiniteGroup cyclic(Index n);
    /// Elements e, x1, x2, x3 with x_j² = e and x_j x_k = x_l.
    static FiniteGroup klein4();
    /// Permutations of three symbols; (a·b)(x) = a(b(x)).
    static FiniteGroup symmetric3();
    static FiniteGroup direct_product(const FiniteGroup& a, const FiniteGroup& b);
    /// First line: order; following lines: table rows as space-separated indices.
    static FiniteGroup from_text(const std::string& text);

    Index order() const { return table_.size(); }
    Index identity() const { return identity_; }
    Index multiply(Index a, Index b) const { return table_.at(a).at(b); }
    Index inverse(Index a) const { return inverse_.at(a); }
    const std::string& name(Index a) const { return names_.at(a); }
    const std::vector<std::vector<Index>>& table() const { return table_; }

    /// Product of elements applied in sequence: g_n ⋯ g_2 g_1.
    Index sequential_product(const std::vector<Index>& choices) const;

  private:
    std::vector<std::vector<Index>> table_;
    std::vector<std::string> names_;
    std::vector<Index> inverse_;
    Index identity_ = 0;
};

/// Unitary matrices U(g), one per element, forming an ordinary or projective representation.
struct Representation {
    FiniteGroup group;
    Index dim = 0;
    std::vector<Matrix> matrices;
    bool projective = false;
};

/// Validates unitarity and the (projective) homomorphism law within kUnitaryTol.
Representation make_representation(FiniteGroup group, std::vector<Matrix> matrices, bool projective);

/// Klein four-group with the Pauli matrices {I, σx, σy, σz}.
std::pair<FiniteGroup, Representation> klein4();

/// U(g_n)_{jk} = 1 iff g_j⁻¹ g_k = g_n.
Representation regular_representation(const FiniteGroup& group);

struct ReadinessReport {
    bool ready = false;
    /// |Tr U(g)| per element.
    std::vector<double> trace_magnitudes;
    /// |⟨Ψ| I ⊗ U(g2⁻¹ g1) |Ψ⟩| for every pair of elements.
    Matrix overlaps;
    double max_overlap = 0.0;
};

ReadinessReport check_protocol_ready(const Representation& rep);

struct GroupRunResult {
    Index element = 0;
    double probability = 0.0;
};

/// Donna keeps register 0 of Σ|jj⟩/√d; register 1 travels and party k applies U(choices[k]).
GroupRunResult run_group_traveling(const Representation& rep, const std::vector<Index>& choices, Backend backend, Rng& rng,
                                   const StepObserver& observer = {});

/// One GHZ ballot per cyclic factor; choices[p][f] is party p's component for factor f.
std::vector<Index> run_abelian_distributed(const std::vector<Index>& moduli, const std::vector<std::vector<Index>>& choices,
                                           Backend backend, Rng& rng, const StepObserver& observer = {});

}  // namespace qballot
