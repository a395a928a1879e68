#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace obscert::ltlf::detail {

/// Minimal reduced ordered BDD with a unique table. Used only to decide
/// propositional equivalence of progressed formulas over their temporal
/// subformulas, so DFA states are canonical.
class Bdd {
public:
    static constexpr int kFalse = 0;
    static constexpr int kTrue = 1;

    Bdd();

    int var(int index);
    int negate(int f) { return ite(f, kFalse, kTrue); }
    int conj(int f, int g) { return ite(f, g, kFalse); }
    int disj(int f, int g) { return ite(f, kTrue, g); }
    int ite(int f, int g, int h);

    /// Evaluates f under an assignment indexed by variable.
    bool eval(int f, const std::vector<char>& assignment) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct NodeRec {
        int var;
        int lo;
        int hi;
    };

    int make(int var, int lo, int hi);
    int top_var(int f) const { return nodes_[f].var; }
    int cofactor(int f, int var, bool high) const;

    struct Triple {
        int a, b, c;
        bool operator==(const Triple&) const = default;
    };
    struct TripleHash {
        std::size_t operator()(const Triple& t) const {
            std::uint64_t h = static_cast<std::uint32_t>(t.a);
            h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint32_t>(t.b);
            h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint32_t>(t.c);
            return static_cast<std::size_t>(h ^ (h >> 29));
        }
    };

    std::vector<NodeRec> nodes_;
    std::unordered_map<Triple, int, TripleHash> unique_;
    std::unordered_map<Triple, int, TripleHash> ite_cache_;
};

}  // namespace obscert::ltlf::detail
