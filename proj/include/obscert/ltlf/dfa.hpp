#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "obscert/ltlf/semantics.hpp"

namespace obscert::ltlf {

/// Deterministic finite automaton over 2^AP with a total transition map.
///
/// Acceptance is on the state reached after reading the whole word:
/// accepts(w) <=> run(initial, w) in Acc.
class Dfa {
public:
    Dfa() = default;
    Dfa(AtomTable atoms, int initial, std::vector<int> delta, std::vector<char> accepting,
        std::vector<std::string> names = {});

    const AtomTable& atoms() const { return atoms_; }
    std::size_t num_states() const { return accepting_.size(); }
    std::size_t num_letters() const { return atoms_.letter_count(); }
    int initial() const { return initial_; }

    int step(int q, Letter l) const { return delta_[static_cast<std::size_t>(q) * num_letters() + l]; }
    bool accepting(int q) const { return accepting_[q]; }

    /// Every state reachable from q in one or more steps is accepting, so the
    /// verdict no longer depends on future letters.
    bool accept_trapped(int q) const { return accept_trapped_[q]; }
    /// Every state reachable from q in one or more steps is rejecting.
    bool reject_trapped(int q) const { return reject_trapped_[q]; }

    int run(int from, const Word& w) const;
    bool accepts(const Word& w) const { return accepting(run(initial_, w)); }

    const std::string& state_name(int q) const { return names_[q]; }

    /// Text table: one "q, {atoms}, q'" line per transition, then the accepting list.
    std::string dump() const;
    std::uint64_t hash() const;

private:
    AtomTable atoms_;
    int initial_ = 0;
    std::vector<int> delta_;
    std::vector<char> accepting_;
    std::vector<std::string> names_;
    std::vector<char> accept_trapped_;
    std::vector<char> reject_trapped_;
};

struct CompileOptions {
    std::size_t max_states = 4096;
    /// Merge Myhill-Nerode equivalent states (on nonempty words).
    bool minimize = true;
};

/// Minimal DFA for the same language over nonempty words: equivalent states
/// are merged and the initial state may be merged with any state whose
/// successors agree on every letter, since the empty word never occurs.
Dfa minimize(const Dfa& dfa);

/// Compiles a quantifier-free body by formula progression. States are
/// (canonical obligation, "word so far satisfies body") pairs; obligations are
/// identified up to propositional equivalence over their temporal subformulas.
Dfa compile(const Formula& body, const CompileOptions& options = {});

}  // namespace obscert::ltlf
