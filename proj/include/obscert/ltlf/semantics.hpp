#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "obscert/ltlf/formula.hpp"

namespace obscert::ltlf {

/// A letter of 2^AP: bit i set <=> atom i of the table holds.
using Letter = std::uint32_t;
using Word = std::vector<Letter>;

/// Ordered atom set; letters are bitmasks over this order.
class AtomTable {
public:
    AtomTable() = default;
    explicit AtomTable(std::vector<AtomicPredicate> atoms);
    static AtomTable of(const Formula& f) { return AtomTable(collect_atoms(f)); }

    std::size_t size() const { return atoms_.size(); }
    std::size_t letter_count() const { return std::size_t{1} << atoms_.size(); }
    const std::vector<AtomicPredicate>& atoms() const { return atoms_; }
    const AtomicPredicate& operator[](std::size_t i) const { return atoms_[i]; }

    /// Index of an atom with the same key; throws if absent.
    std::size_t index_of(const AtomicPredicate& a) const;
    bool has(const AtomicPredicate& a, Letter letter) const { return (letter >> index_of(a)) & 1u; }

    /// Human-readable "{out_close(0.5), sec1}".
    std::string letter_to_string(Letter letter) const;

private:
    std::vector<AtomicPredicate> atoms_;
};

/// Labeling L(x, x'): the set of atoms that hold on the pair, given both outputs.
Letter label(const AtomTable& atoms, const State& x, const State& y, const State& x2, const State& y2);

/// Direct recursive finite-trace semantics of `body` at position 0 of `word`.
/// Strong next: X f is false at the last position.
bool evaluate(const Formula& body, const Word& word, const AtomTable& atoms);

/// Truth value at every position of the word.
std::vector<char> evaluate_positions(const Formula& body, const Word& word, const AtomTable& atoms);

using PairLabeler = std::function<Letter(const State& x, const State& x2)>;

/// Semantics over an explicit trace of state pairs, labeled by `labeler`.
bool evaluate(const Formula& body, std::span<const std::pair<State, State>> trace, const PairLabeler& labeler,
              const AtomTable& atoms);

/// Formula progression: for every nonempty `rest`, letter·rest |= body iff rest |= result.
Formula progress(const Formula& body, Letter letter, const AtomTable& atoms);

}  // namespace obscert::ltlf
