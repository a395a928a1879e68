#pragma once

// Shared helpers for unit and acceptance tests: random formulas and an
// independent top-down checker for the finite-trace semantics.

#include <random>
#include <vector>

#include "obscert/ltlf/formula.hpp"
#include "obscert/ltlf/semantics.hpp"

namespace testsupport {

using obscert::ltlf::AtomicPredicate;
using obscert::ltlf::AtomTable;
using obscert::ltlf::Formula;
using obscert::ltlf::Letter;
using obscert::ltlf::Op;
using obscert::ltlf::Word;

inline std::vector<AtomicPredicate> sample_atoms() {
    return {AtomicPredicate::out_close(0.5), AtomicPredicate::state_close(0.8), AtomicPredicate::out_close(1.0)};
}

inline Formula random_formula(std::mt19937_64& rng, int depth, const std::vector<AtomicPredicate>& atoms) {
    std::uniform_int_distribution<int> pick_atom(0, static_cast<int>(atoms.size()) - 1);
    if (depth <= 0) {
        std::uniform_int_distribution<int> leaf(0, 9);
        const int k = leaf(rng);
        if (k == 0) return Formula::top();
        if (k == 1) return Formula::bottom();
        return Formula::atom(atoms[pick_atom(rng)]);
    }
    std::uniform_int_distribution<int> op(0, 10);
    const int d = depth - 1;
    switch (op(rng)) {
        case 0: return Formula::atom(atoms[pick_atom(rng)]);
        case 1: return Formula::negation(random_formula(rng, d, atoms));
        case 2: return Formula::disjunction(random_formula(rng, d, atoms), random_formula(rng, d, atoms));
        case 3: return Formula::conjunction(random_formula(rng, d, atoms), random_formula(rng, d, atoms));
        case 4: return Formula::implication(random_formula(rng, d, atoms), random_formula(rng, d, atoms));
        case 5: return Formula::next(random_formula(rng, d, atoms));
        case 6:
        case 7: return Formula::until(random_formula(rng, d, atoms), random_formula(rng, d, atoms));
        case 8: return Formula::eventually(random_formula(rng, d, atoms));
        default: return Formula::always(random_formula(rng, d, atoms));
    }
}

/// Top-down semantics straight from the definitions, one position at a time.
inline bool sat(const Formula& f, const Word& w, std::size_t i, const AtomTable& atoms) {
    const std::size_t n = w.size();
    switch (f.op()) {
        case Op::True: return true;
        case Op::False: return false;
        case Op::Atom: return (w[i] >> atoms.index_of(f.atom())) & 1u;
        case Op::Not: return !sat(f.child(0), w, i, atoms);
        case Op::Or:
            for (const auto& c : f.children())
                if (sat(c, w, i, atoms)) return true;
            return false;
        case Op::And:
            for (const auto& c : f.children())
                if (!sat(c, w, i, atoms)) return false;
            return true;
        case Op::Next: return i + 1 < n && sat(f.child(0), w, i + 1, atoms);
        case Op::Until:
            for (std::size_t j = i; j < n; ++j) {
                if (sat(f.child(1), w, j, atoms)) {
                    bool ok = true;
                    for (std::size_t k = i; k < j && ok; ++k) ok = sat(f.child(0), w, k, atoms);
                    if (ok) return true;
                }
            }
            return false;
        case Op::Eventually:
            for (std::size_t j = i; j < n; ++j)
                if (sat(f.child(0), w, j, atoms)) return true;
            return false;
        case Op::Always:
            for (std::size_t j = i; j < n; ++j)
                if (!sat(f.child(0), w, j, atoms)) return false;
            return true;
    }
    return false;
}

inline Word random_word(std::mt19937_64& rng, std::size_t len, const AtomTable& atoms) {
    std::uniform_int_distribution<Letter> letter(0, static_cast<Letter>(atoms.letter_count() - 1));
    Word w(len);
    for (auto& l : w) l = letter(rng);
    return w;
}

/// Calls fn on every word of exactly `len` letters.
template <class Fn>
void for_each_word(std::size_t len, std::size_t letters, Fn&& fn) {
    Word w(len, 0);
    for (;;) {
        fn(w);
        std::size_t i = 0;
        while (i < len && ++w[i] == letters) w[i++] = 0;
        if (i == len) return;
    }
}

}  // namespace testsupport
