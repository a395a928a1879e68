#include "obscert/ltlf/semantics.hpp"

#include <algorithm>

namespace obscert::ltlf {

AtomTable::AtomTable(std::vector<AtomicPredicate> atoms) : atoms_(std::move(atoms)) {
    std::sort(atoms_.begin(), atoms_.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
    atoms_.erase(std::unique(atoms_.begin(), atoms_.end(), [](const auto& a, const auto& b) { return a.key() == b.key(); }),
                 atoms_.end());
    if (atoms_.size() > 20) throw Error("too many distinct atoms (max 20)");
}

std::size_t AtomTable::index_of(const AtomicPredicate& a) const {
    const std::string k = a.key();
    for (std::size_t i = 0; i < atoms_.size(); ++i)
        if (atoms_[i].key() == k) return i;
    throw Error("atom " + k + " is not in the atom table");
}

std::string AtomTable::letter_to_string(Letter letter) const {
    std::string out = "{";
    bool first = true;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (!((letter >> i) & 1u)) continue;
        if (!first) out += ", ";
        out += atoms_[i].name();
        first = false;
    }
    return out + "}";
}

Letter label(const AtomTable& atoms, const State& x, const State& y, const State& x2, const State& y2) {
    if (x.size() != x2.size()) throw Error("label: state dimension mismatch");
    Letter l = 0;
    for (std::size_t i = 0; i < atoms.size(); ++i)
        if (atoms[i].holds(x, y, x2, y2)) l |= Letter{1} << i;
    return l;
}

std::vector<char> evaluate_positions(const Formula& f, const Word& word, const AtomTable& atoms) {
    const std::size_t n = word.size();
    if (n == 0) throw Error("evaluate: empty trace");
    std::vector<char> out(n, 0);
    switch (f.op()) {
        case Op::True: std::fill(out.begin(), out.end(), 1); break;
        case Op::False: break;
        case Op::Atom: {
            const std::size_t idx = atoms.index_of(f.atom());
            for (std::size_t i = 0; i < n; ++i) out[i] = (word[i] >> idx) & 1u;
            break;
        }
        case Op::Not: {
            auto a = evaluate_positions(f.child(0), word, atoms);
            for (std::size_t i = 0; i < n; ++i) out[i] = !a[i];
            break;
        }
        case Op::Or:
        case Op::And: {
            const bool is_or = f.op() == Op::Or;
            std::fill(out.begin(), out.end(), is_or ? 0 : 1);
            for (const auto& c : f.children()) {
                auto a = evaluate_positions(c, word, atoms);
                for (std::size_t i = 0; i < n; ++i) out[i] = is_or ? (out[i] || a[i]) : (out[i] && a[i]);
            }
            break;
        }
        case Op::Next: {
            auto a = evaluate_positions(f.child(0), word, atoms);
            for (std::size_t i = 0; i + 1 < n; ++i) out[i] = a[i + 1];
            break;
        }
        case Op::Until: {
            // (w, i) |= a U b  iff  exists j in [i, n): b at j and a on [i, j)
            auto a = evaluate_positions(f.child(0), word, atoms);
            auto b = evaluate_positions(f.child(1), word, atoms);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i; j < n; ++j) {
                    if (b[j]) {
                        out[i] = 1;
                        break;
                    }
                    if (!a[j]) break;
                }
            }
            break;
        }
        case Op::Eventually: {
            auto a = evaluate_positions(f.child(0), word, atoms);
            for (std::size_t i = 0; i < n; ++i) out[i] = std::any_of(a.begin() + i, a.end(), [](char c) { return c; });
            break;
        }
        case Op::Always: {
            auto a = evaluate_positions(f.child(0), word, atoms);
            for (std::size_t i = 0; i < n; ++i) out[i] = std::all_of(a.begin() + i, a.end(), [](char c) { return c; });
            break;
        }
    }
    return out;
}

bool evaluate(const Formula& body, const Word& word, const AtomTable& atoms) {
    return evaluate_positions(body, word, atoms)[0];
}

bool evaluate(const Formula& body, std::span<const std::pair<State, State>> trace, const PairLabeler& labeler,
              const AtomTable& atoms) {
    if (trace.empty()) throw Error("evaluate: empty trace");
    Word w;
    w.reserve(trace.size());
    for (const auto& [x, x2] : trace) w.push_back(labeler(x, x2));
    return evaluate(body, w, atoms);
}

Formula progress(const Formula& f, Letter letter, const AtomTable& atoms) {
    switch (f.op()) {
        case Op::True:
        case Op::False: return f;
        case Op::Atom: return ((letter >> atoms.index_of(f.atom())) & 1u) ? Formula::top() : Formula::bottom();
        case Op::Not: return simplify_not(progress(f.child(0), letter, atoms));
        case Op::Or:
        case Op::And: {
            std::vector<Formula> parts;
            for (const auto& c : f.children()) parts.push_back(progress(c, letter, atoms));
            return f.op() == Op::Or ? simplify_or(std::move(parts)) : simplify_and(std::move(parts));
        }
        case Op::Next: return f.child(0);
        case Op::Until:
            return simplify_or({progress(f.child(1), letter, atoms),
                                simplify_and({progress(f.child(0), letter, atoms), f})});
        case Op::Eventually: return simplify_or({progress(f.child(0), letter, atoms), f});
        case Op::Always: return simplify_and({progress(f.child(0), letter, atoms), f});
    }
    return f;
}

}  // namespace obscert::ltlf
