#include "obscert/ltlf/dfa.hpp"

#include <deque>
#include <map>
#include <sstream>

#include "ltlf/bdd.hpp"

namespace obscert::ltlf {

Dfa::Dfa(AtomTable atoms, int initial, std::vector<int> delta, std::vector<char> accepting,
         std::vector<std::string> names)
    : atoms_(std::move(atoms)), initial_(initial), delta_(std::move(delta)), accepting_(std::move(accepting)),
      names_(std::move(names)) {
    const std::size_t n = accepting_.size();
    if (n == 0) throw Error("DFA needs at least one state");
    if (delta_.size() != n * num_letters()) throw Error("DFA transition table is not total");
    for (int t : delta_)
        if (t < 0 || static_cast<std::size_t>(t) >= n) throw Error("DFA transition to unknown state");
    if (initial_ < 0 || static_cast<std::size_t>(initial_) >= n) throw Error("DFA initial state out of range");
    if (names_.empty())
        for (std::size_t q = 0; q < n; ++q) names_.push_back("q" + std::to_string(q));

    auto trapped = [&](bool want_accepting) {
        // bad = states that can reach, in >= 1 step, a state with the other verdict
        std::vector<char> bad(n, 0);
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t q = 0; q < n; ++q) {
                if (bad[q]) continue;
                for (std::size_t l = 0; l < num_letters(); ++l) {
                    const int t = delta_[q * num_letters() + l];
                    if (static_cast<bool>(accepting_[t]) != want_accepting || bad[t]) {
                        bad[q] = 1;
                        changed = true;
                        break;
                    }
                }
            }
        }
        std::vector<char> out(n);
        for (std::size_t q = 0; q < n; ++q) out[q] = !bad[q];
        return out;
    };
    accept_trapped_ = trapped(true);
    reject_trapped_ = trapped(false);
}

int Dfa::run(int from, const Word& w) const {
    int q = from;
    for (Letter l : w) q = step(q, l);
    return q;
}

std::string Dfa::dump() const {
    std::ostringstream os;
    os << "# states " << num_states() << ", letters " << num_letters() << ", initial q" << initial_ << "\n";
    for (std::size_t q = 0; q < num_states(); ++q) os << "# q" << q << " = " << names_[q] << "\n";
    for (std::size_t q = 0; q < num_states(); ++q)
        for (Letter l = 0; l < num_letters(); ++l)
            os << "q" << q << ", " << atoms_.letter_to_string(l) << ", q" << step(static_cast<int>(q), l) << "\n";
    os << "accepting:";
    for (std::size_t q = 0; q < num_states(); ++q)
        if (accepting_[q]) os << " q" << q;
    os << "\n";
    return os.str();
}

std::uint64_t Dfa::hash() const { return fnv1a(dump()); }

namespace {

class Compiler {
public:
    Compiler(const Formula& body, const AtomTable& atoms) : atoms_(atoms) { (void)body; }

    int to_bdd(const Formula& f) {
        switch (f.op()) {
            case Op::True: return detail::Bdd::kTrue;
            case Op::False: return detail::Bdd::kFalse;
            case Op::Not: return bdd_.negate(to_bdd(f.child(0)));
            case Op::Or:
            case Op::And: {
                const bool is_or = f.op() == Op::Or;
                int acc = is_or ? detail::Bdd::kFalse : detail::Bdd::kTrue;
                for (const auto& c : f.children()) acc = is_or ? bdd_.disj(acc, to_bdd(c)) : bdd_.conj(acc, to_bdd(c));
                return acc;
            }
            default: {
                auto [it, inserted] = vars_.emplace(f.key(), static_cast<int>(vars_.size()));
                return bdd_.var(it->second);
            }
        }
    }

    const AtomTable& atoms() const { return atoms_; }

private:
    const AtomTable& atoms_;
    detail::Bdd bdd_;
    std::map<std::string, int> vars_;
};

}  // namespace

Dfa compile(const Formula& body, const CompileOptions& options) {
    const Formula core = normalize(body);
    AtomTable atoms = AtomTable::of(core);
    Compiler c(core, atoms);
    const std::size_t letters = atoms.letter_count();

    // Obligation classes, keyed by BDD node; transitions are shared by both bit values.
    std::map<int, int> class_of_node;
    std::vector<Formula> reps;
    std::vector<std::vector<std::pair<int, char>>> moves;  // per class, per letter: (class, bit)

    auto class_for = [&](const Formula& f) {
        const int node = c.to_bdd(f);
        auto [it, inserted] = class_of_node.emplace(node, static_cast<int>(reps.size()));
        if (inserted) reps.push_back(f);
        return it->second;
    };

    std::map<std::pair<int, char>, int> state_of;
    std::vector<std::pair<int, char>> states;
    std::deque<int> work;
    auto state_for = [&](int cls, char bit) {
        auto [it, inserted] = state_of.emplace(std::make_pair(cls, bit), static_cast<int>(states.size()));
        if (inserted) {
            states.emplace_back(cls, bit);
            if (states.size() > options.max_states)
                throw Error("DFA construction exceeded " + std::to_string(options.max_states) +
                            " states; simplify the formula or raise the cap");
            work.push_back(it->second);
        }
        return it->second;
    };

    const int init = state_for(class_for(core), 0);
    std::vector<std::vector<int>> delta_rows;
    while (!work.empty()) {
        const int s = work.front();
        work.pop_front();
        const int cls = states[s].first;
        while (moves.size() <= static_cast<std::size_t>(cls)) moves.emplace_back();
        if (moves[cls].empty()) {
            const Formula rep = reps[cls];
            std::vector<std::pair<int, char>> row(letters);
            for (Letter l = 0; l < letters; ++l) {
                const Formula next = progress(rep, l, atoms);
                const bool done = evaluate(rep, Word{l}, atoms);
                row[l] = {class_for(next), static_cast<char>(done)};
            }
            while (moves.size() < reps.size()) moves.emplace_back();
            moves[cls] = std::move(row);
        }
        if (delta_rows.size() <= static_cast<std::size_t>(s)) delta_rows.resize(s + 1);
        std::vector<int> row(letters);
        for (Letter l = 0; l < letters; ++l) row[l] = state_for(moves[cls][l].first, moves[cls][l].second);
        delta_rows[s] = std::move(row);
    }

    std::vector<int> delta;
    std::vector<char> accepting;
    std::vector<std::string> names;
    for (std::size_t s = 0; s < states.size(); ++s) {
        delta.insert(delta.end(), delta_rows[s].begin(), delta_rows[s].end());
        accepting.push_back(states[s].second);
        names.push_back(reps[states[s].first].to_string() + (states[s].second ? " [ended: accept]" : ""));
    }
    Dfa raw(std::move(atoms), init, std::move(delta), std::move(accepting), std::move(names));
    return options.minimize ? minimize(raw) : raw;
}

Dfa minimize(const Dfa& dfa) {
    const std::size_t n = dfa.num_states();
    const std::size_t letters = dfa.num_letters();

    // Moore refinement, starting from the accepting/rejecting split.
    std::vector<int> cls(n);
    for (std::size_t q = 0; q < n; ++q) cls[q] = dfa.accepting(static_cast<int>(q)) ? 1 : 0;
    std::size_t count = 0;
    for (;;) {
        std::map<std::vector<int>, int> sig_to_class;
        std::vector<int> next(n);
        for (std::size_t q = 0; q < n; ++q) {
            std::vector<int> sig{cls[q]};
            for (Letter l = 0; l < letters; ++l) sig.push_back(cls[dfa.step(static_cast<int>(q), l)]);
            auto [it, inserted] = sig_to_class.emplace(std::move(sig), static_cast<int>(sig_to_class.size()));
            next[q] = it->second;
        }
        const std::size_t new_count = sig_to_class.size();
        cls = std::move(next);
        if (new_count == count) break;
        count = new_count;
    }

    auto successor_row = [&](int q) {
        std::vector<int> row;
        for (Letter l = 0; l < letters; ++l) row.push_back(cls[dfa.step(q, l)]);
        return row;
    };

    // Only the successors of the initial state matter; reuse any class that agrees.
    int init_class = cls[dfa.initial()];
    const auto init_row = successor_row(dfa.initial());
    for (std::size_t q = 0; q < n; ++q) {
        if (cls[q] != init_class && successor_row(static_cast<int>(q)) == init_row) {
            init_class = cls[q];
            break;
        }
    }

    // Renumber reachable classes in BFS order from the initial class.
    std::vector<int> rep(count, -1);
    for (std::size_t q = 0; q < n; ++q)
        if (rep[cls[q]] < 0) rep[cls[q]] = static_cast<int>(q);
    std::vector<int> order(count, -1);
    std::vector<int> queue{init_class};
    order[init_class] = 0;
    for (std::size_t i = 0; i < queue.size(); ++i) {
        for (Letter l = 0; l < letters; ++l) {
            const int t = cls[dfa.step(rep[queue[i]], l)];
            if (order[t] < 0) {
                order[t] = static_cast<int>(queue.size());
                queue.push_back(t);
            }
        }
    }
    std::vector<int> delta;
    std::vector<char> accepting;
    std::vector<std::string> names;
    for (int c : queue) {
        for (Letter l = 0; l < letters; ++l) delta.push_back(order[cls[dfa.step(rep[c], l)]]);
        accepting.push_back(dfa.accepting(rep[c]));
        names.push_back(dfa.state_name(rep[c]));
    }
    return Dfa(dfa.atoms(), 0, std::move(delta), std::move(accepting), std::move(names));
}

}  // namespace obscert::ltlf
