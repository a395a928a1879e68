#include "obscert/oracle/finite.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

namespace obscert::oracle {

void FiniteInstance::validate() const {
    if (num_states < 2 || num_disturbances < 1) throw Error("finite instance: need >= 2 states and >= 1 disturbance");
    if (next.size() != static_cast<std::size_t>(num_states * num_disturbances))
        throw Error("finite instance: transition table size mismatch");
    if (probs.size() != static_cast<std::size_t>(num_disturbances))
        throw Error("finite instance: one probability per disturbance");
    double total = 0.0;
    for (double p : probs) total += p;
    if (std::fabs(total - 1.0) > 1e-12) throw Error("finite instance: probabilities must sum to 1");
    if (outputs.size() != static_cast<std::size_t>(num_states)) throw Error("finite instance: one output per state");
    if (initial.empty()) throw Error("finite instance: empty initial set");
    for (int x : initial)
        if (x < 0 || x >= num_states) throw Error("finite instance: initial state out of range");
    if (horizon < 0) throw Error("finite instance: negative horizon");
}

poss::Poss FiniteInstance::to_poss() const {
    validate();
    auto t = std::make_shared<poss::FiniteTables>();
    t->num_states = num_states;
    t->num_disturbances = num_disturbances;
    t->next = next;
    t->outputs = outputs;
    std::vector<Box> boxes;
    for (int x : initial) boxes.emplace_back(State{double(x)}, State{double(x)});
    return poss::Poss::finite(std::move(t), probs, Region(std::move(boxes)), horizon);
}

ExactValues::ExactValues(int num_states, int num_q, int horizon, Mode mode)
    : n_(num_states), nq_(num_q), T_(horizon), mode_(mode),
      values_(static_cast<std::size_t>(horizon + 1) * num_q * num_states * num_states, 0.0) {}

ExactValues exact_values(const FiniteInstance& inst, const product::VerificationStructure& vs, Mode mode) {
    inst.validate();
    const int n = inst.num_states, m = inst.num_disturbances, T = inst.horizon;
    const auto& dfa = vs.dfa();
    const int Q = static_cast<int>(dfa.num_states());
    ExactValues u(n, Q, T, mode);
    auto st = [](int x) { return State{double(x)}; };
    for (int q = 0; q < Q; ++q)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) u.at(T, q, a, b) = vs.accepting(st(a), st(b), q) ? 1.0 : 0.0;
    for (int t = T - 1; t >= 0; --t)
        for (int q = 0; q < Q; ++q)
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    const int qn = dfa.step(q, vs.label(st(a), st(b)));
                    double best = mode == Mode::Inf ? INFINITY : -INFINITY;
                    for (int j2 = 0; j2 < m; ++j2) {
                        double e = 0.0;
                        for (int j1 = 0; j1 < m; ++j1)
                            e += inst.probs[static_cast<std::size_t>(j1)] * u.at(t + 1, qn, inst.step(a, j1), inst.step(b, j2));
                        best = mode == Mode::Inf ? std::min(best, e) : std::max(best, e);
                    }
                    u.at(t, q, a, b) = best;
                }
    return u;
}

namespace {

struct WeightedPath {
    std::vector<int> states;
    double prob;
};

std::vector<WeightedPath> enumerate(const FiniteInstance& inst, int x0) {
    std::vector<WeightedPath> cur{{{x0}, 1.0}};
    for (int t = 0; t < inst.horizon; ++t) {
        std::vector<WeightedPath> nxt;
        for (const auto& p : cur)
            for (int j = 0; j < inst.num_disturbances; ++j) {
                WeightedPath w = p;
                w.states.push_back(inst.step(p.states.back(), j));
                w.prob *= inst.probs[static_cast<std::size_t>(j)];
                nxt.push_back(std::move(w));
            }
        cur = std::move(nxt);
    }
    return cur;
}

}  // namespace

PolicyGapReport policy_gap_check(const FiniteInstance& inst, const ltlf::HyperFormula& formula, double tol,
                              std::size_t max_paths) {
    inst.validate();
    const double per_start = std::pow(static_cast<double>(inst.num_disturbances), inst.horizon);
    if (per_start * static_cast<double>(inst.initial.size()) > static_cast<double>(max_paths))
        throw Error("policy_gap_check: too many trajectories to enumerate");

    const poss::Poss model = inst.to_poss();
    const product::VerificationStructure vs(model, formula);
    const bool forall = formula.quantifier == ltlf::Quantifier::Forall;
    const auto u = exact_values(inst, vs, forall ? Mode::Inf : Mode::Sup);
    const int q0 = vs.dfa().initial();

    std::set<std::vector<int>> companions;
    for (int x0 : inst.initial)
        for (const auto& p : enumerate(inst, x0)) companions.insert(p.states);

    PolicyGapReport rep;
    rep.quantifier = formula.quantifier;
    rep.worst_excess = -INFINITY;
    for (int x0 : inst.initial) {
        PolicyGapRow row;
        row.x0 = x0;
        row.lhs = forall ? INFINITY : -INFINITY;
        for (int x0b : inst.initial) {
            const double v = u.at(0, q0, x0, x0b);
            row.lhs = forall ? std::min(row.lhs, v) : std::max(row.lhs, v);
        }
        for (const auto& s : enumerate(inst, x0)) {
            bool any = false, all = true;
            for (const auto& s2 : companions) {
                ltlf::Word w;
                for (std::size_t i = 0; i < s.states.size(); ++i)
                    w.push_back(vs.label(State{double(s.states[i])}, State{double(s2[i])}));
                const bool sat = ltlf::evaluate(formula.body, w, vs.atoms());
                any = any || sat;
                all = all && sat;
            }
            if (forall ? all : any) row.rhs += s.prob;
        }
        row.holds = row.lhs <= row.rhs + tol;
        row.gap = row.lhs < row.rhs - tol;
        rep.holds = rep.holds && row.holds;
        rep.any_gap = rep.any_gap || row.gap;
        rep.worst_excess = std::max(rep.worst_excess, row.lhs - row.rhs);
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace obscert::oracle
