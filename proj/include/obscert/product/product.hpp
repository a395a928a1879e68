#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "obscert/ltlf/dfa.hpp"
#include "obscert/poss/poss.hpp"

namespace obscert::product {

/// Product state (x1, x2, q). A sink state has left the working domain in at
/// least one component; it keeps the automaton state reached when it left.
struct ProductState {
    State x1;
    State x2;
    int q = 0;
    bool sink = false;

    bool operator==(const ProductState&) const = default;
};

enum class Acceptance {
    TrailingLabel,  // accept at T iff δ(q_T, L(x1_T, x2_T)) ∈ Acc
    StateOnly,      // accept at T iff q_T ∈ Acc
};

/// Twin-system × automaton product with stochastic w1 and adversarial w2.
class VerificationStructure {
public:
    VerificationStructure(const poss::Poss& model, ltlf::HyperFormula formula,
                          Acceptance acceptance = Acceptance::TrailingLabel, double trunc_sigmas = 3.0);

    const poss::Poss& model() const { return model_; }
    const ltlf::HyperFormula& formula() const { return formula_; }
    const ltlf::Dfa& dfa() const { return dfa_; }
    const ltlf::AtomTable& atoms() const { return dfa_.atoms(); }
    ltlf::Quantifier quantifier() const { return formula_.quantifier; }
    Acceptance acceptance() const { return acceptance_; }
    double trunc_sigmas() const { return trunc_sigmas_; }
    int horizon() const { return model_.horizon(); }

    ltlf::Letter label(const State& x1, const State& x2) const;
    ProductState initial(const State& x0, const State& x0b) const;

    /// Accepting indicator at the final time.
    bool accepting(const ProductState& v) const;
    bool accepting(const State& x1, const State& x2, int q) const;

    /// Terminal value of a sink that left with automaton state q: 1 when no
    /// continuation can reject any more, else 0.
    double sink_value(int q) const;

    /// (f(x1, w1), f(x2, w2), δ(q, L(x1, x2))); leaving the domain yields a sink.
    ProductState step(const ProductState& v, const State& w1, const State& w2) const;

private:
    poss::Poss model_;
    ltlf::HyperFormula formula_;
    ltlf::Dfa dfa_;
    Acceptance acceptance_;
    double trunc_sigmas_;
};

/// Time-dependent Markov policy of the environment: initial companion state and w2 rule.
struct EnvironmentPolicy {
    State init_choice;
    std::function<State(const ProductState&, int t)> rule;
};

struct Rollout {
    std::vector<ProductState> states;  // T + 1 entries
    std::vector<State> w1, w2;
    bool accepted = false;
};

/// Samples w1 from the model and takes w2 from the policy.
/// Throws when the policy leaves the truncated disturbance support.
Rollout rollout(const VerificationStructure& vs, const State& x0, const EnvironmentPolicy& policy, Rng& rng);

/// CSV with columns t, x1_*, x2_*, q, sink, accepted.
void write_rollout_csv(std::ostream& os, const VerificationStructure& vs, const Rollout& r);

}  // namespace obscert::product
