#include "obscert/product/product.hpp"

#include <ostream>

namespace obscert::product {

VerificationStructure::VerificationStructure(const poss::Poss& model, ltlf::HyperFormula formula,
                                             Acceptance acceptance, double trunc_sigmas)
    : model_(model),
      formula_(std::move(formula)),
      dfa_(ltlf::compile(formula_.body)),
      acceptance_(acceptance),
      trunc_sigmas_(trunc_sigmas) {}

ltlf::Letter VerificationStructure::label(const State& x1, const State& x2) const {
    return ltlf::label(atoms(), x1, model_.output(x1), x2, model_.output(x2));
}

ProductState VerificationStructure::initial(const State& x0, const State& x0b) const {
    return {x0, x0b, dfa_.initial(), false};
}

bool VerificationStructure::accepting(const State& x1, const State& x2, int q) const {
    if (acceptance_ == Acceptance::StateOnly) return dfa_.accepting(q);
    return dfa_.accepting(dfa_.step(q, label(x1, x2)));
}

bool VerificationStructure::accepting(const ProductState& v) const {
    if (v.sink) return sink_value(v.q) > 0.5;
    return accepting(v.x1, v.x2, v.q);
}

double VerificationStructure::sink_value(int q) const {
    const bool trapped = dfa_.accept_trapped(q) && (acceptance_ == Acceptance::TrailingLabel || dfa_.accepting(q));
    return trapped ? 1.0 : 0.0;
}

ProductState VerificationStructure::step(const ProductState& v, const State& w1, const State& w2) const {
    if (v.sink) return v;
    ProductState out;
    out.q = dfa_.step(v.q, label(v.x1, v.x2));
    out.x1 = model_.step(v.x1, w1);
    out.x2 = model_.step(v.x2, w2);
    out.sink = !model_.domain().contains(out.x1) || !model_.domain().contains(out.x2);
    return out;
}

Rollout rollout(const VerificationStructure& vs, const State& x0, const EnvironmentPolicy& policy, Rng& rng) {
    const Box support = vs.model().disturbance().support(vs.trunc_sigmas());
    Rollout r;
    r.states.push_back(vs.initial(x0, policy.init_choice));
    for (int t = 0; t < vs.horizon(); ++t) {
        const ProductState& v = r.states.back();
        State w1 = vs.model().disturbance().sample(rng);
        State w2 = policy.rule(v, t);
        if (!support.contains(w2))
            throw Error("policy chose w2 outside the truncated disturbance support at t=" + std::to_string(t));
        r.states.push_back(vs.step(v, w1, w2));
        r.w1.push_back(std::move(w1));
        r.w2.push_back(std::move(w2));
    }
    r.accepted = vs.accepting(r.states.back());
    return r;
}

void write_rollout_csv(std::ostream& os, const VerificationStructure& vs, const Rollout& r) {
    const int d = vs.model().state_dim();
    os << "t";
    for (int i = 1; i <= d; ++i) os << ",x1_" << i;
    for (int i = 1; i <= d; ++i) os << ",x2_" << i;
    os << ",q,sink,accepted\n";
    os.precision(17);
    for (std::size_t t = 0; t < r.states.size(); ++t) {
        const auto& v = r.states[t];
        os << t;
        for (double x : v.x1) os << "," << x;
        for (double x : v.x2) os << "," << x;
        os << "," << v.q << "," << (v.sink ? 1 : 0) << "," << (t + 1 == r.states.size() && r.accepted ? 1 : 0)
           << "\n";
    }
}

}  // namespace obscert::product
