#include "obscert/hyperprops/property.hpp"

namespace obscert::hyperprops {

using ltlf::AtomicPredicate;
using ltlf::Formula;

PropertySpec PropertySpec::initial_detect(double eps, double lam, double p) {
    PropertySpec s;
    s.kind = PropertyKind::InitialDetect;
    s.eps = eps;
    s.lam = lam;
    s.p = p;
    return s;
}

PropertySpec PropertySpec::current_detect(double eps, double lam, double p) {
    PropertySpec s = initial_detect(eps, lam, p);
    s.kind = PropertyKind::CurrentDetect;
    return s;
}

PropertySpec PropertySpec::initial_opacity(double eps, double p, std::shared_ptr<const Region> secret) {
    PropertySpec s;
    s.kind = PropertyKind::InitialOpacity;
    s.eps = eps;
    s.p = p;
    s.secret = std::move(secret);
    return s;
}

PropertySpec PropertySpec::current_opacity(double eps, double p, std::shared_ptr<const Region> secret) {
    PropertySpec s = initial_opacity(eps, p, std::move(secret));
    s.kind = PropertyKind::CurrentOpacity;
    return s;
}

PropertySpec PropertySpec::custom_formula(ltlf::HyperFormula h, double p) {
    PropertySpec s;
    s.kind = PropertyKind::Custom;
    s.custom = std::move(h);
    s.p = p;
    return s;
}

void PropertySpec::validate() const {
    if (eps < 0 || lam < 0) throw Error("property: eps and lam must be nonnegative");
    if (!(p > 0 && p <= 1)) throw Error("property: p must lie in (0, 1]");
    if ((kind == PropertyKind::InitialOpacity || kind == PropertyKind::CurrentOpacity) && (!secret || secret->empty()))
        throw Error("property: opacity needs a secret region");
}

const char* to_string(PropertyKind k) {
    switch (k) {
        case PropertyKind::InitialDetect: return "initial_detect";
        case PropertyKind::CurrentDetect: return "current_detect";
        case PropertyKind::InitialOpacity: return "initial_opacity";
        case PropertyKind::CurrentOpacity: return "current_opacity";
        case PropertyKind::Custom: return "custom";
    }
    return "?";
}

ltlf::HyperFormula to_formula(const PropertySpec& spec) {
    const Formula indist = Formula::always(Formula::atom(AtomicPredicate::out_close(spec.eps)));
    const Formula close = Formula::atom(AtomicPredicate::state_close(spec.lam));
    const Formula sec = Formula::atom(AtomicPredicate::sec_first(spec.secret));
    const Formula ns = Formula::atom(AtomicPredicate::nonsec_second(spec.secret));
    auto fg = [](Formula f) { return Formula::eventually(Formula::always(std::move(f))); };
    switch (spec.kind) {
        case PropertyKind::InitialDetect:
            return {ltlf::Quantifier::Forall, Formula::implication(indist, close)};
        case PropertyKind::CurrentDetect:
            return {ltlf::Quantifier::Forall, Formula::implication(indist, fg(close))};
        case PropertyKind::InitialOpacity:
            return {ltlf::Quantifier::Exists, Formula::implication(sec, Formula::conjunction(indist, ns))};
        case PropertyKind::CurrentOpacity:
            return {ltlf::Quantifier::Exists, Formula::implication(fg(sec), Formula::conjunction(indist, fg(ns)))};
        case PropertyKind::Custom: {
            if (!spec.secret) return spec.custom;
            return {spec.custom.quantifier, ltlf::bind_secret(spec.custom.body, spec.secret)};
        }
    }
    return spec.custom;
}

bool indistinguishable(const poss::Poss& model, const poss::Trajectory& s, const poss::Trajectory& s2, double eps) {
    if (s.states.size() != s2.states.size()) throw Error("indistinguishable: trajectory length mismatch");
    for (std::size_t i = 0; i < s.states.size(); ++i)
        if (distance(model.output(s.states[i]), model.output(s2.states[i])) > eps) return false;
    return true;
}

}  // namespace obscert::hyperprops
