#include "obscert/ltlf/formula.hpp"

#include <algorithm>
#include <charconv>
#include <map>

namespace obscert::ltlf {

namespace {

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

AtomicPredicate AtomicPredicate::out_close(double eps) {
    if (!(eps >= 0.0)) throw Error("out_close threshold must be nonnegative");
    return {AtomKind::OutClose, eps, nullptr};
}

AtomicPredicate AtomicPredicate::state_close(double lam) {
    if (!(lam >= 0.0)) throw Error("state_close threshold must be nonnegative");
    return {AtomKind::StateClose, lam, nullptr};
}

AtomicPredicate AtomicPredicate::sec_first(std::shared_ptr<const Region> region) {
    return {AtomKind::SecFirst, 0.0, std::move(region)};
}

AtomicPredicate AtomicPredicate::nonsec_second(std::shared_ptr<const Region> region) {
    return {AtomKind::NonsecSecond, 0.0, std::move(region)};
}

std::string AtomicPredicate::key() const { return name(); }

std::string AtomicPredicate::name() const {
    switch (kind) {
        case AtomKind::OutClose: return "out_close(" + format_number(threshold) + ")";
        case AtomKind::StateClose: return "state_close(" + format_number(threshold) + ")";
        case AtomKind::SecFirst: return "sec1";
        case AtomKind::NonsecSecond: return "nonsec2";
    }
    return "?";
}

bool AtomicPredicate::holds(const State& x, const State& y, const State& x2, const State& y2) const {
    switch (kind) {
        case AtomKind::OutClose:
            if (y.size() != y2.size()) throw Error("output dimension mismatch in out_close");
            return distance(y, y2) <= threshold;
        case AtomKind::StateClose:
            if (x.size() != x2.size()) throw Error("state dimension mismatch in state_close");
            return distance(x, x2) <= threshold;
        case AtomKind::SecFirst:
            if (!region) throw Error("sec1 has no secret region bound");
            return region->contains(x);
        case AtomKind::NonsecSecond:
            if (!region) throw Error("nonsec2 has no secret region bound");
            return !region->contains(x2);
    }
    return false;
}

// ---------------------------------------------------------------------------

Formula Formula::make(Op op, std::vector<Formula> children, const AtomicPredicate* atom) {
    auto n = std::make_shared<Node>();
    n->op = op;
    if (atom) n->atom = *atom;
    n->depth = 0;
    for (const auto& c : children) n->depth = std::max(n->depth, c.depth());
    if (!children.empty()) n->depth += 1;
    switch (op) {
        case Op::True: n->key = "T"; break;
        case Op::False: n->key = "F"; break;
        case Op::Atom: n->key = atom->key(); break;
        default: {
            static const std::map<Op, const char*> tag = {
                {Op::Not, "!"}, {Op::Or, "|"}, {Op::And, "&"}, {Op::Next, "X"},
                {Op::Until, "U"}, {Op::Eventually, "Ev"}, {Op::Always, "Al"}};
            n->key = tag.at(op);
            n->key += '(';
            for (std::size_t i = 0; i < children.size(); ++i) {
                if (i) n->key += ',';
                n->key += children[i].key();
            }
            n->key += ')';
        }
    }
    n->children = std::move(children);
    return Formula(std::move(n));
}

Formula::Formula() : Formula(top()) {}

Formula Formula::top() {
    static const Formula t = make(Op::True, {});
    return t;
}

Formula Formula::bottom() {
    static const Formula f = make(Op::False, {});
    return f;
}

Formula Formula::atom(AtomicPredicate a) { return make(Op::Atom, {}, &a); }
Formula Formula::negation(Formula f) { return make(Op::Not, {std::move(f)}); }
Formula Formula::disjunction(Formula a, Formula b) { return make(Op::Or, {std::move(a), std::move(b)}); }
Formula Formula::conjunction(Formula a, Formula b) { return make(Op::And, {std::move(a), std::move(b)}); }
Formula Formula::implication(Formula a, Formula b) { return disjunction(negation(std::move(a)), std::move(b)); }
Formula Formula::next(Formula f) { return make(Op::Next, {std::move(f)}); }
Formula Formula::until(Formula a, Formula b) { return make(Op::Until, {std::move(a), std::move(b)}); }
Formula Formula::eventually(Formula f) { return make(Op::Eventually, {std::move(f)}); }
Formula Formula::always(Formula f) { return make(Op::Always, {std::move(f)}); }

Op Formula::op() const { return node_->op; }

const AtomicPredicate& Formula::atom() const {
    if (node_->op != Op::Atom) throw Error("formula is not an atom");
    return node_->atom;
}

const std::vector<Formula>& Formula::children() const { return node_->children; }
const std::string& Formula::key() const { return node_->key; }
std::size_t Formula::depth() const { return node_->depth; }

bool Formula::operator==(const Formula& other) const {
    return node_ == other.node_ || node_->key == other.node_->key;
}

namespace {

int precedence(const Formula& f) {
    switch (f.op()) {
        case Op::Or:
            return (f.children().size() == 2 && f.child(0).op() == Op::Not) ? 1 : 2;
        case Op::And: return 3;
        case Op::Until: return 4;
        case Op::Not:
        case Op::Next:
        case Op::Eventually:
        case Op::Always: return 5;
        default: return 6;
    }
}

std::string print(const Formula& f);

std::string wrap(const Formula& f, int min_prec) {
    std::string s = print(f);
    return precedence(f) < min_prec ? "(" + s + ")" : s;
}

std::string print(const Formula& f) {
    switch (f.op()) {
        case Op::True: return "true";
        case Op::False: return "false";
        case Op::Atom: return f.atom().name();
        case Op::Not: return "!" + wrap(f.child(0), 5);
        case Op::Next: return "X " + wrap(f.child(0), 5);
        case Op::Eventually: return "F " + wrap(f.child(0), 5);
        case Op::Always: return "G " + wrap(f.child(0), 5);
        case Op::Until: return wrap(f.child(0), 5) + " U " + wrap(f.child(1), 4);
        case Op::Or:
            if (precedence(f) == 1)
                return wrap(f.child(0).child(0), 2) + " -> " + wrap(f.child(1), 1);
            [[fallthrough]];
        case Op::And: {
            const int p = precedence(f);
            const char* sep = f.op() == Op::Or ? " | " : " & ";
            std::string out;
            for (std::size_t i = 0; i < f.children().size(); ++i) {
                if (i) out += sep;
                out += wrap(f.child(i), i == 0 ? p : p + 1);
            }
            return out;
        }
    }
    return "?";
}

}  // namespace

std::string Formula::to_string() const { return print(*this); }

// ---------------------------------------------------------------------------

Formula simplify_not(const Formula& f) {
    switch (f.op()) {
        case Op::True: return Formula::bottom();
        case Op::False: return Formula::top();
        case Op::Not: return f.child(0);
        default: return Formula::make(Op::Not, {f});
    }
}

namespace {

Formula simplify_junction(Op op, std::vector<Formula> parts) {
    const Op unit = op == Op::Or ? Op::False : Op::True;
    const Op zero = op == Op::Or ? Op::True : Op::False;
    std::vector<Formula> flat;
    for (auto& p : parts) {
        if (p.op() == op) {
            for (const auto& c : p.children()) flat.push_back(c);
        } else {
            flat.push_back(std::move(p));
        }
    }
    std::vector<Formula> kept;
    for (auto& p : flat) {
        if (p.op() == zero) return zero == Op::True ? Formula::top() : Formula::bottom();
        if (p.op() != unit) kept.push_back(std::move(p));
    }
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    for (const auto& p : kept) {
        if (p.op() != Op::Not) continue;
        if (std::binary_search(kept.begin(), kept.end(), p.child(0)))
            return zero == Op::True ? Formula::top() : Formula::bottom();
    }
    if (kept.empty()) return unit == Op::True ? Formula::top() : Formula::bottom();
    if (kept.size() == 1) return kept.front();
    return Formula::make(op, std::move(kept));
}

}  // namespace

Formula simplify_or(std::vector<Formula> parts) { return simplify_junction(Op::Or, std::move(parts)); }
Formula simplify_and(std::vector<Formula> parts) { return simplify_junction(Op::And, std::move(parts)); }

Formula normalize(const Formula& f) {
    switch (f.op()) {
        case Op::True:
        case Op::Atom: return f;
        case Op::False: return Formula::negation(Formula::top());
        case Op::Not: return Formula::negation(normalize(f.child(0)));
        case Op::Next: return Formula::next(normalize(f.child(0)));
        case Op::Until: return Formula::until(normalize(f.child(0)), normalize(f.child(1)));
        case Op::Eventually: return Formula::until(Formula::top(), normalize(f.child(0)));
        case Op::Always:
            return Formula::negation(
                Formula::until(Formula::top(), Formula::negation(normalize(f.child(0)))));
        case Op::Or:
        case Op::And: {
            const bool is_and = f.op() == Op::And;
            auto operand = [&](const Formula& c) {
                Formula n = normalize(c);
                return is_and ? Formula::negation(n) : n;
            };
            Formula acc = operand(f.child(0));
            for (std::size_t i = 1; i < f.children().size(); ++i)
                acc = Formula::disjunction(acc, operand(f.child(i)));
            return is_and ? Formula::negation(acc) : acc;
        }
    }
    return f;
}

Formula bind_secret(const Formula& f, std::shared_ptr<const Region> region) {
    switch (f.op()) {
        case Op::True:
        case Op::False: return f;
        case Op::Atom: {
            auto a = f.atom();
            if (a.kind == AtomKind::SecFirst || a.kind == AtomKind::NonsecSecond) a.region = region;
            return Formula::atom(a);
        }
        case Op::Not: return Formula::negation(bind_secret(f.child(0), region));
        case Op::Next: return Formula::next(bind_secret(f.child(0), region));
        case Op::Eventually: return Formula::eventually(bind_secret(f.child(0), region));
        case Op::Always: return Formula::always(bind_secret(f.child(0), region));
        case Op::Until: return Formula::until(bind_secret(f.child(0), region), bind_secret(f.child(1), region));
        case Op::Or:
        case Op::And: {
            Formula acc = bind_secret(f.child(0), region);
            for (std::size_t i = 1; i < f.children().size(); ++i) {
                Formula c = bind_secret(f.child(i), region);
                acc = f.op() == Op::Or ? Formula::disjunction(acc, c) : Formula::conjunction(acc, c);
            }
            return acc;
        }
    }
    return f;
}

namespace {
void gather(const Formula& f, std::map<std::string, AtomicPredicate>& out) {
    if (f.op() == Op::Atom) out.emplace(f.atom().key(), f.atom());
    for (const auto& c : f.children()) gather(c, out);
}
}  // namespace

std::vector<AtomicPredicate> collect_atoms(const Formula& f) {
    std::map<std::string, AtomicPredicate> found;
    gather(f, found);
    std::vector<AtomicPredicate> out;
    for (auto& [k, a] : found) out.push_back(a);
    return out;
}

std::string HyperFormula::to_string() const {
    return std::string(quantifier == Quantifier::Forall ? "forall" : "exists") + " s2. " + body.to_string();
}

}  // namespace obscert::ltlf
