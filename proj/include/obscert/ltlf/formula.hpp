#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "obscert/common.hpp"

namespace obscert::ltlf {

enum class AtomKind { OutClose, StateClose, SecFirst, NonsecSecond };

/// Two-trace atomic predicate over a state pair (x, x').
///
/// OutClose:     ||Ω(x) - Ω(x')|| <= threshold
/// StateClose:   ||x - x'|| <= threshold
/// SecFirst:     x in region
/// NonsecSecond: x' not in region
///
/// Identity (key, equality) ignores the region: a formula binds a single
/// secret region to all of its Sec/NS atoms.
struct AtomicPredicate {
    AtomKind kind = AtomKind::OutClose;
    double threshold = 0.0;
    std::shared_ptr<const Region> region;

    static AtomicPredicate out_close(double eps);
    static AtomicPredicate state_close(double lam);
    static AtomicPredicate sec_first(std::shared_ptr<const Region> region = nullptr);
    static AtomicPredicate nonsec_second(std::shared_ptr<const Region> region = nullptr);

    std::string key() const;
    std::string name() const;  // concrete syntax, e.g. "out_close(0.5)"

    bool holds(const State& x, const State& y, const State& x2, const State& y2) const;
};

enum class Op { True, False, Atom, Not, Or, And, Next, Until, Eventually, Always };

struct Node;

/// Immutable finite-trace LTL formula over two-trace atoms. Cheap to copy.
class Formula {
public:
    Formula();  // True

    static Formula top();
    static Formula bottom();
    static Formula atom(AtomicPredicate a);
    static Formula negation(Formula f);
    static Formula disjunction(Formula a, Formula b);
    static Formula conjunction(Formula a, Formula b);
    static Formula implication(Formula a, Formula b);
    static Formula next(Formula f);
    static Formula until(Formula a, Formula b);
    static Formula eventually(Formula f);
    static Formula always(Formula f);

    Op op() const;
    const AtomicPredicate& atom() const;
    const std::vector<Formula>& children() const;
    const Formula& child(std::size_t i) const { return children().at(i); }

    /// Canonical structural key; equal keys <=> equal trees.
    const std::string& key() const;
    std::string to_string() const;
    std::size_t depth() const;

    bool operator==(const Formula& other) const;
    bool operator!=(const Formula& other) const { return !(*this == other); }
    bool operator<(const Formula& other) const { return key() < other.key(); }

    /// Unchecked node constructor; Or/And may be n-ary.
    static Formula make(Op op, std::vector<Formula> children, const AtomicPredicate* atom = nullptr);

private:
    explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    std::shared_ptr<const Node> node_;

    friend Formula simplify_not(const Formula&);
    friend Formula simplify_or(std::vector<Formula>);
    friend Formula simplify_and(std::vector<Formula>);
};

struct Node {
    Op op;
    AtomicPredicate atom;
    std::vector<Formula> children;
    std::string key;
    std::size_t depth;
};

// Boolean simplifying constructors: flatten, drop units, absorb zeros,
// deduplicate, sort by key, and collapse complementary pairs.
Formula simplify_not(const Formula& f);
Formula simplify_or(std::vector<Formula> parts);
Formula simplify_and(std::vector<Formula> parts);

/// Rewrites And/False/Eventually/Always into the core {Atom, Not, Or, Next, Until, True}.
Formula normalize(const Formula& f);

/// Replaces the region of every Sec/NS atom.
Formula bind_secret(const Formula& f, std::shared_ptr<const Region> region);

/// All distinct atoms, sorted by key.
std::vector<AtomicPredicate> collect_atoms(const Formula& f);

enum class Quantifier { Forall, Exists };

struct HyperFormula {
    Quantifier quantifier = Quantifier::Forall;
    Formula body;

    std::string to_string() const;
    bool operator==(const HyperFormula& o) const { return quantifier == o.quantifier && body == o.body; }
};

/// Parses "forall s2. <body>" / "exists s2. <body>".
HyperFormula parse(const std::string& text);

/// Parses a quantifier-free body.
Formula parse_body(const std::string& text);

}  // namespace obscert::ltlf
