#include <doctest.h>

#include <memory>

#include "obscert/ltlf/dfa.hpp"
#include "support.hpp"

using namespace obscert;
using namespace obscert::ltlf;

namespace {

const AtomicPredicate kOut = AtomicPredicate::out_close(0.5);
const AtomicPredicate kState = AtomicPredicate::state_close(0.8);

Formula out() { return Formula::atom(kOut); }
Formula st() { return Formula::atom(kState); }

// Labels with Ω(x) = x^2 on scalar states.
Letter label_sq(const AtomTable& atoms, double x, double x2) {
    return label(atoms, {x}, {x * x}, {x2}, {x2 * x2});
}

}  // namespace

TEST_CASE("parse: current-state detectability formula") {
    const auto h = parse("forall s2. (G out_close(0.5)) -> F G state_close(0.8)");
    CHECK(h.quantifier == Quantifier::Forall);
    CHECK(h.body == Formula::implication(Formula::always(out()), Formula::eventually(Formula::always(st()))));
}

TEST_CASE("parse: trivial and nested next") {
    const auto h = parse("exists s2. true");
    CHECK(h.quantifier == Quantifier::Exists);
    CHECK(h.body == Formula::top());
    const auto n = parse("forall s2. X X sec1");
    CHECK(n.body == Formula::next(Formula::next(Formula::atom(AtomicPredicate::sec_first()))));
}

TEST_CASE("parse: precedence and associativity") {
    CHECK(parse_body("sec1 | nonsec2 & true") ==
          Formula::disjunction(Formula::atom(AtomicPredicate::sec_first()),
                               Formula::conjunction(Formula::atom(AtomicPredicate::nonsec_second()), Formula::top())));
    CHECK(parse_body("true -> false -> true") ==
          Formula::implication(Formula::top(), Formula::implication(Formula::bottom(), Formula::top())));
    CHECK(parse_body("!sec1 U nonsec2 U true") ==
          Formula::until(Formula::negation(Formula::atom(AtomicPredicate::sec_first())),
                         Formula::until(Formula::atom(AtomicPredicate::nonsec_second()), Formula::top())));
    CHECK(parse_body("G out_close(0.5) & X state_close(0.8)") ==
          Formula::conjunction(Formula::always(out()), Formula::next(st())));
}

TEST_CASE("parse: errors") {
    CHECK_THROWS_AS(parse("true"), ParseError);
    CHECK_THROWS_AS(parse("forall s2. exists s2. true"), ParseError);
    CHECK_THROWS_AS(parse("forall s1. true"), ParseError);
    CHECK_THROWS_AS(parse("forall s2. foo"), ParseError);
    CHECK_THROWS_AS(parse("forall s2. out_close(-1)"), ParseError);
    CHECK_THROWS_AS(parse("forall s2. (true"), ParseError);
    try {
        parse("forall s2. true & & false");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.position() == 18);
    }
}

TEST_CASE("printing round-trips through the parser") {
    std::mt19937_64 rng(7);
    const auto atoms = testsupport::sample_atoms();
    for (int i = 0; i < 500; ++i) {
        const Formula f = testsupport::random_formula(rng, 5, atoms);
        CHECK(parse_body(f.to_string()) == f);
        const HyperFormula h{i % 2 ? Quantifier::Exists : Quantifier::Forall, f};
        CHECK(parse(h.to_string()) == h);
    }
}

TEST_CASE("label on the squared-output case") {
    const AtomTable one({kOut});
    CHECK(label_sq(one, 0.0, 0.0) == 1u);
    const AtomTable both({kOut, kState});
    const Letter l = label_sq(both, 1.0, -1.0);
    CHECK(both.has(kOut, l));
    CHECK_FALSE(both.has(kState, l));

    auto secret = std::make_shared<Region>(std::vector<Box>{Box({-1.0}, {1.0})});
    const AtomTable sec({AtomicPredicate::sec_first(secret), AtomicPredicate::nonsec_second(secret)});
    const Letter ls = label(sec, {0.5}, {0.25}, {0.0}, {0.0});
    CHECK(sec.has(AtomicPredicate::sec_first(), ls));
    CHECK_FALSE(sec.has(AtomicPredicate::nonsec_second(), ls));

    CHECK_THROWS_AS(label(both, {1.0}, {1.0}, {1.0, 2.0}, {1.0}), Error);
}

TEST_CASE("evaluate: examples") {
    const AtomTable atoms({kOut});
    const Word w{label_sq(atoms, 1, -1), label_sq(atoms, 1, -1)};
    CHECK(evaluate(Formula::always(out()), w, atoms));
    CHECK_FALSE(evaluate(Formula::next(Formula::top()), Word{0}, atoms));
    CHECK(evaluate(Formula::next(Formula::top()), Word{0, 0}, atoms));
    CHECK_THROWS_AS(evaluate(Formula::top(), Word{}, atoms), Error);

    const std::vector<std::pair<State, State>> trace{{{1.0}, {-1.0}}, {{0.9}, {-0.9}}};
    auto labeler = [&](const State& x, const State& x2) { return label_sq(atoms, x[0], x2[0]); };
    CHECK(evaluate(Formula::always(out()), trace, labeler, atoms));
}

TEST_CASE("evaluate: current detectability reduces to a terminal condition") {
    const Formula body = parse("forall s2. G out_close(0.5) -> F G state_close(0.8)").body;
    const AtomTable atoms = AtomTable::of(body);
    const Letter o = Letter{1} << atoms.index_of(kOut);
    const Letter s = Letter{1} << atoms.index_of(kState);
    testsupport::for_each_word(4, atoms.letter_count(), [&](const Word& w) {
        bool all_out = true;
        for (Letter l : w) all_out = all_out && (l & o);
        const bool expected = !all_out || (w.back() & s);
        CHECK(evaluate(body, w, atoms) == expected);
    });
}

TEST_CASE("evaluate agrees with the top-down checker and derived identities") {
    std::mt19937_64 rng(11);
    const auto atoms_v = testsupport::sample_atoms();
    const AtomTable atoms(atoms_v);
    for (int i = 0; i < 1000; ++i) {
        const Formula f = testsupport::random_formula(rng, 5, atoms_v);
        const Word w = testsupport::random_word(rng, 1 + i % 8, atoms);
        CHECK(evaluate(f, w, atoms) == testsupport::sat(f, w, 0, atoms));
        CHECK(evaluate(normalize(f), w, atoms) == evaluate(f, w, atoms));
        CHECK(evaluate(Formula::eventually(f), w, atoms) == evaluate(Formula::until(Formula::top(), f), w, atoms));
        CHECK(evaluate(Formula::always(f), w, atoms) ==
              evaluate(Formula::negation(Formula::eventually(Formula::negation(f))), w, atoms));
    }
}

TEST_CASE("progress: examples") {
    const AtomTable atoms({kOut, kState});
    const Letter a = Letter{1} << atoms.index_of(kOut);
    CHECK(progress(out(), a, atoms) == Formula::top());
    const Formula u = Formula::until(out(), st());
    CHECK(progress(u, a, atoms) == u);
    const Formula g = Formula::always(out());
    CHECK(progress(g, a, atoms) == g);
    CHECK(progress(Formula::next(st()), 0, atoms) == st());
}

TEST_CASE("progress is sound on random formulas") {
    std::mt19937_64 rng(13);
    const auto atoms_v = testsupport::sample_atoms();
    const AtomTable atoms(atoms_v);
    for (int i = 0; i < 1000; ++i) {
        const Formula f = testsupport::random_formula(rng, 5, atoms_v);
        const Word w = testsupport::random_word(rng, 2 + i % 7, atoms);
        const Word rest(w.begin() + 1, w.end());
        CHECK(evaluate(f, w, atoms) == evaluate(progress(f, w[0], atoms), rest, atoms));
    }
}

TEST_CASE("compile: true is a single accepting state") {
    const Dfa d = compile(Formula::top());
    CHECK(d.num_states() == 1);
    CHECK(d.accepting(0));
    CHECK(d.accept_trapped(0));
}

TEST_CASE("compile: current detectability") {
    const Formula body = parse("forall s2. G out_close(0.5) -> F G state_close(0.8)").body;
    const Dfa d = compile(body);
    CHECK(d.num_letters() == 4);
    CHECK(d.num_states() <= 8);
    const Dfa raw = compile(body, {.max_states = 4096, .minimize = false});
    CHECK(raw.num_states() >= d.num_states());
    testsupport::for_each_word(5, 4, [&](const Word& w) {
        CHECK(d.accepts(w) == evaluate(body, w, d.atoms()));
        CHECK(raw.accepts(w) == d.accepts(w));
    });
    CHECK(d.dump().find("accepting:") != std::string::npos);
}

TEST_CASE("compile: until matches evaluate on all words of length 4") {
    const Formula u = Formula::until(out(), st());
    const Dfa d = compile(u);
    testsupport::for_each_word(4, 4, [&](const Word& w) { CHECK(d.accepts(w) == evaluate(u, w, d.atoms())); });
}

TEST_CASE("compile: random formulas against exhaustive and sampled words") {
    std::mt19937_64 rng(17);
    const auto atoms_v = testsupport::sample_atoms();
    for (int i = 0; i < 200; ++i) {
        const Formula f = testsupport::random_formula(rng, 1 + i % 5, atoms_v);
        const Dfa d = compile(f);
        for (std::size_t q = 0; q < d.num_states(); ++q)
            for (Letter l = 0; l < d.num_letters(); ++l) {
                const int next = d.step(static_cast<int>(q), l);
                CHECK((next >= 0 && static_cast<std::size_t>(next) < d.num_states()));
            }
        std::size_t len = 1;
        std::size_t words = d.num_letters();
        while (len < 8 && words * d.num_letters() <= (1u << 12)) {
            ++len;
            words *= d.num_letters();
        }
        for (std::size_t n = 1; n <= len; ++n)
            testsupport::for_each_word(n, d.num_letters(), [&](const Word& w) {
                REQUIRE(d.accepts(w) == evaluate(f, w, d.atoms()));
            });
        for (int k = 0; k < 20; ++k) {
            const Word w = testsupport::random_word(rng, 1 + k % 8, d.atoms());
            CHECK(d.accepts(w) == testsupport::sat(f, w, 0, d.atoms()));
        }
    }
}

TEST_CASE("compile: trapped states") {
    const Dfa d = compile(Formula::eventually(out()));
    const Letter a = 1;
    const int q = d.step(d.initial(), a);
    CHECK(d.accepting(q));
    CHECK(d.accept_trapped(q));
    const Dfa g = compile(Formula::always(out()));
    const int r = g.step(g.initial(), 0);
    CHECK_FALSE(g.accepting(r));
    CHECK(g.reject_trapped(r));
}

TEST_CASE("compile: state cap") {
    Formula f = Formula::top();
    std::vector<AtomicPredicate> atoms;
    for (int i = 0; i < 6; ++i) atoms.push_back(AtomicPredicate::out_close(0.1 * (i + 1)));
    for (int i = 0; i < 6; ++i) f = Formula::conjunction(f, Formula::eventually(Formula::atom(atoms[i])));
    CHECK_THROWS_AS(compile(f, {.max_states = 8, .minimize = true}), Error);
}
