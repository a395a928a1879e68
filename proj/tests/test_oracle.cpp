#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>

#include "obscert/hyperprops/property.hpp"
#include "obscert/oracle/finite.hpp"
#include "toy.hpp"

using namespace obscert;
using namespace obscert::oracle;
using product::VerificationStructure;

namespace {

const char* kBodies[] = {"G out_close(0.5) -> F G state_close(1.5)", "G out_close(0.5) & F state_close(0)",
                         "out_close(0) U !state_close(1)", "X X state_close(0) | G !out_close(0.5)"};

// Game value over full histories; acceptance by direct evaluation of the whole word.
double game_value(const FiniteInstance& inst, const VerificationStructure& vs, Mode mode, std::vector<int>& a,
                  std::vector<int>& b) {
    if (static_cast<int>(a.size()) == inst.horizon + 1) {
        ltlf::Word w;
        for (std::size_t i = 0; i < a.size(); ++i) w.push_back(vs.label({double(a[i])}, {double(b[i])}));
        return ltlf::evaluate(vs.formula().body, w, vs.atoms()) ? 1.0 : 0.0;
    }
    double best = mode == Mode::Inf ? 2.0 : -1.0;
    for (int j2 = 0; j2 < inst.num_disturbances; ++j2) {
        double e = 0;
        for (int j1 = 0; j1 < inst.num_disturbances; ++j1) {
            a.push_back(inst.step(a.back(), j1));
            b.push_back(inst.step(b.back(), j2));
            e += inst.probs[j1] * game_value(inst, vs, mode, a, b);
            a.pop_back();
            b.pop_back();
        }
        best = mode == Mode::Inf ? std::min(best, e) : std::max(best, e);
    }
    return best;
}

}  // namespace

TEST_CASE("dp: certain and impossible targets") {
    const auto m = poss::Poss::case_study().with_horizon(3);
    for (const char* body : {"true", "false"}) {
        const VerificationStructure vs(m, ltlf::parse(std::string("forall s2. ") + body));
        const auto g = GridSpec::for_structure(vs, 21, 5, 5);
        const auto tab = dp_backward(vs, g, Mode::Inf);
        const double expected = std::string(body) == "true" ? 1.0 : 0.0;
        for (double v : tab.values()) REQUIRE(v == expected);
    }
}

TEST_CASE("dp on embedded finite systems equals the exact recursion and the game tree") {
    std::mt19937_64 rng(31);
    for (int inst_i = 0; inst_i < 30; ++inst_i) {
        const auto toy = inst_i == 0 ? testsupport::three_state_toy() : testsupport::random_toy(rng);
        const FiniteInstance inst = testsupport::to_instance(toy);
        const poss::Poss model = inst.to_poss();
        for (const char* body : kBodies) {
            const VerificationStructure vs(model, ltlf::parse(std::string("forall s2. ") + body));
            const auto g = GridSpec::for_structure(vs);
            for (Mode mode : {Mode::Inf, Mode::Sup}) {
                const auto tab = dp_backward(vs, g, mode);
                const auto ex = exact_values(inst, vs, mode);
                for (int t = 0; t <= inst.horizon; ++t)
                    for (int q = 0; q < ex.num_q(); ++q)
                        for (int a = 0; a < inst.num_states; ++a)
                            for (int b = 0; b < inst.num_states; ++b)
                                REQUIRE(std::fabs(node_value(tab, vs, t, q, a, b) - ex.at(t, q, a, b)) <= 1e-12);
                for (int a = 0; a < inst.num_states; ++a)
                    for (int b = 0; b < inst.num_states; ++b) {
                        std::vector<int> ha{a}, hb{b};
                        CHECK(ex.at(0, vs.dfa().initial(), a, b) ==
                              doctest::Approx(game_value(inst, vs, mode, ha, hb)).epsilon(1e-12));
                    }
            }
            const auto lo = exact_values(inst, vs, Mode::Inf);
            const auto hi = exact_values(inst, vs, Mode::Sup);
            for (int q = 0; q < lo.num_q(); ++q)
                for (int a = 0; a < inst.num_states; ++a)
                    for (int b = 0; b < inst.num_states; ++b) CHECK(lo.at(0, q, a, b) <= hi.at(0, q, a, b) + 1e-15);
        }
    }
}

TEST_CASE("exact values: deterministic systems reduce to reachability") {
    // single disturbance: 0 -> 1 -> 2 -> 2, outputs 0, 1, 1
    const auto toy = testsupport::make_toy(3, 1, {1, 2, 2}, {0, 1, 1}, {1.0}, {0, 1, 2}, 2);
    const FiniteInstance inst = testsupport::to_instance(toy);
    const VerificationStructure vs(inst.to_poss(), ltlf::parse("forall s2. F G state_close(0)"));
    const auto u = exact_values(inst, vs, Mode::Inf);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            const double v = u.at(0, vs.dfa().initial(), a, b);
            CHECK((v == 0.0 || v == 1.0));
            // after two steps both copies sit in state 2 unless they started apart from 2 differently
            int x = a, y = b;
            for (int k = 0; k < 2; ++k) {
                x = inst.step(x, 0);
                y = inst.step(y, 0);
            }
            CHECK(v == (x == y ? 1.0 : 0.0));
        }
}

TEST_CASE("enlarging the target never lowers values") {
    std::mt19937_64 rng(33);
    for (int i = 0; i < 20; ++i) {
        const FiniteInstance inst = testsupport::to_instance(testsupport::random_toy(rng));
        const poss::Poss model = inst.to_poss();
        const VerificationStructure small(model, ltlf::parse("forall s2. G out_close(0.5)"));
        const VerificationStructure big(model, ltlf::parse("forall s2. G out_close(0.5) | F state_close(0)"));
        const auto us = exact_values(inst, small, Mode::Inf);
        const auto ub = exact_values(inst, big, Mode::Inf);
        for (int a = 0; a < inst.num_states; ++a)
            for (int b = 0; b < inst.num_states; ++b)
                CHECK(ub.at(0, big.dfa().initial(), a, b) >= us.at(0, small.dfa().initial(), a, b) - 1e-15);
    }
}

TEST_CASE("monte carlo under the greedy policy matches the exact value") {
    const auto toy = testsupport::three_state_toy();
    const FiniteInstance inst = testsupport::to_instance(toy);
    const poss::Poss model = inst.to_poss();
    const VerificationStructure vs(model, ltlf::parse("forall s2. G out_close(0.5) -> F G state_close(0)"));
    const auto g = GridSpec::for_structure(vs);
    const auto tab = dp_backward(vs, g, Mode::Inf);
    product::EnvironmentPolicy pol;
    pol.init_choice = {1.0};
    pol.rule = [&](const product::ProductState& v, int t) { return greedy_w2(tab, vs, g, v, t); };
    const int n = 200000;
    int hits = 0;
    Rng rng(17);
    for (int i = 0; i < n; ++i) hits += product::rollout(vs, {0.0}, pol, rng).accepted;
    const double p = node_value(tab, vs, 0, vs.dfa().initial(), 0, 1);
    const double sd = std::sqrt(p * (1 - p) / n);
    CHECK(std::fabs(hits / double(n) - p) <= 4 * sd + 1e-12);
}

TEST_CASE("value table io and slices") {
    const auto m = poss::Poss::case_study().with_horizon(2);
    const VerificationStructure vs(m, hyperprops::to_formula(hyperprops::PropertySpec::current_detect(0.5, 0.8, 0.9)));
    const auto g = GridSpec::for_structure(vs, 11, 5, 5);
    const auto tab = dp_backward(vs, g, Mode::Inf);
    const auto path = (std::filesystem::temp_directory_path() / "obscert_table_test.bin").string();
    tab.save(path);
    const auto back = ValueTable::load(path);
    std::filesystem::remove(path);
    CHECK(back.values() == tab.values());
    CHECK(back.mode() == Mode::Inf);
    CHECK(back.resolution() == 11);
    std::ostringstream os;
    write_slice_csv(os, tab, vs, 0, 0);
    const std::string csv = os.str();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 121);
    CHECK(tab.interpolate(1, 0, tab.node(3), tab.node(7)) == doctest::Approx(tab.at(1, 0, 3, 7)).epsilon(1e-12));
    for (int q = 0; q < tab.num_q(); ++q)
        CHECK(table_value(tab, vs, 1, q, tab.node(3), tab.node(7)) == doctest::Approx(node_value(tab, vs, 1, q, 3, 7)));
    for (double v : tab.values()) CHECK((v >= 0.0 && v <= 1.0));
    CHECK_THROWS_AS(dp_backward(vs, g, Mode::Inf, {.memory_cap_bytes = 1000, .threads = 1}), Error);
}

TEST_CASE("dp is independent of the thread count") {
    const auto m = poss::Poss::case_study().with_horizon(3);
    const VerificationStructure vs(m, hyperprops::to_formula(hyperprops::PropertySpec::current_detect(0.5, 0.8, 0.9)));
    const auto g = GridSpec::for_structure(vs, 31, 5, 7);
    CHECK(dp_backward(vs, g, Mode::Inf, {.threads = 1}).values() == dp_backward(vs, g, Mode::Inf, {.threads = 3}).values());
}

TEST_CASE("policy game value vs trajectory probability") {
    const auto toy = testsupport::three_state_toy();
    const FiniteInstance inst = testsupport::to_instance(toy);
    const auto trivial = policy_gap_check(inst, ltlf::parse("forall s2. true"));
    for (const auto& r : trivial.rows) {
        CHECK(r.lhs == 1.0);
        CHECK(r.rhs == 1.0);
    }
    CHECK(trivial.holds);

    std::mt19937_64 rng(35);
    bool found_gap = false;
    for (int i = 0; i < 200 && !found_gap; ++i) {
        const FiniteInstance r = testsupport::to_instance(testsupport::random_toy(rng));
        const auto rep = policy_gap_check(r, ltlf::parse("exists s2. G out_close(0.5) & F G !state_close(0)"));
        CHECK(rep.holds);
        found_gap = rep.any_gap;
    }
    CHECK(found_gap);
}
