#pragma once

#include <vector>

#include "obscert/oracle/grid.hpp"

namespace obscert::oracle {

/// Desk-scale system with finitely many states and disturbances. States are
/// the integers 0..n-1 and embed exactly on a unit-pitch node grid.
struct FiniteInstance {
    int num_states = 0;
    int num_disturbances = 0;
    std::vector<int> next;          // next[x * m + w]
    std::vector<double> probs;      // per disturbance, sums to 1
    std::vector<int> initial;       // X0
    std::vector<State> outputs;     // Ω(x)
    int horizon = 1;

    void validate() const;
    poss::Poss to_poss() const;
    int step(int x, int w) const { return next[static_cast<std::size_t>(x * num_disturbances + w)]; }
};

/// Exact backward recursion over (x1, x2, q), no interpolation.
class ExactValues {
public:
    ExactValues(int num_states, int num_q, int horizon, Mode mode);
    double& at(int t, int q, int x1, int x2) { return values_[offset(t, q, x1, x2)]; }
    double at(int t, int q, int x1, int x2) const { return values_[offset(t, q, x1, x2)]; }
    int num_states() const { return n_; }
    int num_q() const { return nq_; }
    int horizon() const { return T_; }
    Mode mode() const { return mode_; }

private:
    std::size_t offset(int t, int q, int x1, int x2) const {
        return ((static_cast<std::size_t>(t) * nq_ + q) * n_ + x1) * n_ + x2;
    }
    int n_, nq_, T_;
    Mode mode_;
    std::vector<double> values_;
};

/// `vs` must be built over inst.to_poss().
ExactValues exact_values(const FiniteInstance& inst, const product::VerificationStructure& vs, Mode mode);

struct PolicyGapRow {
    int x0 = 0;
    double lhs = 0.0;  // inf/sup over policies, from the exact recursion
    double rhs = 0.0;  // P_x0(s |= φ), by enumeration
    bool holds = false;
    bool gap = false;  // lhs < rhs strictly
};

struct PolicyGapReport {
    ltlf::Quantifier quantifier = ltlf::Quantifier::Forall;
    std::vector<PolicyGapRow> rows;
    bool holds = true;
    bool any_gap = false;
    double worst_excess = 0.0;  // max(lhs - rhs)
};

/// Compares the policy-game value with the per-trajectory satisfaction
/// probability at every initial state (lhs <= rhs + tol is the check).
PolicyGapReport policy_gap_check(const FiniteInstance& inst, const ltlf::HyperFormula& formula, double tol = 1e-12,
                              std::size_t max_paths = 2000000);

}  // namespace obscert::oracle
