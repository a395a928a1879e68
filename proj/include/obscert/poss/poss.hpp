#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "obscert/common.hpp"
#include "obscert/poss/distribution.hpp"
#include "obscert/poss/expression.hpp"

namespace obscert::poss {

/// Tabulated dynamics for finite systems. States are the integers 0..n-1 on a
/// line and disturbances the integers 0..m-1.
struct FiniteTables {
    int num_states = 0;
    int num_disturbances = 0;
    std::vector<int> next;         // next[x * m + w]
    std::vector<State> outputs;    // Ω(x)
};

/// Partially observable stochastic system x' = f(x, w), y = Ω(x) over a finite horizon.
class Poss {
public:
    Poss() = default;

    /// Expression-backed model. Dynamics use variables x1..xd, w1..wm; output uses x1..xd.
    Poss(int state_dim, int disturbance_dim, Box domain, Region initial, std::vector<std::string> dynamics,
         std::vector<std::string> output, Distribution disturbance, int horizon);

    /// Table-backed finite model with disturbance probabilities.
    static Poss finite(std::shared_ptr<const FiniteTables> tables, std::vector<double> probs, Region initial,
                       int horizon);

    /// f = 0.9 x + w, w ~ N(0, 0.4^2), Ω(x) = x^2, X0 = [-2, 2], T = 10 on [-4, 4].
    static Poss case_study();

    int state_dim() const { return dx_; }
    int output_dim() const { return dy_; }
    int disturbance_dim() const { return dw_; }
    int horizon() const { return horizon_; }
    const Box& domain() const { return domain_; }
    const Region& initial() const { return initial_; }
    const Distribution& disturbance() const { return dist_; }
    const FiniteTables* tables() const { return tables_.get(); }

    Poss with_horizon(int horizon) const;

    /// Throws NumericError on division by zero or a non-finite result.
    State step(const State& x, const State& w) const;
    void step_into(const double* x, const double* w, double* out) const;
    State output(const State& x) const;
    void output_into(const double* x, double* out) const;

private:
    void check_dims() const;

    int dx_ = 0, dy_ = 0, dw_ = 0;
    Box domain_;
    Region initial_;
    VectorMap dynamics_, output_;
    Distribution dist_ = Distribution::gaussian_diag({0.0}, {1.0});
    int horizon_ = 1;
    std::shared_ptr<const FiniteTables> tables_;
};

struct Trajectory {
    std::vector<State> states;        // T + 1 entries
    std::vector<State> disturbances;  // T entries, or empty if unrecorded
};

State sample_disturbance(const Distribution& dist, Rng& rng);
Trajectory sample_trajectory(const Poss& model, const State& x0, Rng& rng);

/// Re-applies the recorded disturbances from states[0].
Trajectory replay(const Poss& model, const State& x0, const std::vector<State>& disturbances);

std::vector<State> output_trace(const Poss& model, const Trajectory& traj);

/// CSV with columns t, x1..xd, w1..wm, y1..yk; the last row has empty w columns.
void write_trajectory_csv(std::ostream& os, const Poss& model, const Trajectory& traj);

}  // namespace obscert::poss
