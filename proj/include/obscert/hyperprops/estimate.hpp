#pragma once

#include <cstdint>
#include <vector>

#include "obscert/hyperprops/property.hpp"
#include "obscert/ltlf/dfa.hpp"

namespace obscert::hyperprops {

/// Finite set of states with the grid pitch that produced it (0 when exact).
struct PointSet {
    std::vector<State> points;
    double resolution = 0.0;
};

/// Max pairwise distance. Exact up to 4096 points, otherwise the bounding-box
/// diagonal (an upper bound); `approximate` reports which one was used.
double diam(const PointSet& set, bool* approximate = nullptr);

enum class Which { Initial, Current };

struct EstimatorConfig {
    int cells_per_dim = 201;
    double trunc_sigmas = 3.0;
    int dist_points = 9;
};

/// Grid-filter state estimator. Continuous models are covered by a uniform
/// cell grid over the domain: a cell is consistent with an output when the
/// output at its center is within eps plus the output variation over the
/// cell, and a cell's successors are the cells hit by the image of its
/// corners under the truncated disturbance grid. Table-backed models use
/// their states and successor lists exactly.
class Observer {
public:
    explicit Observer(const poss::Poss& model, const EstimatorConfig& config = {});

    struct Estimates {
        PointSet initial;
        PointSet current;
    };

    /// Estimates from an output sequence of length T+1. When `truth` is given
    /// its cells are always kept and linked, so the estimates are never empty.
    Estimates estimate(const std::vector<State>& outputs, double eps, const poss::Trajectory* truth = nullptr) const;

    /// Decides s |= h by tracking (cell, DFA state) pairs over all grid-reachable s'.
    bool check(const poss::Trajectory& s, const ltlf::HyperFormula& h, const ltlf::Dfa& dfa) const;

    const poss::Poss& model() const { return *model_; }
    bool exact() const { return exact_; }
    std::size_t num_cells() const { return centers_.size(); }
    const State& center(std::size_t c) const { return centers_[c]; }
    std::size_t locate(const State& x) const;
    double pitch() const { return exact_ ? 0.0 : pitch_.front(); }

private:
    using Mask = std::vector<char>;

    Mask consistent(const State& y, double eps) const;
    void mark_successors(const Mask& alive, Mask& reached) const;
    void successor_counts(const Mask& alive, std::vector<std::int64_t>& sat) const;
    bool hits(std::size_t c, const std::vector<std::int64_t>& sat) const;
    void prefix_sum(std::vector<std::int64_t>& a) const;

    const poss::Poss* model_;
    bool exact_ = false;
    int n_ = 0;
    std::size_t d_ = 0;
    std::vector<std::size_t> stride_;
    State lo_, pitch_;
    std::vector<State> centers_, outputs_;
    std::vector<double> out_radius_;
    std::vector<int> img_lo_, img_hi_;  // per cell and dimension
    Mask img_empty_, init_;
    std::vector<std::vector<int>> succ_;  // exact mode
};

/// One-shot estimate for a trajectory (builds an Observer).
PointSet state_estimate(const poss::Poss& model, const poss::Trajectory& s, double eps, Which which,
                        const EstimatorConfig& config = {});

struct ProbabilityReport {
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    std::size_t n = 0;
    std::size_t successes = 0;
    std::uint64_t seed = 0;
};

/// Two-sided Clopper-Pearson interval at the given confidence.
std::pair<double, double> clopper_pearson(std::size_t k, std::size_t n, double confidence = 0.95);

/// Decides whether the sampled trajectory satisfies the property's formula.
bool satisfies(const Observer& obs, const PropertySpec& spec, const poss::Trajectory& s, const ltlf::Dfa* dfa);

/// Fraction of n sampled trajectories from x0 that satisfy the property.
/// Sample i uses the stream derive_seed(seed, i).
ProbabilityReport empirical_probability(const Observer& obs, const poss::Poss& model, const PropertySpec& spec,
                                        const State& x0, std::size_t n, std::uint64_t seed, int threads = 0);

}  // namespace obscert::hyperprops
