#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "obscert/certify/certificate.hpp"

namespace obscert::certify {

struct CheckSettings {
    int per_dim = 50;          // grid points per state dimension, each copy
    int t_lo = 0;              // time range checked; t_hi < 0 means T
    int t_hi = -1;
    bool quadrature = true;    // w1 expectation by quadrature, else M-sample Monte Carlo
    int quad_points = 9;
    int candidates_per_dim = 21;
    int inner_samples = 30;    // M
    std::uint64_t seed = 0;
    double tol = 1e-6;
    int threads = 0;
};

struct Margin {
    std::size_t violations = 0;
    double worst = 0.0;  // signed, negative = violated
    std::size_t checked = 0;
};

struct CheckReport {
    Margin terminal;
    Margin recursion;
    std::size_t points_checked = 0;
    std::vector<double> worst_by_t;  // worst margin over both conditions, index t
    std::vector<int> violations_by_t;
    CheckSettings settings;
    std::string label;

    bool passed() const { return terminal.violations == 0 && recursion.violations == 0; }
};

/// Grid of state pairs: per_dim points per dimension over the model domain
/// (the single midpoint when per_dim = 1); table-backed models with per_dim
/// equal to their state count use the states themselves.
std::vector<State> check_points(const product::VerificationStructure& vs, int per_dim);

/// V(v, T) <= 1 on accepting points, <= 0 elsewhere.
Margin check_terminal(const Certificate& cert, const product::VerificationStructure& vs,
                      const CheckSettings& settings);

/// opt_{w2} E_{w1} V(v', t) >= V(v, t-1) / alpha + beta - tol for t in [max(1, t_lo), t_hi].
/// Per-t outputs are grown to T + 1 entries when shorter and merged into.
Margin check_recursion(const Certificate& cert, const product::VerificationStructure& vs,
                       const CheckSettings& settings, std::vector<double>* worst_by_t = nullptr,
                       std::vector<int>* violations_by_t = nullptr);

CheckReport validate_dense(const Certificate& cert, const product::VerificationStructure& vs,
                           const CheckSettings& settings);

void write_report_json(std::ostream& os, const CheckReport& r);
void write_margins_csv(std::ostream& os, const CheckReport& r);

struct BoundSettings {
    int x0_per_dim = 201;  // scan over X0 for the true initial state
    int x0b_per_dim = 201; // scan over X0 for the companion
    int threads = 0;
};

struct BoundReport {
    std::vector<State> x0;
    std::vector<double> bound;  // per scanned x0
    double overall = 0.0;       // min over scanned x0
    State worst_x0;
    double geometric = 0.0;     // sum_{i<T} alpha^{-i}
};

/// opt_{x0'} V((x0, x0', q0), 0) alpha^{-T} + sum_{i<T} alpha^{-i} beta, with
/// inf (UNIVERSAL) or sup (EXISTENTIAL) over the companion scan.
double bound_at(const Certificate& cert, const product::VerificationStructure& vs, const State& x0,
                const std::vector<State>& companions);

BoundReport bound(const Certificate& cert, const product::VerificationStructure& vs, const BoundSettings& s = {});

/// Scan points over the initial region (union of boxes).
std::vector<State> initial_scan(const product::VerificationStructure& vs, int per_dim);

}  // namespace obscert::certify
