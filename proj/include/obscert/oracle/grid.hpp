#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "obscert/poss/distribution.hpp"
#include "obscert/product/product.hpp"

namespace obscert::oracle {

enum class Mode { Inf, Sup };

const char* to_string(Mode m);

/// Discretization of the backward recursion: node grid over the domain (shared
/// by both state copies), quadrature for w1 and a finite candidate set for w2.
struct GridSpec {
    Box box;
    int resolution = 101;  // nodes per dimension
    poss::Quadrature quadrature;
    std::vector<State> candidates;

    /// Nodes over the model domain, quadrature and candidates from the disturbance.
    /// Table-backed models use one node per state and their exact disturbance atoms.
    static GridSpec for_structure(const product::VerificationStructure& vs, int resolution = 101,
                                  int quad_points = 9, int candidates_per_dim = 21);

    void validate(const product::VerificationStructure& vs) const;
    std::size_t dim() const { return box.dim(); }
    std::size_t num_nodes() const;
    State node(std::size_t i) const;
};

/// Multilinear interpolation weights for one point on a node grid.
struct Stencil {
    bool outside = false;
    std::vector<std::size_t> index;  // 2^d node indices
    std::vector<double> weight;
};

Stencil make_stencil(const Box& box, int resolution, const State& x);

/// Value layers on grid nodes for t = 0..T, row-major [t][q][i1][i2]. Layers
/// t < T hold g_t indexed by the automaton state after reading the current
/// label, layer T the accepting indicator; read values through table_value.
class ValueTable {
public:
    ValueTable() = default;
    ValueTable(Box box, int resolution, int num_q, int horizon, Mode mode);

    const Box& box() const { return box_; }
    std::size_t dim() const { return box_.dim(); }
    int resolution() const { return res_; }
    int num_q() const { return num_q_; }
    int horizon() const { return horizon_; }
    Mode mode() const { return mode_; }
    std::size_t num_nodes() const { return nodes_; }
    const std::vector<double>& values() const { return values_; }

    double& at(int t, int q, std::size_t i1, std::size_t i2) { return values_[offset(t, q, i1, i2)]; }
    double at(int t, int q, std::size_t i1, std::size_t i2) const { return values_[offset(t, q, i1, i2)]; }

    /// Multilinear interpolation; both points must lie in the box.
    double interpolate(int t, int q, const State& x1, const State& x2) const;
    double interpolate_stencil(int t, int q, const Stencil& s1, const Stencil& s2) const;

    State node(std::size_t i) const;

    /// Binary layout: magic "OBVT", u32 version, dim, resolution, |Q|, T, mode,
    /// box lo/hi as f64, then row-major f64 values.
    void save(const std::string& path) const;
    static ValueTable load(const std::string& path);

private:
    std::size_t offset(int t, int q, std::size_t i1, std::size_t i2) const {
        return ((static_cast<std::size_t>(t) * num_q_ + static_cast<std::size_t>(q)) * nodes_ + i1) * nodes_ + i2;
    }

    Box box_;
    int res_ = 0;
    int num_q_ = 0;
    int horizon_ = 0;
    Mode mode_ = Mode::Inf;
    std::size_t nodes_ = 0;
    std::vector<double> values_;
};

/// u_t(x1, x2, q): layer t at δ(q, L(x1, x2)) for t < T, the exact accepting indicator at T.
double table_value(const ValueTable& table, const product::VerificationStructure& vs, int t, int q, const State& x1,
                   const State& x2);
double node_value(const ValueTable& table, const product::VerificationStructure& vs, int t, int q, std::size_t i1,
                  std::size_t i2);

/// CSV (x1, x2, value) of u_t over the node grid at fixed q; one-dimensional states only.
void write_slice_csv(std::ostream& os, const ValueTable& table, const product::VerificationStructure& vs, int t, int q);

struct DpOptions {
    std::size_t memory_cap_bytes = std::size_t{2} << 30;
    int threads = 0;
};

/// Backward recursion: u_T = accepting indicator, u_t = inf (or sup) over w2
/// candidates of the w1 quadrature of u_{t+1}, clamped to [0, 1]. Successors
/// outside the domain take the structure's sink value.
ValueTable dp_backward(const product::VerificationStructure& vs, const GridSpec& grid, Mode mode,
                       const DpOptions& options = {});

/// First optimizing candidate at (v, t) against u_{t+1}.
State greedy_w2(const ValueTable& table, const product::VerificationStructure& vs, const GridSpec& grid,
                const product::ProductState& v, int t);

}  // namespace obscert::oracle
