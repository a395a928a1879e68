#pragma once

#include <vector>

#include "obscert/common.hpp"

namespace obscert::poss {

enum class DistKind { GaussianDiag, UniformBox, TruncatedGaussian, Discrete };

/// Weighted point set standing in for an expectation over the disturbance.
struct Quadrature {
    std::vector<State> nodes;
    std::vector<double> weights;  // sums to 1
};

/// Disturbance measure. Discrete distributions back the finite test systems.
class Distribution {
public:
    static Distribution gaussian_diag(State mean, State std);
    static Distribution uniform_box(Box box);
    static Distribution truncated_gaussian(State mean, State std, double sigmas);
    static Distribution discrete(std::vector<State> points, std::vector<double> probs);

    DistKind kind() const { return kind_; }
    std::size_t dim() const;
    const State& mean() const { return mean_; }
    const State& stddev() const { return std_; }
    double sigmas() const { return sigmas_; }
    const Box& box() const { return box_; }
    const std::vector<State>& points() const { return points_; }
    const std::vector<double>& probs() const { return probs_; }

    State sample(Rng& rng) const;

    /// Box used wherever a bounded support is needed. Untruncated Gaussians are
    /// cut at mean +- trunc_sigmas * std; truncated ones keep their own cut.
    Box support(double trunc_sigmas) const;

    /// Tensor Gauss-Legendre rule on the support, weighted by the density and
    /// renormalized. Discrete distributions return their atoms exactly.
    Quadrature quadrature(int per_dim, double trunc_sigmas) const;

    /// Uniform grid of adversary candidates over the support (atoms when discrete).
    std::vector<State> candidates(int per_dim, double trunc_sigmas) const;

private:
    DistKind kind_ = DistKind::GaussianDiag;
    State mean_, std_;
    double sigmas_ = 0.0;
    Box box_;
    std::vector<State> points_;
    std::vector<double> probs_;
};

}  // namespace obscert::poss
