#include "obscert/poss/distribution.hpp"

#include <algorithm>
#include <boost/math/special_functions/legendre.hpp>
#include <cmath>
#include <numeric>

namespace obscert::poss {

namespace {

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.clear();
    w.clear();
    if (n == 1) {
        x.push_back(0.0);
        w.push_back(2.0);
        return;
    }
    const auto zeros = boost::math::legendre_p_zeros<double>(n);  // nonnegative half
    std::vector<double> all;
    for (double z : zeros) {
        all.push_back(z);
        if (z != 0.0) all.push_back(-z);
    }
    std::sort(all.begin(), all.end());
    for (double z : all) {
        const double dp = boost::math::legendre_p_prime<double>(n, z);
        x.push_back(z);
        w.push_back(2.0 / ((1.0 - z * z) * dp * dp));
    }
}

template <class Fn>
void for_each_index(const std::vector<int>& sizes, Fn&& fn) {
    std::vector<int> idx(sizes.size(), 0);
    for (;;) {
        fn(idx);
        std::size_t d = 0;
        while (d < sizes.size() && ++idx[d] == sizes[d]) idx[d++] = 0;
        if (d == sizes.size()) return;
    }
}

}  // namespace

Distribution Distribution::gaussian_diag(State mean, State std) {
    if (mean.size() != std.size() || mean.empty()) throw Error("gaussian: mean/std dimension mismatch");
    for (double s : std)
        if (!(s > 0.0)) throw Error("gaussian: std must be positive");
    Distribution d;
    d.kind_ = DistKind::GaussianDiag;
    d.mean_ = std::move(mean);
    d.std_ = std::move(std);
    return d;
}

Distribution Distribution::uniform_box(Box box) {
    if (box.dim() == 0) throw Error("uniform: empty box");
    Distribution d;
    d.kind_ = DistKind::UniformBox;
    d.box_ = std::move(box);
    return d;
}

Distribution Distribution::truncated_gaussian(State mean, State std, double sigmas) {
    if (!(sigmas > 0.0)) throw Error("truncated gaussian: sigmas must be positive");
    Distribution d = gaussian_diag(std::move(mean), std::move(std));
    d.kind_ = DistKind::TruncatedGaussian;
    d.sigmas_ = sigmas;
    return d;
}

Distribution Distribution::discrete(std::vector<State> points, std::vector<double> probs) {
    if (points.empty() || points.size() != probs.size()) throw Error("discrete: points/probs mismatch");
    for (const auto& p : points)
        if (p.size() != points.front().size()) throw Error("discrete: inconsistent point dimension");
    double total = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw Error("discrete: negative probability");
        total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw Error("discrete: probabilities must sum to 1");
    Distribution d;
    d.kind_ = DistKind::Discrete;
    d.points_ = std::move(points);
    d.probs_ = std::move(probs);
    return d;
}

std::size_t Distribution::dim() const {
    switch (kind_) {
        case DistKind::UniformBox: return box_.dim();
        case DistKind::Discrete: return points_.front().size();
        default: return mean_.size();
    }
}

State Distribution::sample(Rng& rng) const {
    State w(dim());
    switch (kind_) {
        case DistKind::GaussianDiag:
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::normal_distribution<double>(mean_[i], std_[i])(rng);
            break;
        case DistKind::TruncatedGaussian:
            for (std::size_t i = 0; i < w.size(); ++i) {
                std::normal_distribution<double> n(0.0, 1.0);
                double z;
                do z = n(rng);
                while (std::fabs(z) > sigmas_);
                w[i] = mean_[i] + std_[i] * z;
            }
            break;
        case DistKind::UniformBox:
            for (std::size_t i = 0; i < w.size(); ++i)
                w[i] = std::uniform_real_distribution<double>(box_.lo[i], box_.hi[i])(rng);
            break;
        case DistKind::Discrete: {
            std::discrete_distribution<std::size_t> pick(probs_.begin(), probs_.end());
            w = points_[pick(rng)];
            break;
        }
    }
    return w;
}

Box Distribution::support(double trunc_sigmas) const {
    switch (kind_) {
        case DistKind::UniformBox: return box_;
        case DistKind::Discrete: {
            State lo = points_.front(), hi = points_.front();
            for (const auto& p : points_)
                for (std::size_t i = 0; i < p.size(); ++i) {
                    lo[i] = std::min(lo[i], p[i]);
                    hi[i] = std::max(hi[i], p[i]);
                }
            return Box(lo, hi);
        }
        default: {
            const double s = kind_ == DistKind::TruncatedGaussian ? sigmas_ : trunc_sigmas;
            State lo(dim()), hi(dim());
            for (std::size_t i = 0; i < dim(); ++i) {
                lo[i] = mean_[i] - s * std_[i];
                hi[i] = mean_[i] + s * std_[i];
            }
            return Box(lo, hi);
        }
    }
}

Quadrature Distribution::quadrature(int per_dim, double trunc_sigmas) const {
    if (kind_ == DistKind::Discrete) return {points_, probs_};
    if (per_dim < 1) throw Error("quadrature: need at least one node per dimension");
    const Box sup = support(trunc_sigmas);
    std::vector<double> gx, gw;
    gauss_legendre(per_dim, gx, gw);

    const std::size_t d = dim();
    std::vector<std::vector<double>> nodes(d), weights(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double c = 0.5 * (sup.lo[i] + sup.hi[i]);
        const double h = 0.5 * (sup.hi[i] - sup.lo[i]);
        double total = 0.0;
        for (std::size_t k = 0; k < gx.size(); ++k) {
            const double x = c + h * gx[k];
            double wt = gw[k];
            if (kind_ != DistKind::UniformBox) {
                const double z = (x - mean_[i]) / std_[i];
                wt *= std::exp(-0.5 * z * z);
            }
            nodes[i].push_back(x);
            weights[i].push_back(wt);
            total += wt;
        }
        for (double& wt : weights[i]) wt /= total;
    }

    Quadrature q;
    for_each_index(std::vector<int>(d, per_dim), [&](const std::vector<int>& idx) {
        State x(d);
        double wt = 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            x[i] = nodes[i][idx[i]];
            wt *= weights[i][idx[i]];
        }
        q.nodes.push_back(std::move(x));
        q.weights.push_back(wt);
    });
    return q;
}

std::vector<State> Distribution::candidates(int per_dim, double trunc_sigmas) const {
    if (kind_ == DistKind::Discrete) return points_;
    return box_grid(support(trunc_sigmas), per_dim);
}

}  // namespace obscert::poss
