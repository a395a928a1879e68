#include "obscert/hyperprops/estimate.hpp"

#include <algorithm>
#include <bit>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <optional>
#include <set>
#include <tuple>

namespace obscert::hyperprops {

double diam(const PointSet& set, bool* approximate) {
    const auto& p = set.points;
    if (p.empty()) throw Error("diam: empty set");
    if (approximate) *approximate = p.size() > 4096;
    if (p.size() > 4096) {
        State lo = p.front(), hi = p.front();
        for (const auto& x : p)
            for (std::size_t i = 0; i < x.size(); ++i) {
                lo[i] = std::min(lo[i], x[i]);
                hi[i] = std::max(hi[i], x[i]);
            }
        return distance(lo, hi);
    }
    double best = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) best = std::max(best, distance(p[i], p[j]));
    return best;
}

Observer::Observer(const poss::Poss& model, const EstimatorConfig& config) : model_(&model) {
    if (const auto* tab = model.tables()) {
        exact_ = true;
        n_ = tab->num_states;
        d_ = 1;
        for (int i = 0; i < n_; ++i) {
            centers_.push_back({static_cast<double>(i)});
            outputs_.push_back(tab->outputs[static_cast<std::size_t>(i)]);
            out_radius_.push_back(0.0);
            init_.push_back(model.initial().contains(centers_.back()));
            std::set<int> next;
            for (int j = 0; j < tab->num_disturbances; ++j)
                next.insert(tab->next[static_cast<std::size_t>(i * tab->num_disturbances + j)]);
            succ_.emplace_back(next.begin(), next.end());
        }
        return;
    }

    if (config.cells_per_dim < 1) throw Error("estimator: need at least one cell per dimension");
    n_ = config.cells_per_dim;
    d_ = static_cast<std::size_t>(model.state_dim());
    const Box& dom = model.domain();
    std::size_t total = 1;
    for (std::size_t k = 0; k < d_; ++k) {
        stride_.push_back(total);
        total *= static_cast<std::size_t>(n_);
        if (total > (std::size_t{1} << 24)) throw Error("estimator: grid too large, lower cells_per_dim");
        lo_.push_back(dom.lo[k]);
        pitch_.push_back((dom.hi[k] - dom.lo[k]) / n_);
    }

    const auto wgrid = model.disturbance().candidates(config.dist_points, config.trunc_sigmas);
    const Region& x0 = model.initial();
    centers_.resize(total);
    outputs_.resize(total);
    out_radius_.resize(total);
    img_lo_.resize(total * d_);
    img_hi_.resize(total * d_);
    img_empty_.assign(total, 0);
    init_.assign(total, 0);

    parallel_for(total, 0, [&](std::size_t c) {
        State clo(d_), chi(d_), ctr(d_);
        for (std::size_t k = 0; k < d_; ++k) {
            const auto i = static_cast<double>((c / stride_[k]) % static_cast<std::size_t>(n_));
            clo[k] = lo_[k] + i * pitch_[k];
            chi[k] = lo_[k] + (i + 1) * pitch_[k];
            ctr[k] = 0.5 * (clo[k] + chi[k]);
        }
        centers_[c] = ctr;
        outputs_[c] = model.output(ctr);

        std::vector<State> probes{ctr};
        for (std::size_t m = 0; m < (std::size_t{1} << d_); ++m) {
            State v(d_);
            for (std::size_t k = 0; k < d_; ++k) v[k] = (m >> k) & 1u ? chi[k] : clo[k];
            probes.push_back(std::move(v));
        }
        double r = 0.0;
        for (const auto& v : probes) r = std::max(r, distance(model.output(v), outputs_[c]));
        out_radius_[c] = r;

        State ilo(d_, INFINITY), ihi(d_, -INFINITY);
        for (const auto& v : probes)
            for (const auto& w : wgrid) {
                const State y = model.step(v, w);
                for (std::size_t k = 0; k < d_; ++k) {
                    ilo[k] = std::min(ilo[k], y[k]);
                    ihi[k] = std::max(ihi[k], y[k]);
                }
            }
        for (std::size_t k = 0; k < d_; ++k) {
            if (ihi[k] < dom.lo[k] || ilo[k] > dom.hi[k]) img_empty_[c] = 1;
            const auto a = static_cast<long>(std::floor((ilo[k] - lo_[k]) / pitch_[k]));
            const auto b = static_cast<long>(std::floor((ihi[k] - lo_[k]) / pitch_[k]));
            img_lo_[c * d_ + k] = static_cast<int>(std::clamp<long>(a, 0, n_ - 1));
            img_hi_[c * d_ + k] = static_cast<int>(std::clamp<long>(b, 0, n_ - 1));
        }

        bool in0 = false;
        for (const Box& b : x0.boxes) {
            bool overlap = true;
            for (std::size_t k = 0; k < d_ && overlap; ++k) {
                if (b.lo[k] == b.hi[k])
                    overlap = b.lo[k] >= clo[k] && b.lo[k] <= chi[k];
                else
                    overlap = b.lo[k] < chi[k] && b.hi[k] > clo[k];
            }
            in0 = in0 || overlap;
        }
        init_[c] = in0;
    });
}

std::size_t Observer::locate(const State& x) const {
    if (exact_) {
        const long i = std::lround(x[0]);
        return static_cast<std::size_t>(std::clamp<long>(i, 0, n_ - 1));
    }
    std::size_t c = 0;
    for (std::size_t k = 0; k < d_; ++k) {
        const auto i = static_cast<long>(std::floor((x[k] - lo_[k]) / pitch_[k]));
        c += static_cast<std::size_t>(std::clamp<long>(i, 0, n_ - 1)) * stride_[k];
    }
    return c;
}

Observer::Mask Observer::consistent(const State& y, double eps) const {
    Mask m(num_cells());
    for (std::size_t c = 0; c < m.size(); ++c) m[c] = distance(outputs_[c], y) <= eps + out_radius_[c];
    return m;
}

void Observer::prefix_sum(std::vector<std::int64_t>& a) const {
    for (std::size_t k = 0; k < d_; ++k) {
        const std::size_t s = stride_[k];
        for (std::size_t i = 0; i < a.size(); ++i)
            if ((i / s) % static_cast<std::size_t>(n_) != 0) a[i] += a[i - s];
    }
}

void Observer::mark_successors(const Mask& alive, Mask& reached) const {
    reached.assign(num_cells(), 0);
    if (exact_) {
        for (std::size_t c = 0; c < alive.size(); ++c)
            if (alive[c])
                for (int s : succ_[c]) reached[static_cast<std::size_t>(s)] = 1;
        return;
    }
    std::vector<std::int64_t> diff(num_cells(), 0);
    for (std::size_t c = 0; c < alive.size(); ++c) {
        if (!alive[c] || img_empty_[c]) continue;
        for (std::size_t m = 0; m < (std::size_t{1} << d_); ++m) {
            std::size_t idx = 0;
            bool inside = true;
            for (std::size_t k = 0; k < d_; ++k) {
                const int v = (m >> k) & 1u ? img_hi_[c * d_ + k] + 1 : img_lo_[c * d_ + k];
                if (v >= n_) inside = false;
                idx += static_cast<std::size_t>(v) * stride_[k];
            }
            if (inside) diff[idx] += (std::popcount(m) % 2) ? -1 : 1;
        }
    }
    prefix_sum(diff);
    for (std::size_t c = 0; c < diff.size(); ++c) reached[c] = diff[c] > 0;
}

void Observer::successor_counts(const Mask& alive, std::vector<std::int64_t>& sat) const {
    sat.assign(alive.begin(), alive.end());
    if (!exact_) prefix_sum(sat);
}

bool Observer::hits(std::size_t c, const std::vector<std::int64_t>& sat) const {
    if (exact_) {
        for (int s : succ_[c])
            if (sat[static_cast<std::size_t>(s)]) return true;
        return false;
    }
    if (img_empty_[c]) return false;
    std::int64_t total = 0;
    for (std::size_t m = 0; m < (std::size_t{1} << d_); ++m) {
        std::size_t idx = 0;
        bool inside = true;
        for (std::size_t k = 0; k < d_; ++k) {
            const int v = (m >> k) & 1u ? img_lo_[c * d_ + k] - 1 : img_hi_[c * d_ + k];
            if (v < 0) inside = false;
            idx += static_cast<std::size_t>(std::max(v, 0)) * stride_[k];
        }
        if (inside) total += (std::popcount(m) % 2) ? -sat[idx] : sat[idx];
    }
    return total > 0;
}

Observer::Estimates Observer::estimate(const std::vector<State>& outputs, double eps,
                                       const poss::Trajectory* truth) const {
    if (outputs.empty()) throw Error("estimate: empty output sequence");
    const std::size_t T = outputs.size() - 1;
    if (truth && truth->states.size() != outputs.size()) throw Error("estimate: trajectory length mismatch");
    std::vector<std::size_t> true_cell;
    if (truth)
        for (const auto& x : truth->states) true_cell.push_back(locate(x));

    std::vector<Mask> alive(T + 1);
    alive[0] = consistent(outputs[0], eps);
    for (std::size_t c = 0; c < alive[0].size(); ++c) alive[0][c] = alive[0][c] && init_[c];
    if (truth) alive[0][true_cell[0]] = 1;
    for (std::size_t t = 1; t <= T; ++t) {
        Mask reached;
        mark_successors(alive[t - 1], reached);
        alive[t] = consistent(outputs[t], eps);
        for (std::size_t c = 0; c < reached.size(); ++c) alive[t][c] = alive[t][c] && reached[c];
        if (truth) alive[t][true_cell[t]] = 1;
    }

    Mask back = alive[T];
    std::vector<std::int64_t> sat;
    for (std::size_t t = T; t-- > 0;) {
        successor_counts(back, sat);
        Mask prev(num_cells(), 0);
        for (std::size_t c = 0; c < prev.size(); ++c) {
            if (!alive[t][c]) continue;
            prev[c] = hits(c, sat) || (truth && c == true_cell[t] && back[true_cell[t + 1]]);
        }
        back = std::move(prev);
    }

    auto collect = [&](const Mask& m) {
        PointSet ps;
        ps.resolution = pitch();
        for (std::size_t c = 0; c < m.size(); ++c)
            if (m[c]) ps.points.push_back(centers_[c]);
        if (ps.points.empty())
            throw Error("state estimate is empty at this resolution; refine the grid or widen the truncation");
        return ps;
    };
    return {collect(back), collect(alive[T])};
}

bool Observer::check(const poss::Trajectory& s, const ltlf::HyperFormula& h, const ltlf::Dfa& dfa) const {
    const std::size_t Q = dfa.num_states();
    const auto& atoms = dfa.atoms();
    const std::size_t N = num_cells();
    const std::size_t T = s.states.size() - 1;

    std::vector<Mask> cur(Q, Mask(N, 0));
    cur[static_cast<std::size_t>(dfa.initial())] = init_;
    for (std::size_t t = 0; t < T; ++t) {
        const State& x = s.states[t];
        const State y = model_->output(x);
        std::vector<Mask> from(Q, Mask(N, 0));
        for (std::size_t q = 0; q < Q; ++q)
            for (std::size_t c = 0; c < N; ++c) {
                if (!cur[q][c]) continue;
                const int q2 = dfa.step(static_cast<int>(q), ltlf::label(atoms, x, y, centers_[c], outputs_[c]));
                from[static_cast<std::size_t>(q2)][c] = 1;
            }
        for (std::size_t q = 0; q < Q; ++q) mark_successors(from[q], cur[q]);
    }

    const State& x = s.states[T];
    const State y = model_->output(x);
    bool any = false, all = true;
    for (std::size_t q = 0; q < Q; ++q)
        for (std::size_t c = 0; c < N; ++c) {
            if (!cur[q][c]) continue;
            const bool acc =
                dfa.accepting(dfa.step(static_cast<int>(q), ltlf::label(atoms, x, y, centers_[c], outputs_[c])));
            any = any || acc;
            all = all && acc;
        }
    return h.quantifier == ltlf::Quantifier::Forall ? all : any;
}

PointSet state_estimate(const poss::Poss& model, const poss::Trajectory& s, double eps, Which which,
                        const EstimatorConfig& config) {
    const Observer obs(model, config);
    auto est = obs.estimate(poss::output_trace(model, s), eps, &s);
    return which == Which::Initial ? est.initial : est.current;
}

std::pair<double, double> clopper_pearson(std::size_t k, std::size_t n, double confidence) {
    if (n == 0) return {0.0, 1.0};
    const double a = 1.0 - confidence;
    const double kd = static_cast<double>(k), nd = static_cast<double>(n);
    const double lo = k == 0 ? 0.0 : boost::math::ibeta_inv(kd, nd - kd + 1, a / 2);
    const double hi = k == n ? 1.0 : boost::math::ibeta_inv(kd + 1, nd - kd, 1 - a / 2);
    return {lo, hi};
}

bool satisfies(const Observer& obs, const PropertySpec& spec, const poss::Trajectory& s, const ltlf::Dfa* dfa) {
    auto outside_secret = [&](const PointSet& ps) {
        return std::any_of(ps.points.begin(), ps.points.end(), [&](const State& x) { return !spec.secret->contains(x); });
    };
    if (spec.kind == PropertyKind::Custom) {
        if (!dfa) throw Error("satisfies: custom property needs its automaton");
        return obs.check(s, to_formula(spec), *dfa);
    }
    const auto est = obs.estimate(output_trace(obs.model(), s), spec.eps, &s);
    switch (spec.kind) {
        case PropertyKind::InitialDetect: return diam(est.initial) <= spec.lam;
        case PropertyKind::CurrentDetect: return diam(est.current) <= spec.lam;
        case PropertyKind::InitialOpacity: return outside_secret(est.initial);
        case PropertyKind::CurrentOpacity: return outside_secret(est.current);
        default: return false;
    }
}

ProbabilityReport empirical_probability(const Observer& obs, const poss::Poss& model, const PropertySpec& spec,
                                        const State& x0, std::size_t n, std::uint64_t seed, int threads) {
    if (n == 0) throw Error("empirical_probability: need at least one sample");
    spec.validate();
    std::optional<ltlf::Dfa> dfa;
    if (spec.kind == PropertyKind::Custom) dfa = ltlf::compile(to_formula(spec).body);
    std::vector<char> ok(n, 0);
    parallel_for(n, threads, [&](std::size_t i) {
        Rng rng(derive_seed(seed, i));
        const auto s = poss::sample_trajectory(model, x0, rng);
        try {
            ok[i] = satisfies(obs, spec, s, dfa ? &*dfa : nullptr);
        } catch (const Error& e) {
            throw Error("sample " + std::to_string(i) + ": " + e.what());
        }
    });
    ProbabilityReport r;
    r.n = n;
    r.seed = seed;
    r.successes = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
    r.estimate = static_cast<double>(r.successes) / static_cast<double>(n);
    std::tie(r.ci_low, r.ci_high) = clopper_pearson(r.successes, n);
    return r;
}

}  // namespace obscert::hyperprops
