#include "obscert/certify/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

namespace obscert::certify {

using product::ProductState;
using product::VerificationStructure;

namespace {

int resolve_t_hi(const CheckSettings& s, int horizon) { return s.t_hi < 0 ? horizon : std::min(s.t_hi, horizon); }

struct PointMargins {
    double worst = std::numeric_limits<double>::infinity();
    std::size_t violations = 0;
    std::size_t checked = 0;
};

void merge(Margin& m, const PointMargins& p, bool& any) {
    m.violations += p.violations;
    m.checked += p.checked;
    if (p.checked == 0) return;
    m.worst = any ? std::min(m.worst, p.worst) : p.worst;
    any = true;
}

}  // namespace

std::vector<State> check_points(const VerificationStructure& vs, int per_dim) {
    if (per_dim < 1) throw Error("check: per_dim must be positive");
    const auto& m = vs.model();
    if (m.tables() && per_dim == m.tables()->num_states) {
        std::vector<State> pts;
        for (int i = 0; i < per_dim; ++i) pts.push_back({static_cast<double>(i)});
        return pts;
    }
    return box_grid(m.domain(), per_dim);
}

Margin check_terminal(const Certificate& cert, const VerificationStructure& vs, const CheckSettings& s) {
    check_compatible(cert, vs);
    const auto pts = check_points(vs, s.per_dim);
    const std::size_t n = pts.size();
    const int T = vs.horizon();
    const int nq = static_cast<int>(vs.dfa().num_states());
    std::vector<PointMargins> out(n);
    parallel_for(n, s.threads, [&](std::size_t i) {
        std::vector<ProductState> batch;
        for (std::size_t j = 0; j < n; ++j)
            for (int q = 0; q < nq; ++q) batch.push_back({pts[i], pts[j], q, false});
        const auto vals = eval_certificate_batch(cert, vs, batch, T);
        PointMargins pm;
        for (std::size_t k = 0; k < batch.size(); ++k) {
            const double ind = vs.accepting(batch[k]) ? 1.0 : 0.0;
            const double margin = ind - vals[k];
            pm.worst = std::min(pm.worst, margin);
            pm.violations += margin < -s.tol;
            ++pm.checked;
        }
        out[i] = pm;
    });
    Margin m;
    bool any = false;
    for (const auto& pm : out) merge(m, pm, any);
    return m;
}

Margin check_recursion(const Certificate& cert, const VerificationStructure& vs, const CheckSettings& s,
                       std::vector<double>* worst_by_t, std::vector<int>* violations_by_t) {
    check_compatible(cert, vs);
    if (s.inner_samples < 1) throw Error("check: inner sample count must be positive");
    const auto& model = vs.model();
    const int T = vs.horizon();
    const int t_lo = std::max(1, s.t_lo);
    const int t_hi = resolve_t_hi(s, T);
    const int nq = static_cast<int>(vs.dfa().num_states());
    const bool existential = cert.mode == CertMode::Existential;

    const auto pts = check_points(vs, s.per_dim);
    const std::size_t np = pts.size() * pts.size();
    const auto cands = model.disturbance().candidates(s.candidates_per_dim, vs.trunc_sigmas());
    poss::Quadrature quad;
    if (s.quadrature) quad = model.disturbance().quadrature(s.quad_points, vs.trunc_sigmas());

    const int nt = std::max(0, t_hi - t_lo + 1);
    const std::size_t items = np * static_cast<std::size_t>(nt);
    std::vector<PointMargins> out(items);
    parallel_for(items, s.threads, [&](std::size_t item) {
        const int t = t_lo + static_cast<int>(item / np);
        const std::size_t p = item % np;
        const State& x1 = pts[p / pts.size()];
        const State& x2 = pts[p % pts.size()];

        std::vector<State> w1s;
        std::vector<double> w1p;
        if (s.quadrature) {
            w1s = quad.nodes;
            w1p = quad.weights;
        } else {
            Rng rng(derive_seed(s.seed, item));
            for (int k = 0; k < s.inner_samples; ++k) w1s.push_back(model.disturbance().sample(rng));
            w1p.assign(w1s.size(), 1.0 / static_cast<double>(w1s.size()));
        }

        // Successor positions do not depend on q; the automaton moves on L(x1, x2).
        const ltlf::Letter letter = vs.label(x1, x2);
        std::vector<State> y1(w1s.size()), y2(cands.size());
        for (std::size_t a = 0; a < w1s.size(); ++a) y1[a] = model.step(x1, w1s[a]);
        for (std::size_t c = 0; c < cands.size(); ++c) y2[c] = model.step(x2, cands[c]);

        std::vector<int> qnext(nq);
        std::vector<int> distinct;
        for (int q = 0; q < nq; ++q) {
            qnext[q] = vs.dfa().step(q, letter);
            if (std::find(distinct.begin(), distinct.end(), qnext[q]) == distinct.end()) distinct.push_back(qnext[q]);
        }
        std::vector<ProductState> succ;
        succ.reserve(distinct.size() * cands.size() * w1s.size());
        for (int qn : distinct)
            for (std::size_t c = 0; c < cands.size(); ++c)
                for (std::size_t a = 0; a < w1s.size(); ++a) {
                    const bool sink = !model.domain().contains(y1[a]) || !model.domain().contains(y2[c]);
                    succ.push_back({y1[a], y2[c], qn, sink});
                }
        const auto vnext = eval_certificate_batch(cert, vs, succ, t);

        std::vector<ProductState> here;
        for (int q = 0; q < nq; ++q) here.push_back({x1, x2, q, false});
        const auto vprev = eval_certificate_batch(cert, vs, here, t - 1);

        std::vector<double> stat(distinct.size());
        for (std::size_t d = 0; d < distinct.size(); ++d) {
            double best = existential ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < cands.size(); ++c) {
                double e = 0.0;
                const std::size_t base = (d * cands.size() + c) * w1s.size();
                for (std::size_t a = 0; a < w1s.size(); ++a) e += w1p[a] * vnext[base + a];
                best = existential ? std::max(best, e) : std::min(best, e);
            }
            stat[d] = best;
        }
        PointMargins pm;
        for (int q = 0; q < nq; ++q) {
            const auto d = static_cast<std::size_t>(std::find(distinct.begin(), distinct.end(), qnext[q]) - distinct.begin());
            const double margin = stat[d] - (vprev[q] / cert.alpha + cert.beta);
            pm.worst = std::min(pm.worst, margin);
            pm.violations += margin < -s.tol;
            ++pm.checked;
        }
        out[item] = pm;
    });

    Margin m;
    bool any = false;
    for (const auto& pm : out) merge(m, pm, any);
    if (worst_by_t || violations_by_t) {
        const auto need = static_cast<std::size_t>(T) + 1;
        if (worst_by_t && worst_by_t->size() < need)
            worst_by_t->resize(need, std::numeric_limits<double>::infinity());
        if (violations_by_t && violations_by_t->size() < need) violations_by_t->resize(need, 0);
        for (int k = 0; k < nt; ++k) {
            Margin mt;
            bool any_t = false;
            for (std::size_t p = 0; p < np; ++p) merge(mt, out[static_cast<std::size_t>(k) * np + p], any_t);
            const int t = t_lo + k;
            if (worst_by_t && any_t) (*worst_by_t)[t] = std::min((*worst_by_t)[t], mt.worst);
            if (violations_by_t) (*violations_by_t)[t] += static_cast<int>(mt.violations);
        }
    }
    return m;
}

CheckReport validate_dense(const Certificate& cert, const VerificationStructure& vs, const CheckSettings& s) {
    CheckReport r;
    r.settings = s;
    const int T = vs.horizon();
    const int t_hi = resolve_t_hi(s, T);
    r.worst_by_t.assign(static_cast<std::size_t>(T) + 1, std::numeric_limits<double>::infinity());
    r.violations_by_t.assign(static_cast<std::size_t>(T) + 1, 0);
    if (t_hi == T && s.t_lo <= T) {
        r.terminal = check_terminal(cert, vs, s);
        r.worst_by_t[T] = r.terminal.worst;
        r.violations_by_t[T] += static_cast<int>(r.terminal.violations);
    }
    r.recursion = check_recursion(cert, vs, s, &r.worst_by_t, &r.violations_by_t);
    const std::size_t n = check_points(vs, s.per_dim).size();
    r.points_checked = n * n;
    const std::string method = s.quadrature ? "quadrature" : "statistical";
    r.label = (r.passed() ? "validated (" : "violations found (") + method + ")";
    return r;
}

void write_report_json(std::ostream& os, const CheckReport& r) {
    using nlohmann::json;
    auto margin = [](const Margin& m) {
        return json{{"violations", m.violations}, {"worst_margin", m.worst}, {"checked", m.checked}};
    };
    json worst = json::array();
    for (double w : r.worst_by_t) worst.push_back(std::isfinite(w) ? json(w) : json(nullptr));
    const auto& s = r.settings;
    json j{{"label", r.label},
           {"passed", r.passed()},
           {"points_checked", r.points_checked},
           {"terminal", margin(r.terminal)},
           {"recursion", margin(r.recursion)},
           {"worst_margin_by_t", worst},
           {"violations_by_t", r.violations_by_t},
           {"settings",
            {{"per_dim", s.per_dim},
             {"t_lo", s.t_lo},
             {"t_hi", s.t_hi},
             {"quadrature", s.quadrature},
             {"quad_points", s.quad_points},
             {"candidates_per_dim", s.candidates_per_dim},
             {"inner_samples", s.inner_samples},
             {"seed", s.seed},
             {"tol", s.tol}}}};
    os << j.dump(1) << '\n';
}

void write_margins_csv(std::ostream& os, const CheckReport& r) {
    os << "t,worst_margin,violations\n";
    for (std::size_t t = 0; t < r.worst_by_t.size(); ++t) {
        if (!std::isfinite(r.worst_by_t[t])) continue;
        os << t << ',' << r.worst_by_t[t] << ',' << r.violations_by_t[t] << '\n';
    }
}

// ---------------------------------------------------------------------------

std::vector<State> initial_scan(const VerificationStructure& vs, int per_dim) {
    std::vector<State> out;
    for (const auto& b : vs.model().initial().boxes) {
        if (vs.model().tables()) {
            // integer states inside the box
            for (double x = std::ceil(b.lo[0]); x <= b.hi[0]; x += 1.0) out.push_back({x});
        } else {
            for (auto& p : box_grid(b, per_dim)) out.push_back(std::move(p));
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double bound_at(const Certificate& cert, const VerificationStructure& vs, const State& x0,
                const std::vector<State>& companions) {
    std::vector<ProductState> batch;
    for (const auto& c : companions) batch.push_back(vs.initial(x0, c));
    const auto vals = eval_certificate_batch(cert, vs, batch, 0);
    const bool ex = cert.mode == CertMode::Existential;
    double best = ex ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    for (double v : vals) best = ex ? std::max(best, v) : std::min(best, v);
    double geo = 0.0, scale = std::pow(cert.alpha, -cert.horizon);
    for (int i = 0; i < cert.horizon; ++i) geo += std::pow(cert.alpha, -i);
    return best * scale + geo * cert.beta;
}

BoundReport bound(const Certificate& cert, const VerificationStructure& vs, const BoundSettings& s) {
    check_compatible(cert, vs);
    BoundReport r;
    r.x0 = initial_scan(vs, s.x0_per_dim);
    const auto comp = initial_scan(vs, s.x0b_per_dim);
    r.bound.assign(r.x0.size(), 0.0);
    parallel_for(r.x0.size(), s.threads, [&](std::size_t i) { r.bound[i] = bound_at(cert, vs, r.x0[i], comp); });
    for (int i = 0; i < cert.horizon; ++i) r.geometric += std::pow(cert.alpha, -i);
    const auto it = std::min_element(r.bound.begin(), r.bound.end());
    r.overall = *it;
    r.worst_x0 = r.x0[static_cast<std::size_t>(it - r.bound.begin())];
    return r;
}

}  // namespace obscert::certify
