#include "obscert/poss/poss.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace obscert::poss {

namespace {

std::vector<std::string> names(const char* prefix, int n) {
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

int as_index(double v, int n, const char* what) {
    const double r = std::nearbyint(v);
    if (r != v || r < 0 || r >= n) throw Error(std::string("finite system: ") + what + " is not a valid index");
    return static_cast<int>(r);
}

}  // namespace

Poss::Poss(int state_dim, int disturbance_dim, Box domain, Region initial, std::vector<std::string> dynamics,
           std::vector<std::string> output, Distribution disturbance, int horizon)
    : dx_(state_dim),
      dy_(static_cast<int>(output.size())),
      dw_(disturbance_dim),
      domain_(std::move(domain)),
      initial_(std::move(initial)),
      dist_(std::move(disturbance)),
      horizon_(horizon) {
    if (dx_ < 1 || dw_ < 1 || dy_ < 1) throw Error("model: dimensions must be positive");
    if (static_cast<int>(dynamics.size()) != dx_) throw Error("model: need one dynamics expression per state");
    auto xs = names("x", dx_);
    auto xw = xs;
    for (auto& n : names("w", dw_)) xw.push_back(n);
    std::vector<Expression> f, o;
    for (const auto& e : dynamics) f.push_back(Expression::parse(e, xw));
    for (const auto& e : output) o.push_back(Expression::parse(e, xs));
    dynamics_ = VectorMap(std::move(f), xw.size());
    output_ = VectorMap(std::move(o), xs.size());
    check_dims();
}

Poss Poss::finite(std::shared_ptr<const FiniteTables> tables, std::vector<double> probs, Region initial,
                  int horizon) {
    if (!tables || tables->num_states < 1 || tables->num_disturbances < 1) throw Error("finite system: empty tables");
    const auto n = static_cast<std::size_t>(tables->num_states);
    const auto m = static_cast<std::size_t>(tables->num_disturbances);
    if (tables->next.size() != n * m || tables->outputs.size() != n) throw Error("finite system: table size mismatch");
    for (int v : tables->next)
        if (v < 0 || v >= tables->num_states) throw Error("finite system: successor out of range");
    if (probs.size() != m) throw Error("finite system: need one probability per disturbance");
    std::vector<State> points;
    for (std::size_t j = 0; j < m; ++j) points.push_back({static_cast<double>(j)});

    Poss p;
    p.dx_ = 1;
    p.dy_ = static_cast<int>(tables->outputs.front().size());
    p.dw_ = 1;
    p.domain_ = Box({0.0}, {static_cast<double>(n - 1)});
    p.initial_ = std::move(initial);
    p.dist_ = Distribution::discrete(std::move(points), std::move(probs));
    p.horizon_ = horizon;
    p.tables_ = std::move(tables);
    p.check_dims();
    return p;
}

Poss Poss::case_study() {
    return Poss(1, 1, Box({-4.0}, {4.0}), Region({Box({-2.0}, {2.0})}), {"0.9*x1 + w1"}, {"x1^2"},
                Distribution::gaussian_diag({0.0}, {0.4}), 10);
}

void Poss::check_dims() const {
    if (horizon_ < 0) throw Error("model: horizon must be nonnegative");
    if (domain_.dim() != static_cast<std::size_t>(dx_)) throw Error("model: domain dimension mismatch");
    if (initial_.empty()) throw Error("model: empty initial region");
    if (initial_.dim() != static_cast<std::size_t>(dx_)) throw Error("model: initial region dimension mismatch");
    if (!initial_.within(domain_)) throw Error("model: initial region must lie inside the domain");
    if (dist_.dim() != static_cast<std::size_t>(dw_)) throw Error("model: disturbance dimension mismatch");
}

Poss Poss::with_horizon(int horizon) const {
    Poss p = *this;
    p.horizon_ = horizon;
    p.check_dims();
    return p;
}

void Poss::step_into(const double* x, const double* w, double* out) const {
    if (tables_) {
        const int i = as_index(x[0], tables_->num_states, "state");
        const int j = as_index(w[0], tables_->num_disturbances, "disturbance");
        out[0] = tables_->next[static_cast<std::size_t>(i * tables_->num_disturbances + j)];
        return;
    }
    double buf[16];
    std::vector<double> big;
    double* in = buf;
    const std::size_t n = static_cast<std::size_t>(dx_ + dw_);
    if (n > 16) {
        big.resize(n);
        in = big.data();
    }
    std::copy(x, x + dx_, in);
    std::copy(w, w + dw_, in + dx_);
    dynamics_.eval({in, n}, {out, static_cast<std::size_t>(dx_)});
    for (int i = 0; i < dx_; ++i)
        if (!std::isfinite(out[i])) throw NumericError("dynamics produced a non-finite state");
}

State Poss::step(const State& x, const State& w) const {
    if (x.size() != static_cast<std::size_t>(dx_) || w.size() != static_cast<std::size_t>(dw_))
        throw Error("step: dimension mismatch");
    State out(dx_);
    step_into(x.data(), w.data(), out.data());
    return out;
}

void Poss::output_into(const double* x, double* out) const {
    if (tables_) {
        const auto& y = tables_->outputs[static_cast<std::size_t>(as_index(x[0], tables_->num_states, "state"))];
        std::copy(y.begin(), y.end(), out);
        return;
    }
    output_.eval({x, static_cast<std::size_t>(dx_)}, {out, static_cast<std::size_t>(dy_)});
    for (int i = 0; i < dy_; ++i)
        if (!std::isfinite(out[i])) throw NumericError("output map produced a non-finite value");
}

State Poss::output(const State& x) const {
    if (x.size() != static_cast<std::size_t>(dx_)) throw Error("output: dimension mismatch");
    State out(dy_);
    output_into(x.data(), out.data());
    return out;
}

State sample_disturbance(const Distribution& dist, Rng& rng) { return dist.sample(rng); }

Trajectory sample_trajectory(const Poss& model, const State& x0, Rng& rng) {
    Trajectory tr;
    tr.states.push_back(x0);
    for (int t = 0; t < model.horizon(); ++t) {
        tr.disturbances.push_back(model.disturbance().sample(rng));
        tr.states.push_back(model.step(tr.states.back(), tr.disturbances.back()));
    }
    return tr;
}

Trajectory replay(const Poss& model, const State& x0, const std::vector<State>& disturbances) {
    Trajectory tr;
    tr.states.push_back(x0);
    tr.disturbances = disturbances;
    for (const auto& w : disturbances) tr.states.push_back(model.step(tr.states.back(), w));
    return tr;
}

std::vector<State> output_trace(const Poss& model, const Trajectory& traj) {
    std::vector<State> ys;
    ys.reserve(traj.states.size());
    for (const auto& x : traj.states) ys.push_back(model.output(x));
    return ys;
}

void write_trajectory_csv(std::ostream& os, const Poss& model, const Trajectory& traj) {
    os << "t";
    for (int i = 1; i <= model.state_dim(); ++i) os << ",x" << i;
    for (int i = 1; i <= model.disturbance_dim(); ++i) os << ",w" << i;
    for (int i = 1; i <= model.output_dim(); ++i) os << ",y" << i;
    os << "\n";
    const auto ys = output_trace(model, traj);
    os.precision(17);
    for (std::size_t t = 0; t < traj.states.size(); ++t) {
        os << t;
        for (double v : traj.states[t]) os << "," << v;
        for (int i = 0; i < model.disturbance_dim(); ++i) {
            os << ",";
            if (t < traj.disturbances.size()) os << traj.disturbances[t][static_cast<std::size_t>(i)];
        }
        for (double v : ys[t]) os << "," << v;
        os << "\n";
    }
}

}  // namespace obscert::poss
