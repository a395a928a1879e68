#include "obscert/trainer/mlp.hpp"

#include <cmath>

namespace obscert::trainer {

Mlp::Mlp(MlpLayout layout) : layout_(std::move(layout)) {
    if (layout_.state_dim < 1 || layout_.num_q < 1) throw Error("mlp: bad input layout");
    std::size_t off = 0;
    int in = layout_.input_dim();
    std::vector<int> outs = layout_.hidden;
    outs.push_back(1);
    for (int out : outs) {
        if (out < 1) throw Error("mlp: hidden widths must be positive");
        Shape s{in, out, off, off + static_cast<std::size_t>(in) * out};
        off = s.b + static_cast<std::size_t>(out);
        shapes_.push_back(s);
        in = out;
    }
    params_.assign(off, 0.0);
}

Mlp Mlp::xavier(MlpLayout layout, std::uint64_t seed) {
    Mlp m(std::move(layout));
    Rng rng(derive_seed(seed, 0x9e11));
    for (const auto& s : m.shapes_) {
        const double r = std::sqrt(6.0 / (s.in + s.out));
        std::uniform_real_distribution<double> u(-r, r);
        for (std::size_t i = 0; i < static_cast<std::size_t>(s.in) * s.out; ++i) m.params_[s.w + i] = u(rng);
    }
    return m;
}

Eigen::Map<const Mlp::Matrix> Mlp::weight(int k) const {
    const auto& s = shapes_.at(k);
    return {params_.data() + s.w, s.out, s.in};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(int k) const {
    const auto& s = shapes_.at(k);
    return {params_.data() + s.b, s.out};
}
Eigen::Map<Mlp::Matrix> Mlp::weight(int k) {
    const auto& s = shapes_.at(k);
    return {params_.data() + s.w, s.out, s.in};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(int k) {
    const auto& s = shapes_.at(k);
    return {params_.data() + s.b, s.out};
}

void Mlp::encode(const Box& domain, int horizon, const State& x1, const State& x2, int q, int t,
                 double* out) const {
    const int d = layout_.state_dim;
    for (int k = 0; k < d; ++k) {
        const double lo = domain.lo[k], hi = domain.hi[k];
        const double span = hi > lo ? hi - lo : 1.0;
        out[k] = (2.0 * x1[k] - lo - hi) / span;
        out[d + k] = (2.0 * x2[k] - lo - hi) / span;
    }
    for (int j = 0; j < layout_.num_q; ++j) out[2 * d + j] = j == q ? 1.0 : 0.0;
    out[2 * d + layout_.num_q] = horizon > 0 ? static_cast<double>(t) / horizon : 0.0;
}

namespace {

void leaky(Mlp::Matrix& z, double slope) {
    z = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

}  // namespace

double Mlp::forward(const double* input) const {
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(input, layout_.input_dim());
    for (int k = 0; k < num_layers(); ++k) {
        Eigen::VectorXd z = weight(k) * a + bias(k);
        if (k + 1 < num_layers())
            for (auto& v : z) v = v > 0.0 ? v : layout_.slope * v;
        a = std::move(z);
    }
    return a(0);
}

Mlp::Row Mlp::forward(const Matrix& inputs) const {
    Matrix a = inputs;
    for (int k = 0; k < num_layers(); ++k) {
        Matrix z = weight(k) * a;
        z.colwise() += bias(k);
        if (k + 1 < num_layers()) leaky(z, layout_.slope);
        a = std::move(z);
    }
    return a.row(0);
}

Mlp::Row Mlp::forward(const Matrix& inputs, Tape& tape) const {
    tape.pre.clear();
    tape.act.clear();
    tape.act.push_back(inputs);
    for (int k = 0; k < num_layers(); ++k) {
        Matrix z = weight(k) * tape.act.back();
        z.colwise() += bias(k);
        tape.pre.push_back(z);
        if (k + 1 < num_layers()) leaky(z, layout_.slope);
        tape.act.push_back(std::move(z));
    }
    return tape.act.back().row(0);
}

void Mlp::backward(const Tape& tape, const Row& gout, ParamVector& grad) const {
    if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
    Matrix delta = gout;
    for (int k = num_layers() - 1; k >= 0; --k) {
        const auto& s = shapes_[k];
        if (k + 1 < num_layers()) {
            const double slope = layout_.slope;
            delta = delta.binaryExpr(tape.pre[k], [slope](double g, double z) { return z > 0.0 ? g : slope * g; });
        }
        Eigen::Map<Matrix>(grad.data() + s.w, s.out, s.in).noalias() += delta * tape.act[k].transpose();
        Eigen::Map<Eigen::VectorXd>(grad.data() + s.b, s.out) += delta.rowwise().sum();
        if (k > 0) delta = weight(k).transpose() * delta;
    }
}

void Mlp::check_finite() const {
    for (double p : params_)
        if (!std::isfinite(p)) throw NumericError("mlp: non-finite parameter");
}

}  // namespace obscert::trainer
