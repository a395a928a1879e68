#include "obscert/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "obscert/oracle/grid.hpp"

namespace obscert::trainer {

using product::ProductState;
using product::VerificationStructure;
using Matrix = Mlp::Matrix;
using Row = Mlp::Row;

void TrainConfig::validate() const {
    if (hidden.empty()) throw ConfigError("training: at least one hidden layer is required");
    for (int h : hidden)
        if (h < 1) throw ConfigError("training: hidden widths must be positive");
    if (!(slope >= 0.0)) throw ConfigError("training: slope must be nonnegative");
    if (!(lambda_term > 0 && lambda_rec > 0 && lambda_beta > 0)) throw ConfigError("training: lambdas must be positive");
    if (adversary_samples < 1 || inner_samples < 1) throw ConfigError("training: N and M must be positive");
    if (epochs < 0 || dataset_size < 1 || batch_size < 1) throw ConfigError("training: bad epoch, dataset or batch size");
    if (!(trajectory_fraction >= 0.0 && trajectory_fraction <= 1.0))
        throw ConfigError("training: trajectory fraction must lie in [0, 1]");
    if (!(lr > 0 && lr_min > 0 && lr_min <= lr)) throw ConfigError("training: need 0 < lr_min <= lr");
    if (!(momentum >= 0 && momentum < 1)) throw ConfigError("training: momentum must lie in [0, 1)");
    if (dp_resolution < 2 || prefit_steps < 0 || prefit_batch < 1 || !(prefit_lr > 0))
        throw ConfigError("training: bad warm-start settings");
    if (!(prefit_uniform_fraction >= 0.0 && prefit_uniform_fraction <= 1.0))
        throw ConfigError("training: pre-fit uniform fraction must lie in [0, 1]");
    if (calibration_per_dim < 1) throw ConfigError("training: calibration grid must be nonempty");
}

std::pair<double, double> sink_value_dbeta(double terminal, double alpha, double beta, int horizon, int t) {
    double c = terminal, dc = 0.0;
    for (int s = horizon; s > t; --s) {
        c = alpha * (c - beta);
        dc = alpha * (dc - 1.0);
    }
    return {c, dc};
}

Draws draw_batch(const VerificationStructure& vs, const TrainConfig& cfg, Rng& rng) {
    const auto& dist = vs.model().disturbance();
    const Box sup = dist.support(vs.trunc_sigmas());
    Draws d;
    while (static_cast<int>(d.w2.size()) < cfg.adversary_samples) {
        State w = dist.sample(rng);
        if (sup.contains(w)) d.w2.push_back(std::move(w));
    }
    for (int m = 0; m < cfg.inner_samples; ++m) d.w1.push_back(dist.sample(rng));
    return d;
}

namespace {

constexpr double kFloor = 1e-8;

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct ChunkOut {
    double term = 0.0, rec = 0.0, rec_beta = 0.0;
    ParamVector gterm, grec;
};

}  // namespace

LossParts loss(const Mlp& net, double beta, const std::vector<Sample>& batch, const Draws& draws,
               const VerificationStructure& vs, const TrainConfig& cfg, LossGrad* grad, double alpha) {
    if (batch.empty()) throw Error("training: empty batch");
    const auto& model = vs.model();
    const Box& dom = model.domain();
    const int T = vs.horizon();
    const bool existential = vs.quantifier() == ltlf::Quantifier::Exists;
    const std::size_t N = draws.w2.size(), M = draws.w1.size();
    const int in_dim = net.layout().input_dim();

    // Fixed chunking keeps the reduction order independent of the thread count.
    const std::size_t chunk = 8;
    const std::size_t nchunks = (batch.size() + chunk - 1) / chunk;
    std::vector<ChunkOut> outs(nchunks);
    parallel_for(nchunks, cfg.threads, [&](std::size_t ci) {
        const std::size_t lo = ci * chunk, hi = std::min(batch.size(), lo + chunk);
        const std::size_t n = hi - lo;
        // columns per sample: terminal, current, then N*M successors (sinks skipped)
        std::vector<std::vector<int>> succ_col(n, std::vector<int>(N * M, -1));
        std::vector<std::vector<double>> sink_val(n, std::vector<double>(N * M, 0.0)), sink_d(n, std::vector<double>(N * M, 0.0));
        std::vector<int> qn(n);
        std::vector<Eigen::Index> own_col(n);
        std::vector<State> y1(M);
        Matrix in(in_dim, static_cast<Eigen::Index>(n * (2 + N * M)));
        Eigen::Index col = 0;
        for (std::size_t s = 0; s < n; ++s) {
            const Sample& b = batch[lo + s];
            own_col[s] = col;
            const int qin = certify::network_q(net.layout(), vs, b.x1, b.x2, b.q);
            net.encode(dom, T, b.x1, b.x2, qin, T, in.col(col++).data());
            net.encode(dom, T, b.x1, b.x2, qin, b.k, in.col(col++).data());
            qn[s] = vs.dfa().step(b.q, vs.label(b.x1, b.x2));
            for (std::size_t m = 0; m < M; ++m) y1[m] = model.step(b.x1, draws.w1[m]);
            for (std::size_t i = 0; i < N; ++i) {
                const State y2 = model.step(b.x2, draws.w2[i]);
                const bool in2 = dom.contains(y2);
                for (std::size_t m = 0; m < M; ++m) {
                    if (in2 && dom.contains(y1[m])) {
                        succ_col[s][i * M + m] = static_cast<int>(col);
                        net.encode(dom, T, y1[m], y2, certify::network_q(net.layout(), vs, y1[m], y2, qn[s]), b.k + 1,
                                   in.col(col++).data());
                    } else {
                        const auto [c, dc] = sink_value_dbeta(vs.sink_value(qn[s]), alpha, beta, T, b.k + 1);
                        sink_val[s][i * M + m] = c;
                        sink_d[s][i * M + m] = dc;
                    }
                }
            }
        }
        in.conservativeResize(Eigen::NoChange, col);
        const Row y = net.forward(in);

        ChunkOut out;
        Row gterm = Row::Zero(col), grec = Row::Zero(col);
        for (std::size_t s = 0; s < n; ++s) {
            const Sample& b = batch[lo + s];
            const Eigen::Index tcol = own_col[s];
            const double ind = vs.accepting(b.x1, b.x2, b.q) ? 1.0 : 0.0;
            const double vT = y(tcol), vk = y(tcol + 1);
            const double tv = vT - ind;
            if (tv > 0) {
                out.term += tv;
                gterm(tcol) += 1.0;
            }
            std::size_t best_i = 0;
            double best = existential ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < N; ++i) {
                double e = 0.0;
                for (std::size_t m = 0; m < M; ++m) {
                    const int sc = succ_col[s][i * M + m];
                    e += sc >= 0 ? y(sc) : sink_val[s][i * M + m];
                }
                e /= static_cast<double>(M);
                if (existential ? e > best : e < best) {
                    best = e;
                    best_i = i;
                }
            }
            const double r = vk / alpha + beta - best;
            if (r > 0) {
                out.rec += r;
                grec(tcol + 1) += 1.0 / alpha;
                double db = 1.0;
                for (std::size_t m = 0; m < M; ++m) {
                    const int sc = succ_col[s][best_i * M + m];
                    if (sc >= 0)
                        grec(sc) -= 1.0 / static_cast<double>(M);
                    else
                        db -= sink_d[s][best_i * M + m] / static_cast<double>(M);
                }
                out.rec_beta += db;
            }
        }
        if (grad) {
            // backward only through columns that carry gradient
            std::vector<Eigen::Index> used;
            for (Eigen::Index c = 0; c < col; ++c)
                if (gterm(c) != 0.0 || grec(c) != 0.0) used.push_back(c);
            out.gterm.assign(net.num_params(), 0.0);
            out.grec.assign(net.num_params(), 0.0);
            if (!used.empty()) {
                Matrix sub(in_dim, static_cast<Eigen::Index>(used.size()));
                Row gt(static_cast<Eigen::Index>(used.size())), gr(static_cast<Eigen::Index>(used.size()));
                for (std::size_t u = 0; u < used.size(); ++u) {
                    sub.col(static_cast<Eigen::Index>(u)) = in.col(used[u]);
                    gt(static_cast<Eigen::Index>(u)) = gterm(used[u]);
                    gr(static_cast<Eigen::Index>(u)) = grec(used[u]);
                }
                Mlp::Tape tape;
                net.forward(sub, tape);
                net.backward(tape, gt, out.gterm);
                net.backward(tape, gr, out.grec);
            }
        }
        outs[ci] = std::move(out);
    });

    const double inv = 1.0 / static_cast<double>(batch.size());
    LossParts p;
    double rec_beta = 0.0;
    if (grad) {
        grad->term.assign(net.num_params(), 0.0);
        grad->rec.assign(net.num_params(), 0.0);
    }
    for (const auto& o : outs) {
        p.term += o.term;
        p.rec += o.rec;
        rec_beta += o.rec_beta;
        if (grad)
            for (std::size_t k = 0; k < net.num_params(); ++k) {
                grad->term[k] += o.gterm[k];
                grad->rec[k] += o.grec[k];
            }
    }
    p.term *= inv;
    p.rec *= inv;
    p.beta = softplus(-beta) - 0.01 * std::max(beta, 0.0);
    if (grad) {
        for (auto& g : grad->term) g *= inv;
        for (auto& g : grad->rec) g *= inv;
        grad->rec_beta = rec_beta * inv;
        grad->beta_beta = -sigmoid(-beta) - (beta > 0 ? 0.01 : 0.0);
    }
    p.total = normalized_total(p, p, cfg);
    if (!std::isfinite(p.total) || !std::isfinite(p.term) || !std::isfinite(p.rec))
        throw NumericError("training: non-finite loss");
    return p;
}

double normalized_total(const LossParts& parts, const LossParts& d, const TrainConfig& cfg) {
    return cfg.lambda_term * parts.term / std::max(std::fabs(d.term), kFloor) +
           cfg.lambda_rec * parts.rec / std::max(std::fabs(d.rec), kFloor) +
           cfg.lambda_beta * parts.beta / std::max(std::fabs(d.beta), kFloor);
}

void combine(const LossParts& at, const LossGrad& g, const TrainConfig& cfg, ParamVector& grad, double& dbeta) {
    const double ct = cfg.lambda_term / std::max(std::fabs(at.term), kFloor);
    const double cr = cfg.lambda_rec / std::max(std::fabs(at.rec), kFloor);
    const double cb = cfg.lambda_beta / std::max(std::fabs(at.beta), kFloor);
    grad.assign(g.term.size(), 0.0);
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = ct * g.term[k] + cr * g.rec[k];
    dbeta = cr * g.rec_beta + cb * g.beta_beta;
}

std::vector<GradProbe> gradient_check(const Mlp& net, double beta, const std::vector<Sample>& batch, const Draws& draws,
                                      const VerificationStructure& vs, const TrainConfig& cfg, int probes,
                                      std::uint64_t seed, double h) {
    LossGrad g;
    const LossParts at = loss(net, beta, batch, draws, vs, cfg, &g);
    ParamVector gtotal;
    double gbeta_total = 0.0;
    combine(at, g, cfg, gtotal, gbeta_total);

    auto rel = [](double a, double n) { return std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), 1e-6}); };
    std::vector<GradProbe> out;
    auto record = [&](const char* comp, long idx, double a, double n) { out.push_back({comp, idx, a, n, rel(a, n)}); };

    Rng rng(derive_seed(seed, 0x6c));
    std::uniform_int_distribution<std::size_t> pick(0, net.num_params() - 1);
    Mlp probe = net;
    for (int i = 0; i < probes; ++i) {
        const std::size_t k = pick(rng);
        const double p0 = probe.params()[k];
        probe.params()[k] = p0 + h;
        const LossParts up = loss(probe, beta, batch, draws, vs, cfg);
        probe.params()[k] = p0 - h;
        const LossParts dn = loss(probe, beta, batch, draws, vs, cfg);
        probe.params()[k] = p0;
        const auto idx = static_cast<long>(k);
        record("term", idx, g.term[k], (up.term - dn.term) / (2 * h));
        record("rec", idx, g.rec[k], (up.rec - dn.rec) / (2 * h));
        record("total", idx, gtotal[k],
               (normalized_total(up, at, cfg) - normalized_total(dn, at, cfg)) / (2 * h));
    }
    const LossParts up = loss(net, beta + h, batch, draws, vs, cfg);
    const LossParts dn = loss(net, beta - h, batch, draws, vs, cfg);
    record("rec", -1, g.rec_beta, (up.rec - dn.rec) / (2 * h));
    record("beta", -1, g.beta_beta, (up.beta - dn.beta) / (2 * h));
    record("total", -1, gbeta_total, (normalized_total(up, at, cfg) - normalized_total(dn, at, cfg)) / (2 * h));
    return out;
}

// ---------------------------------------------------------------------------

std::vector<Sample> make_dataset(const VerificationStructure& vs, int trajectories, double fraction, std::uint64_t seed) {
    const auto& model = vs.model();
    const int T = vs.horizon();
    const int nq = static_cast<int>(vs.dfa().num_states());
    Rng rng(derive_seed(seed, 0xda7a));
    const auto& boxes = model.initial().boxes;
    auto uniform_in = [&](const Box& b) {
        State x(b.dim());
        for (std::size_t k = 0; k < b.dim(); ++k) x[k] = std::uniform_real_distribution<double>(b.lo[k], b.hi[k])(rng);
        return x;
    };
    std::vector<Sample> out;
    const int n_traj = static_cast<int>(std::lround(trajectories * fraction));
    for (int i = 0; i < n_traj; ++i) {
        const Box& b1 = boxes[std::uniform_int_distribution<std::size_t>(0, boxes.size() - 1)(rng)];
        const Box& b2 = boxes[std::uniform_int_distribution<std::size_t>(0, boxes.size() - 1)(rng)];
        ProductState v = vs.initial(uniform_in(b1), uniform_in(b2));
        for (int k = 0; k < T && !v.sink; ++k) {
            out.push_back({v.x1, v.x2, v.q, k});
            const State w1 = model.disturbance().sample(rng);
            const State w2 = model.disturbance().sample(rng);
            v = vs.step(v, w1, w2);
        }
    }
    const auto n_uniform = static_cast<std::size_t>(
        fraction > 0 ? std::lround(static_cast<double>(out.size()) * (1 - fraction) / fraction)
                     : static_cast<long>(trajectories) * T);
    for (std::size_t i = 0; i < n_uniform; ++i) {
        Sample s;
        s.x1 = uniform_in(model.domain());
        s.x2 = uniform_in(model.domain());
        s.q = std::uniform_int_distribution<int>(0, nq - 1)(rng);
        s.k = std::uniform_int_distribution<int>(0, T - 1)(rng);
        out.push_back(std::move(s));
    }
    return out;
}

void calibrate(certify::Certificate& cert, const VerificationStructure& vs, const certify::CheckSettings& settings,
               int rounds) {
    certify::CheckSettings s = settings;
    s.t_lo = 0;
    s.t_hi = -1;
    for (int r = 0; r < rounds; ++r) {
        const auto term = certify::check_terminal(cert, vs, s);
        if (term.checked && term.worst < 0) cert.offset += -term.worst + 1e-9;
        const auto rec = certify::check_recursion(cert, vs, s);
        if (rec.checked && rec.worst < 0) cert.beta += rec.worst - 1e-9;
        if ((!term.checked || term.worst >= 0) && (!rec.checked || rec.worst >= 0)) return;
    }
}

namespace {

struct Optimizer {
    double momentum;
    std::vector<double> vel;
    double vel_beta = 0.0;

    void step(ParamVector& params, const ParamVector& grad, double& beta, double dbeta, double lr) {
        if (vel.empty()) vel.assign(params.size(), 0.0);
        for (std::size_t k = 0; k < params.size(); ++k) {
            vel[k] = momentum * vel[k] - lr * grad[k];
            params[k] += vel[k];
        }
        vel_beta = momentum * vel_beta - lr * dbeta;
        beta += vel_beta;
    }
};

double cosine(double hi, double lo, std::size_t step, std::size_t total) {
    if (total <= 1) return hi;
    const double f = static_cast<double>(step) / static_cast<double>(total - 1);
    return lo + 0.5 * (hi - lo) * (1.0 + std::cos(std::numbers::pi * f));
}

// Weighted least squares onto table targets, Adam with cosine decay.
double prefit(Mlp& net, const oracle::ValueTable& table, const VerificationStructure& vs, const std::vector<Sample>& data,
              const TrainConfig& cfg, std::ostream* progress) {
    const int T = vs.horizon();
    const int nq = static_cast<int>(vs.dfa().num_states());
    const Box& dom = vs.model().domain();
    Rng rng(derive_seed(cfg.seed, 0x9f17));
    std::vector<double> m(net.num_params(), 0.0), v(net.num_params(), 0.0);
    ParamVector grad;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double recent = 0.0;
    std::size_t recent_n = 0;
    const int B = cfg.prefit_batch;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int step = 0; step < cfg.prefit_steps; ++step) {
        Matrix in(net.layout().input_dim(), B);
        std::vector<double> target(B);
        std::vector<bool> terminal(B);
        for (int j = 0; j < B; ++j) {
            State x1, x2;
            int q;
            if (!data.empty() && unif(rng) >= cfg.prefit_uniform_fraction) {
                const auto& s = data[std::uniform_int_distribution<std::size_t>(0, data.size() - 1)(rng)];
                x1 = s.x1;
                x2 = s.x2;
                q = s.q;
            } else {
                x1.resize(dom.dim());
                x2.resize(dom.dim());
                for (std::size_t k = 0; k < dom.dim(); ++k) {
                    x1[k] = std::uniform_real_distribution<double>(dom.lo[k], dom.hi[k])(rng);
                    x2[k] = std::uniform_real_distribution<double>(dom.lo[k], dom.hi[k])(rng);
                }
                q = std::uniform_int_distribution<int>(0, nq - 1)(rng);
            }
            const int t = std::uniform_int_distribution<int>(0, T)(rng);
            const double u = oracle::table_value(table, vs, t, q, x1, x2);
            target[j] = u - (T - t) * cfg.beta_init - cfg.prefit_shift;
            terminal[j] = t == T;
            net.encode(dom, T, x1, x2, certify::network_q(net.layout(), vs, x1, x2, q), t, in.col(j).data());
        }
        Mlp::Tape tape;
        const Row y = net.forward(in, tape);
        Row g(B);
        double l = 0.0;
        for (int j = 0; j < B; ++j) {
            const double r = y(j) - target[j];
            const double w = terminal[j] && r > 0 ? cfg.overshoot_weight : 1.0;
            l += w * r * r;
            g(j) = 2.0 * w * r / B;
        }
        grad.assign(net.num_params(), 0.0);
        net.backward(tape, g, grad);
        const double lr = cosine(cfg.prefit_lr, cfg.prefit_lr * 1e-2, static_cast<std::size_t>(step),
                                 static_cast<std::size_t>(cfg.prefit_steps));
        const double c1 = 1.0 - std::pow(b1, step + 1), c2 = 1.0 - std::pow(b2, step + 1);
        auto& p = net.params();
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = b1 * m[k] + (1 - b1) * grad[k];
            v[k] = b2 * v[k] + (1 - b2) * grad[k] * grad[k];
            p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
        }
        if (!std::isfinite(l)) throw NumericError("training: non-finite pre-fit loss");
        if (step >= cfg.prefit_steps - 200) {
            recent += l / B;
            ++recent_n;
        }
        if (progress && (step + 1) % 2000 == 0)
            *progress << "prefit step " << step + 1 << " mse " << l / B << '\n' << std::flush;
    }
    net.check_finite();
    return recent_n ? std::sqrt(recent / static_cast<double>(recent_n)) : 0.0;
}

certify::Certificate wrap(const VerificationStructure& vs, const Mlp& net, double beta) {
    certify::Certificate c = certify::blank_certificate(vs, certify::Backing::Mlp);
    c.mlp = std::make_shared<const Mlp>(net);
    c.beta = beta;
    return c;
}

struct Evaluated {
    certify::Certificate cert;
    certify::CheckReport report;
    certify::BoundReport bound;
};

Evaluated certify_candidate(const VerificationStructure& vs, const Mlp& net, double beta, const TrainConfig& cfg) {
    Evaluated e{wrap(vs, net, beta), {}, {}};
    certify::CheckSettings cal = cfg.validation;
    cal.per_dim = cfg.calibration_per_dim;
    cal.threads = cfg.threads;
    calibrate(e.cert, vs, cal);
    certify::CheckSettings val = cfg.validation;
    val.threads = cfg.threads;
    e.report = certify::validate_dense(e.cert, vs, val);
    certify::BoundSettings bs = cfg.bound;
    bs.threads = cfg.threads;
    e.bound = certify::bound(e.cert, vs, bs);
    return e;
}

}  // namespace

TrainResult train(const VerificationStructure& vs, const TrainConfig& cfg, std::ostream* progress) {
    cfg.validate();
    TrainResult res;
    Mlp net = Mlp::xavier(
        {vs.model().state_dim(), static_cast<int>(vs.dfa().num_states()), cfg.hidden, cfg.slope, cfg.successor_q},
        cfg.seed);
    double beta = cfg.beta_init;
    const auto data = make_dataset(vs, cfg.dataset_size, cfg.trajectory_fraction, cfg.seed);
    if (data.empty()) throw Error("training: empty dataset");

    if (cfg.warm_start) {
        const auto mode = vs.quantifier() == ltlf::Quantifier::Forall ? oracle::Mode::Inf : oracle::Mode::Sup;
        const auto grid = oracle::GridSpec::for_structure(vs, cfg.dp_resolution, cfg.validation.quad_points,
                                                          cfg.validation.candidates_per_dim);
        const auto table = oracle::dp_backward(vs, grid, mode, {.threads = cfg.threads});
        res.prefit_rmse = prefit(net, table, vs, data, cfg, progress);
        if (progress) *progress << "prefit rmse " << res.prefit_rmse << '\n';
    }

    Evaluated best;
    bool have_best = false;
    auto consider = [&](const Evaluated& e) {
        const bool ok = e.report.passed();
        const bool best_ok = have_best && best.report.passed();
        if (!have_best || (ok && !best_ok) || (ok == best_ok && e.bound.overall > best.bound.overall)) {
            best = e;
            have_best = true;
        }
        return ok && e.bound.overall >= cfg.target_p;
    };

    bool done = false;
    if (cfg.warm_start && cfg.epochs > 0 && cfg.check_every > 0) done = consider(certify_candidate(vs, net, beta, cfg));

    Rng rng(derive_seed(cfg.seed, 0x7ea1));
    Optimizer opt{cfg.momentum, {}, 0.0};
    const std::size_t per_epoch = (data.size() + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total_steps = per_epoch * static_cast<std::size_t>(cfg.epochs);
    std::size_t step = 0;
    std::vector<std::size_t> order(data.size());
    ParamVector grad;
    certify::BoundSettings coarse{21, 21, cfg.threads};
    for (int epoch = 1; epoch <= cfg.epochs && !done; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        LossParts sum;
        for (std::size_t b = 0; b < per_epoch; ++b) {
            std::vector<Sample> batch;
            for (std::size_t i = b * cfg.batch_size; i < std::min(order.size(), (b + 1) * cfg.batch_size); ++i)
                batch.push_back(data[order[i]]);
            const Draws draws = draw_batch(vs, cfg, rng);
            LossGrad g;
            const LossParts p = loss(net, beta, batch, draws, vs, cfg, &g);
            double dbeta = 0.0;
            combine(p, g, cfg, grad, dbeta);
            opt.step(net.params(), grad, beta, dbeta, cosine(cfg.lr, cfg.lr_min, step++, total_steps));
            sum.total += p.total;
            sum.term += p.term;
            sum.rec += p.rec;
            sum.beta += p.beta;
        }
        net.check_finite();
        const double inv = 1.0 / static_cast<double>(per_epoch);
        LogRow row{epoch, {sum.total * inv, sum.term * inv, sum.rec * inv, sum.beta * inv}, beta, 0.0};
        row.bound_estimate = certify::bound(wrap(vs, net, beta), vs, coarse).overall;
        res.log.push_back(row);
        res.epochs_run = epoch;
        if (progress)
            *progress << "epoch " << epoch << " total " << row.loss.total << " term " << row.loss.term << " rec "
                      << row.loss.rec << " beta " << beta << " bound~ " << row.bound_estimate << '\n'
                      << std::flush;
        if (cfg.check_every > 0 && epoch % cfg.check_every == 0 && epoch < cfg.epochs)
            done = consider(certify_candidate(vs, net, beta, cfg));
    }
    if (!done) consider(certify_candidate(vs, net, beta, cfg));
    res.cert = best.cert;
    res.report = best.report;
    res.bound = best.bound;
    res.certified = best.report.passed() && best.bound.overall >= cfg.target_p;
    return res;
}

void write_log_csv(std::ostream& os, const std::vector<LogRow>& log) {
    os << "epoch,L_total,L_term,L_rec,L_beta,beta,bound_estimate\n";
    for (const auto& r : log)
        os << r.epoch << ',' << r.loss.total << ',' << r.loss.term << ',' << r.loss.rec << ',' << r.loss.beta << ','
           << r.beta << ',' << r.bound_estimate << '\n';
}

}  // namespace obscert::trainer
