#include "obscert/oracle/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>

namespace obscert::oracle {

using product::ProductState;
using product::VerificationStructure;

const char* to_string(Mode m) { return m == Mode::Inf ? "inf" : "sup"; }

namespace {

std::size_t ipow(std::size_t b, std::size_t e) {
    std::size_t r = 1;
    while (e--) r *= b;
    return r;
}

State node_of(const Box& box, int res, std::size_t i) {
    State x(box.dim());
    for (std::size_t k = 0; k < box.dim(); ++k) {
        const auto j = static_cast<double>(i % static_cast<std::size_t>(res));
        i /= static_cast<std::size_t>(res);
        x[k] = box.lo[k] + j * (box.hi[k] - box.lo[k]) / (res - 1);
    }
    return x;
}

}  // namespace

GridSpec GridSpec::for_structure(const VerificationStructure& vs, int resolution, int quad_points,
                                 int candidates_per_dim) {
    const poss::Poss& m = vs.model();
    GridSpec g;
    g.box = m.domain();
    g.resolution = m.tables() ? m.tables()->num_states : resolution;
    g.quadrature = m.disturbance().quadrature(quad_points, vs.trunc_sigmas());
    g.candidates = m.disturbance().candidates(candidates_per_dim, vs.trunc_sigmas());
    g.validate(vs);
    return g;
}

void GridSpec::validate(const VerificationStructure& vs) const {
    if (resolution < 2) throw Error("grid: resolution must be at least 2");
    const Box& dom = vs.model().domain();
    if (box.lo != dom.lo || box.hi != dom.hi) throw Error("grid: box must equal the model domain");
    if (quadrature.nodes.empty() || quadrature.nodes.size() != quadrature.weights.size())
        throw Error("grid: malformed quadrature");
    double total = 0.0;
    for (double w : quadrature.weights) total += w;
    if (std::fabs(total - 1.0) > 1e-12) throw Error("grid: quadrature weights must sum to 1");
    if (candidates.empty()) throw Error("grid: no adversary candidates");
    const Box sup = vs.model().disturbance().support(vs.trunc_sigmas());
    for (const auto& c : candidates) {
        for (std::size_t k = 0; k < c.size(); ++k)
            if (c[k] < sup.lo[k] - 1e-12 || c[k] > sup.hi[k] + 1e-12)
                throw Error("grid: adversary candidate outside the truncated support");
    }
}

std::size_t GridSpec::num_nodes() const { return ipow(static_cast<std::size_t>(resolution), dim()); }
State GridSpec::node(std::size_t i) const { return node_of(box, resolution, i); }

Stencil make_stencil(const Box& box, int res, const State& x) {
    Stencil s;
    if (!box.contains(x)) {
        s.outside = true;
        return s;
    }
    const std::size_t d = box.dim();
    std::vector<std::size_t> base(d);
    std::vector<double> frac(d);
    for (std::size_t k = 0; k < d; ++k) {
        const double h = (box.hi[k] - box.lo[k]) / (res - 1);
        const double u = (x[k] - box.lo[k]) / h;
        const double fl = std::clamp(std::floor(u), 0.0, static_cast<double>(res - 2));
        base[k] = static_cast<std::size_t>(fl);
        frac[k] = std::clamp(u - fl, 0.0, 1.0);
    }
    for (std::size_t m = 0; m < (std::size_t{1} << d); ++m) {
        std::size_t idx = 0, stride = 1;
        double w = 1.0;
        for (std::size_t k = 0; k < d; ++k) {
            const bool up = (m >> k) & 1u;
            idx += (base[k] + (up ? 1 : 0)) * stride;
            w *= up ? frac[k] : 1.0 - frac[k];
            stride *= static_cast<std::size_t>(res);
        }
        if (w == 0.0) continue;
        s.index.push_back(idx);
        s.weight.push_back(w);
    }
    return s;
}

ValueTable::ValueTable(Box box, int resolution, int num_q, int horizon, Mode mode)
    : box_(std::move(box)), res_(resolution), num_q_(num_q), horizon_(horizon), mode_(mode) {
    if (res_ < 2) throw Error("value table: resolution must be at least 2");
    nodes_ = ipow(static_cast<std::size_t>(res_), box_.dim());
    values_.assign(static_cast<std::size_t>(horizon_ + 1) * static_cast<std::size_t>(num_q_) * nodes_ * nodes_, 0.0);
}

State ValueTable::node(std::size_t i) const { return node_of(box_, res_, i); }

double ValueTable::interpolate_stencil(int t, int q, const Stencil& s1, const Stencil& s2) const {
    const double* layer = values_.data() + offset(t, q, 0, 0);
    double v = 0.0;
    for (std::size_t a = 0; a < s1.index.size(); ++a) {
        const double* row = layer + s1.index[a] * nodes_;
        double inner = 0.0;
        for (std::size_t b = 0; b < s2.index.size(); ++b) inner += s2.weight[b] * row[s2.index[b]];
        v += s1.weight[a] * inner;
    }
    return v;
}

double ValueTable::interpolate(int t, int q, const State& x1, const State& x2) const {
    const Stencil s1 = make_stencil(box_, res_, x1);
    const Stencil s2 = make_stencil(box_, res_, x2);
    if (s1.outside || s2.outside) throw Error("value table: interpolation point outside the grid box");
    return interpolate_stencil(t, q, s1, s2);
}

namespace {

constexpr char kMagic[4] = {'O', 'B', 'V', 'T'};
constexpr std::uint32_t kVersion = 2;

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw Error("value table: truncated file");
    return v;
}

}  // namespace

void ValueTable::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(dim()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(res_));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(num_q_));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(horizon_));
    put<std::uint32_t>(os, mode_ == Mode::Inf ? 0u : 1u);
    for (double v : box_.lo) put(os, v);
    for (double v : box_.hi) put(os, v);
    os.write(reinterpret_cast<const char*>(values_.data()),
             static_cast<std::streamsize>(values_.size() * sizeof(double)));
}

ValueTable ValueTable::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw Error(path + " is not a value table");
    if (get<std::uint32_t>(is) != kVersion) throw Error(path + ": unsupported value table version");
    const auto d = get<std::uint32_t>(is);
    const auto res = get<std::uint32_t>(is);
    const auto nq = get<std::uint32_t>(is);
    const auto T = get<std::uint32_t>(is);
    const auto mode = get<std::uint32_t>(is);
    State lo(d), hi(d);
    for (auto& v : lo) v = get<double>(is);
    for (auto& v : hi) v = get<double>(is);
    ValueTable t(Box(lo, hi), static_cast<int>(res), static_cast<int>(nq), static_cast<int>(T),
                 mode == 0 ? Mode::Inf : Mode::Sup);
    is.read(reinterpret_cast<char*>(t.values_.data()), static_cast<std::streamsize>(t.values_.size() * sizeof(double)));
    if (!is) throw Error(path + ": truncated value table");
    return t;
}


namespace {

// Successor stencils f(node, w) for every node and every disturbance in `ws`.
std::vector<Stencil> successor_stencils(const VerificationStructure& vs, const GridSpec& g,
                                        const std::vector<State>& ws, int threads) {
    const std::size_t N = g.num_nodes();
    std::vector<Stencil> out(N * ws.size());
    parallel_for(N, threads, [&](std::size_t i) {
        const State x = g.node(i);
        for (std::size_t j = 0; j < ws.size(); ++j)
            out[i * ws.size() + j] = make_stencil(g.box, g.resolution, vs.model().step(x, ws[j]));
    });
    return out;
}

}  // namespace

double table_value(const ValueTable& table, const VerificationStructure& vs, int t, int q, const State& x1,
                   const State& x2) {
    if (t == table.horizon()) return vs.accepting(x1, x2, q) ? 1.0 : 0.0;
    return table.interpolate(t, vs.dfa().step(q, vs.label(x1, x2)), x1, x2);
}

double node_value(const ValueTable& table, const VerificationStructure& vs, int t, int q, std::size_t i1,
                  std::size_t i2) {
    const State x1 = table.node(i1), x2 = table.node(i2);
    if (t == table.horizon()) return vs.accepting(x1, x2, q) ? 1.0 : 0.0;
    return table.at(t, vs.dfa().step(q, vs.label(x1, x2)), i1, i2);
}

void write_slice_csv(std::ostream& os, const ValueTable& table, const VerificationStructure& vs, int t, int q) {
    if (table.dim() != 1) throw Error("slice export needs one-dimensional states");
    os << "x1,x2,value\n";
    os.precision(17);
    for (std::size_t i = 0; i < table.num_nodes(); ++i)
        for (std::size_t j = 0; j < table.num_nodes(); ++j)
            os << table.node(i)[0] << "," << table.node(j)[0] << "," << node_value(table, vs, t, q, i, j) << "\n";
}

namespace {

// Successor of one node under every disturbance in `ws`: the state and its stencil.
struct Successors {
    std::vector<State> x;
    std::vector<Stencil> st;
};

Successors successors(const VerificationStructure& vs, const GridSpec& g, const std::vector<State>& ws, int threads) {
    const std::size_t N = g.num_nodes(), W = ws.size();
    Successors out{std::vector<State>(N * W), std::vector<Stencil>(N * W)};
    parallel_for(N, threads, [&](std::size_t i) {
        const State x = g.node(i);
        for (std::size_t j = 0; j < W; ++j) {
            out.x[i * W + j] = vs.model().step(x, ws[j]);
            out.st[i * W + j] = make_stencil(g.box, g.resolution, out.x[i * W + j]);
        }
    });
    return out;
}

}  // namespace

ValueTable dp_backward(const VerificationStructure& vs, const GridSpec& grid, Mode mode, const DpOptions& options) {
    grid.validate(vs);
    const int T = vs.horizon();
    const int Q = static_cast<int>(vs.dfa().num_states());
    const std::size_t N = grid.num_nodes();
    const double bytes = static_cast<double>(T + 1) * Q * static_cast<double>(N) * static_cast<double>(N) * 8.0;
    if (bytes > static_cast<double>(options.memory_cap_bytes))
        throw Error("dp: value table needs " + std::to_string(static_cast<long long>(bytes / (1 << 20))) +
                    " MiB, above the cap; use a coarser resolution");

    ValueTable table(grid.box, grid.resolution, Q, T, mode);
    const auto& dfa = vs.dfa();
    for (int q = 0; q < Q; ++q)
        for (std::size_t i1 = 0; i1 < N; ++i1)
            for (std::size_t i2 = 0; i2 < N; ++i2)
                table.at(T, q, i1, i2) = vs.accepting(grid.node(i1), grid.node(i2), q) ? 1.0 : 0.0;

    const auto& quad = grid.quadrature;
    const std::size_t K = quad.nodes.size(), J = grid.candidates.size();
    const auto s1 = successors(vs, grid, quad.nodes, options.threads);
    const auto s2 = successors(vs, grid, grid.candidates, options.threads);
    std::vector<double> sink(static_cast<std::size_t>(Q));
    for (int q = 0; q < Q; ++q) sink[static_cast<std::size_t>(q)] = vs.sink_value(q);

    // Layer t < T holds g_t(x1, x2, q') = opt_{w2} E_{w1} u_{t+1}(f(x1, w1), f(x2, w2), q'),
    // where q' = δ(q, L(x1, x2)) was already taken. Each successor pair gets its own
    // label, so no interpolation mixes automaton states across a label boundary.
    for (int t = T - 1; t >= 0; --t) {
        parallel_for(N, options.threads, [&](std::size_t i1) {
            std::vector<double> acc(static_cast<std::size_t>(Q));
            std::vector<double> best(static_cast<std::size_t>(Q));
            for (std::size_t i2 = 0; i2 < N; ++i2) {
                std::fill(best.begin(), best.end(), mode == Mode::Inf ? INFINITY : -INFINITY);
                for (std::size_t j = 0; j < J; ++j) {
                    const Stencil& b = s2.st[i2 * J + j];
                    if (b.outside) {
                        std::copy(sink.begin(), sink.end(), acc.begin());
                    } else {
                        std::fill(acc.begin(), acc.end(), 0.0);
                        for (std::size_t k = 0; k < K; ++k) {
                            const Stencil& a = s1.st[i1 * K + k];
                            const double wk = quad.weights[k];
                            if (a.outside) {
                                for (int qp = 0; qp < Q; ++qp) acc[qp] += wk * sink[qp];
                                continue;
                            }
                            const State& y1 = s1.x[i1 * K + k];
                            const State& y2 = s2.x[i2 * J + j];
                            const ltlf::Letter l = vs.label(y1, y2);
                            for (int qp = 0; qp < Q; ++qp) {
                                double u;
                                if (t + 1 == T) {
                                    u = vs.accepting(y1, y2, qp) ? 1.0 : 0.0;
                                } else {
                                    u = table.interpolate_stencil(t + 1, dfa.step(qp, l), a, b);
                                }
                                acc[qp] += wk * u;
                            }
                        }
                    }
                    for (int qp = 0; qp < Q; ++qp)
                        best[qp] = mode == Mode::Inf ? std::min(best[qp], acc[qp]) : std::max(best[qp], acc[qp]);
                }
                for (int qp = 0; qp < Q; ++qp) table.at(t, qp, i1, i2) = std::clamp(best[qp], 0.0, 1.0);
            }
        });
    }
    return table;
}

State greedy_w2(const ValueTable& table, const VerificationStructure& vs, const GridSpec& grid,
                const ProductState& v, int t) {
    if (v.sink || t >= vs.horizon()) return grid.candidates.front();
    const int qn = vs.dfa().step(v.q, vs.label(v.x1, v.x2));
    const double sv = vs.sink_value(qn);
    std::vector<State> y1;
    for (const auto& w : grid.quadrature.nodes) y1.push_back(vs.model().step(v.x1, w));
    std::size_t best_j = 0;
    double best = 0.0;
    for (std::size_t j = 0; j < grid.candidates.size(); ++j) {
        const State y2 = vs.model().step(v.x2, grid.candidates[j]);
        double val = 0.0;
        if (!grid.box.contains(y2)) {
            val = sv;
        } else {
            for (std::size_t k = 0; k < y1.size(); ++k)
                val += grid.quadrature.weights[k] *
                       (grid.box.contains(y1[k]) ? table_value(table, vs, t + 1, qn, y1[k], y2) : sv);
        }
        const bool better = table.mode() == Mode::Inf ? val < best : val > best;
        if (j == 0 || better) {
            best = val;
            best_j = j;
        }
    }
    return grid.candidates[best_j];
}

}  // namespace obscert::oracle
