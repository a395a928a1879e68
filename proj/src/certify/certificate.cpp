#include "obscert/certify/certificate.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace obscert::certify {

using product::ProductState;
using product::VerificationStructure;
using json = nlohmann::json;

const char* to_string(CertMode m) { return m == CertMode::Universal ? "universal" : "existential"; }
const char* to_string(Backing b) { return b == Backing::Table ? "table" : "mlp"; }

CertMode mode_for(ltlf::Quantifier q) {
    return q == ltlf::Quantifier::Forall ? CertMode::Universal : CertMode::Existential;
}

void Certificate::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error("certificate: alpha must be positive");
    if (!std::isfinite(beta) || !std::isfinite(offset)) throw Error("certificate: non-finite constants");
    if (!(margin >= 0.0)) throw Error("certificate: margin must be nonnegative");
    if (horizon < 0 || num_q < 1 || state_dim < 1) throw Error("certificate: bad dimensions");
    if (domain.dim() != static_cast<std::size_t>(state_dim)) throw Error("certificate: domain dimension mismatch");
    if (backing == Backing::Table) {
        if (!table) throw Error("certificate: missing table");
        if (table->num_q() != num_q || table->horizon() != horizon || table->dim() != domain.dim())
            throw Error("certificate: table shape mismatch");
    } else {
        if (!mlp) throw Error("certificate: missing network");
        const auto& l = mlp->layout();
        if (l.state_dim != state_dim || l.num_q != num_q) throw Error("certificate: network layout mismatch");
        mlp->check_finite();
    }
}

Certificate blank_certificate(const VerificationStructure& vs, Backing backing) {
    Certificate c;
    c.backing = backing;
    c.mode = mode_for(vs.quantifier());
    c.state_dim = vs.model().state_dim();
    c.num_q = vs.dfa().num_states();
    c.horizon = vs.horizon();
    c.dfa_hash = hex64(vs.dfa().hash());
    c.domain = vs.model().domain();
    return c;
}

Certificate constant_certificate(const VerificationStructure& vs, double value) {
    // A zero network with output bias `value`.
    Certificate c = blank_certificate(vs, Backing::Mlp);
    trainer::Mlp m({c.state_dim, c.num_q, {1}, 0.01});
    m.bias(m.num_layers() - 1)(0) = value;
    c.mlp = std::make_shared<const trainer::Mlp>(std::move(m));
    return c;
}

void check_compatible(const Certificate& cert, const VerificationStructure& vs) {
    cert.validate();
    if (cert.state_dim != vs.model().state_dim()) throw Error("certificate: state dimension does not match the model");
    if (cert.num_q != static_cast<int>(vs.dfa().num_states())) throw Error("certificate: automaton size does not match the formula");
    if (cert.horizon != vs.horizon()) throw Error("certificate: horizon does not match the model");
    if (!cert.dfa_hash.empty() && cert.dfa_hash != hex64(vs.dfa().hash()))
        throw Error("certificate: automaton hash does not match the formula");
    if (cert.domain.lo != vs.model().domain().lo || cert.domain.hi != vs.model().domain().hi)
        throw Error("certificate: domain does not match the model");
}

double sink_certificate_value(const Certificate& cert, double terminal, int t) {
    double c = terminal;
    if (cert.alpha == 1.0) return c - (cert.horizon - t) * cert.beta;
    for (int s = cert.horizon; s > t; --s) c = cert.alpha * (c - cert.beta);
    return c;
}

int network_q(const trainer::MlpLayout& layout, const VerificationStructure& vs, const State& x1, const State& x2,
              int q) {
    return layout.successor_q ? vs.dfa().step(q, vs.label(x1, x2)) : q;
}

double eval_certificate(const Certificate& cert, const VerificationStructure& vs, const ProductState& v, int t) {
    if (t < 0 || t > cert.horizon) throw Error("certificate: time out of range");
    if (v.q < 0 || v.q >= cert.num_q) throw Error("certificate: automaton state out of range");
    if (v.sink) {
        const double a = vs.sink_value(v.q);
        return sink_certificate_value(cert, cert.backing == Backing::Table ? std::max(a - cert.margin, 0.0) : a, t);
    }
    double val;
    if (cert.backing == Backing::Table) {
        const double u = oracle::table_value(*cert.table, vs, t, v.q, v.x1, v.x2);
        val = std::max(u - cert.margin, 0.0);
    } else {
        std::vector<double> in(static_cast<std::size_t>(cert.mlp->layout().input_dim()));
        cert.mlp->encode(cert.domain, cert.horizon, v.x1, v.x2, network_q(cert.mlp->layout(), vs, v.x1, v.x2, v.q), t,
                         in.data());
        val = cert.mlp->forward(in.data());
    }
    return val - cert.offset;
}

std::vector<double> eval_certificate_batch(const Certificate& cert, const VerificationStructure& vs,
                                           const std::vector<ProductState>& states, int t) {
    std::vector<double> out(states.size());
    if (cert.backing == Backing::Table) {
        for (std::size_t i = 0; i < states.size(); ++i) out[i] = eval_certificate(cert, vs, states[i], t);
        return out;
    }
    if (t < 0 || t > cert.horizon) throw Error("certificate: time out of range");
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i].sink)
            out[i] = eval_certificate(cert, vs, states[i], t);
        else
            live.push_back(i);
    }
    if (live.empty()) return out;
    const auto& net = *cert.mlp;
    trainer::Mlp::Matrix in(net.layout().input_dim(), static_cast<Eigen::Index>(live.size()));
    for (std::size_t k = 0; k < live.size(); ++k) {
        const auto& v = states[live[k]];
        if (v.q < 0 || v.q >= cert.num_q) throw Error("certificate: automaton state out of range");
        net.encode(cert.domain, cert.horizon, v.x1, v.x2, network_q(net.layout(), vs, v.x1, v.x2, v.q), t,
                   in.col(static_cast<Eigen::Index>(k)).data());
    }
    const auto y = net.forward(in);
    for (std::size_t k = 0; k < live.size(); ++k) out[live[k]] = y(static_cast<Eigen::Index>(k)) - cert.offset;
    return out;
}

// ---------------------------------------------------------------------------

void save_certificate(const Certificate& cert, const std::string& path) {
    cert.validate();
    json j;
    j["format"] = "obscert-certificate";
    j["version"] = 1;
    j["kind"] = to_string(cert.backing);
    j["mode"] = to_string(cert.mode);
    j["alpha"] = cert.alpha;
    j["beta"] = cert.beta;
    j["offset"] = cert.offset;
    j["margin"] = cert.margin;
    j["dims"] = {{"state", cert.state_dim}, {"num_q", cert.num_q}};
    j["T"] = cert.horizon;
    j["dfa_hash"] = cert.dfa_hash;
    j["domain"] = {{"lo", cert.domain.lo}, {"hi", cert.domain.hi}};
    if (cert.backing == Backing::Table) {
        const std::string blob = path + ".table.bin";
        cert.table->save(blob);
        j["table"] = std::filesystem::path(blob).filename().string();
    } else {
        const auto& l = cert.mlp->layout();
        j["mlp"] = {{"hidden", l.hidden},
                    {"slope", l.slope},
                    {"q_input", l.successor_q ? "successor" : "state"},
                    {"params", std::vector<double>(cert.mlp->params().begin(), cert.mlp->params().end())}};
    }
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    os << j.dump(1) << '\n';
}

Certificate load_certificate(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path);
    json j;
    try {
        j = json::parse(is);
        if (j.at("format") != "obscert-certificate") throw Error("not a certificate file: " + path);
        if (j.at("version") != 1) throw Error("unsupported certificate version in " + path);
        Certificate c;
        const std::string kind = j.at("kind");
        if (kind != "table" && kind != "mlp") throw Error("unknown certificate kind '" + kind + "'");
        c.backing = kind == "table" ? Backing::Table : Backing::Mlp;
        const std::string mode = j.at("mode");
        if (mode != "universal" && mode != "existential") throw Error("unknown certificate mode '" + mode + "'");
        c.mode = mode == "universal" ? CertMode::Universal : CertMode::Existential;
        c.alpha = j.at("alpha");
        c.beta = j.at("beta");
        c.offset = j.at("offset");
        c.margin = j.at("margin");
        c.state_dim = j.at("dims").at("state");
        c.num_q = j.at("dims").at("num_q");
        c.horizon = j.at("T");
        c.dfa_hash = j.at("dfa_hash");
        c.domain = Box(j.at("domain").at("lo").get<State>(), j.at("domain").at("hi").get<State>());
        if (c.backing == Backing::Table) {
            const auto blob = std::filesystem::path(path).parent_path() / j.at("table").get<std::string>();
            c.table = std::make_shared<const oracle::ValueTable>(oracle::ValueTable::load(blob.string()));
        } else {
            const auto& m = j.at("mlp");
            const std::string q_input = m.value("q_input", "state");
            if (q_input != "state" && q_input != "successor") throw Error("unknown q_input '" + q_input + "'");
            trainer::Mlp net({c.state_dim, c.num_q, m.at("hidden").get<std::vector<int>>(), m.at("slope"),
                              q_input == "successor"});
            const auto params = m.at("params").get<std::vector<double>>();
            if (params.size() != net.num_params()) throw Error("certificate: parameter count mismatch");
            net.params().assign(params.begin(), params.end());
            c.mlp = std::make_shared<const trainer::Mlp>(std::move(net));
        }
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw Error("malformed certificate " + path + ": " + e.what());
    }
}

}  // namespace obscert::certify
