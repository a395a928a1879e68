#include "obscert/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace obscert::cli {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Drops a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

int bracket_balance(const std::string& s) {
    int depth = 0;
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
        if (in_str) continue;
        depth += s[i] == '[';
        depth -= s[i] == ']';
    }
    return depth;
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

}  // namespace

json parse_config_text(const std::string& text) {
    json root = json::object();
    json* section = &root;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    auto fail = [&](const std::string& msg) { throw ConfigError("config line " + std::to_string(lineno) + ": " + msg); };
    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[' && line.find('=') == std::string::npos) {
            if (line.back() != ']') fail("unterminated section header");
            const std::string name = trim(line.substr(1, line.size() - 2));
            section = &root;
            std::stringstream parts(name);
            std::string part;
            while (std::getline(parts, part, '.')) {
                part = trim(part);
                if (!valid_key(part)) fail("bad section name '" + name + "'");
                json& next = (*section)[part];
                if (next.is_null()) next = json::object();
                if (!next.is_object()) fail("section '" + name + "' clashes with a key");
                section = &next;
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) fail("bad key '" + key + "'");
        std::string value = trim(line.substr(eq + 1));
        const int start = lineno;
        while (bracket_balance(value) > 0 && std::getline(is, raw)) {
            ++lineno;
            value += ' ' + trim(strip_comment(raw));
        }
        if (bracket_balance(value) != 0) {
            lineno = start;
            fail("unbalanced brackets in value of '" + key + "'");
        }
        if (section->contains(key)) fail("duplicate key '" + key + "'");
        try {
            (*section)[key] = json::parse(value);
        } catch (const json::exception&) {
            lineno = start;
            fail("cannot parse value of '" + key + "': " + value);
        }
    }
    return root;
}

// ---------------------------------------------------------------------------

namespace {

// Reads keys with defaults, records effective values and rejects unknown keys.
class Section {
public:
    Section(const json& in, std::string path, json& out) : in_(in), path_(std::move(path)), out_(out) {
        if (!in_.is_object()) throw ConfigError("config: [" + path_ + "] must be a table");
    }

    bool has(const std::string& key) const { return in_.contains(key); }

    template <class T>
    T get(const std::string& key, const T& def) {
        used_.insert(key);
        T v = def;
        if (in_.contains(key)) {
            try {
                v = in_.at(key).get<T>();
            } catch (const json::exception&) {
                throw ConfigError("config: " + where(key) + " has the wrong type");
            }
        }
        out_[key] = v;
        return v;
    }

    template <class T>
    std::optional<T> opt(const std::string& key) {
        used_.insert(key);
        if (!in_.contains(key)) return std::nullopt;
        try {
            T v = in_.at(key).get<T>();
            out_[key] = v;
            return v;
        } catch (const json::exception&) {
            throw ConfigError("config: " + where(key) + " has the wrong type");
        }
    }

    double positive(const std::string& key, double def) {
        const double v = get<double>(key, def);
        if (!(v > 0)) throw ConfigError("config: " + where(key) + " must be positive");
        return v;
    }

    int at_least(const std::string& key, int def, int lo) {
        const int v = get<int>(key, def);
        if (v < lo) throw ConfigError("config: " + where(key) + " must be at least " + std::to_string(lo));
        return v;
    }

    Section sub(const std::string& key) {
        used_.insert(key);
        static const json empty = json::object();
        const json& j = in_.contains(key) ? in_.at(key) : empty;
        out_[key] = json::object();
        return Section(j, path_.empty() ? key : path_ + "." + key, out_[key]);
    }

    void finish() const {
        for (auto it = in_.begin(); it != in_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError("config: unknown key " + where(it.key()));
    }

    std::string where(const std::string& key) const { return "'" + (path_.empty() ? key : path_ + "." + key) + "'"; }

private:
    const json& in_;
    std::string path_;
    json& out_;
    std::set<std::string> used_;
};

Box box_from(const json& j, const std::string& what) {
    try {
        const auto pair = j.get<std::vector<State>>();
        if (pair.size() != 2) throw ConfigError("config: " + what + " needs [lo, hi]");
        return Box(pair[0], pair[1]);
    } catch (const json::exception&) {
        throw ConfigError("config: " + what + " must be [[lo...], [hi...]]");
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("config: " + what + ": " + e.what());
    }
}

Region region_from(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ConfigError("config: " + what + " must be a nonempty list of boxes");
    std::vector<Box> boxes;
    for (const auto& b : j) boxes.push_back(box_from(b, what));
    return Region(std::move(boxes));
}

json region_json(const Region& r) {
    json out = json::array();
    for (const auto& b : r.boxes) out.push_back({b.lo, b.hi});
    return out;
}

poss::Distribution read_distribution(Section s, int dw, bool case_defaults) {
    const std::string kind = s.get<std::string>("kind", case_defaults ? "gaussian" : "gaussian");
    const State zeros(static_cast<std::size_t>(dw), 0.0), ones(static_cast<std::size_t>(dw), case_defaults ? 0.4 : 1.0);
    poss::Distribution d = poss::Distribution::gaussian_diag(zeros, ones);
    try {
        if (kind == "gaussian") {
            d = poss::Distribution::gaussian_diag(s.get<State>("mean", zeros), s.get<State>("std", ones));
        } else if (kind == "truncated_gaussian") {
            d = poss::Distribution::truncated_gaussian(s.get<State>("mean", zeros), s.get<State>("std", ones),
                                                       s.positive("sigmas", 3.0));
        } else if (kind == "uniform") {
            d = poss::Distribution::uniform_box(Box(s.get<State>("lo", zeros), s.get<State>("hi", ones)));
        } else if (kind == "discrete") {
            const auto pts = s.opt<std::vector<State>>("points");
            const auto probs = s.opt<std::vector<double>>("probs");
            if (!pts || !probs) throw ConfigError("config: discrete disturbance needs points and probs");
            d = poss::Distribution::discrete(*pts, *probs);
        } else {
            throw ConfigError("config: unknown disturbance kind '" + kind + "'");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("config: disturbance: ") + e.what());
    }
    if (static_cast<int>(d.dim()) != dw) throw ConfigError("config: disturbance dimension does not match disturbance_dim");
    s.finish();
    return d;
}

}  // namespace

RunConfig resolve_config(const json& raw) {
    RunConfig c;
    json out = json::object();
    Section top(raw, "", out);
    static const std::set<std::string> known = {"seed",       "threads",  "system",     "property", "discretization",
                                                "estimation", "training", "validation", "bound",    "output"};
    for (auto it = raw.begin(); it != raw.end(); ++it)
        if (!known.count(it.key())) throw ConfigError("config: unknown key '" + it.key() + "'");
    c.seed = top.get<std::uint64_t>("seed", 0);
    c.threads = top.get<int>("threads", 0);

    // system
    {
        Section s = top.sub("system");
        const std::string preset = s.get<std::string>("preset", "");
        const bool cs = preset == "case_study";
        if (!preset.empty() && !cs) throw ConfigError("config: unknown system preset '" + preset + "'");
        if (s.has("finite")) {
            Section f = s.sub("finite");
            oracle::FiniteInstance inst;
            inst.num_states = f.at_least("num_states", 1, 1);
            inst.num_disturbances = f.at_least("num_disturbances", 1, 1);
            inst.next = f.get<std::vector<int>>("next", {});
            inst.probs = f.get<std::vector<double>>("probs", {});
            inst.initial = f.get<std::vector<int>>("initial", {0});
            inst.outputs = f.get<std::vector<State>>("outputs", {});
            inst.horizon = f.at_least("horizon", 1, 1);
            f.finish();
            try {
                inst.validate();
                c.model = inst.to_poss();
            } catch (const Error& e) {
                throw ConfigError(std::string("config: system.finite: ") + e.what());
            }
            c.finite = inst;
        } else {
            const int dx = s.at_least("state_dim", 1, 1);
            const int dw = s.at_least("disturbance_dim", 1, 1);
            const State lo = s.get<State>("domain_lo", cs ? State{-4.0} : State(dx, -1.0));
            const State hi = s.get<State>("domain_hi", cs ? State{4.0} : State(dx, 1.0));
            Region init;
            if (s.has("initial")) {
                init = region_from(raw.at("system").at("initial"), "system.initial");
                s.get<json>("initial", json());
            } else {
                init = cs ? Region({Box({-2.0}, {2.0})}) : Region({Box(lo, hi)});
            }
            out["system"]["initial"] = region_json(init);
            const auto dyn = s.get<std::vector<std::string>>("dynamics", cs ? std::vector<std::string>{"0.9*x1 + w1"}
                                                                           : std::vector<std::string>{});
            const auto outp = s.get<std::vector<std::string>>("output", cs ? std::vector<std::string>{"x1^2"}
                                                                          : std::vector<std::string>{});
            const int T = s.at_least("horizon", 10, 1);
            const auto dist = read_distribution(s.sub("disturbance"), dw, cs);
            try {
                c.model = poss::Poss(dx, dw, Box(lo, hi), init, dyn, outp, dist, T);
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                throw ConfigError(std::string("config: system: ") + e.what());
            }
        }
        s.finish();
    }

    // property
    {
        Section s = top.sub("property");
        const std::string kind = s.get<std::string>("kind", "current_detect");
        const double eps = s.get<double>("eps", 0.5);
        const double lam = s.get<double>("lam", 0.8);
        const double p = s.get<double>("p", 0.95);
        std::shared_ptr<const Region> secret;
        if (s.has("secret")) {
            secret = std::make_shared<const Region>(region_from(raw.at("property").at("secret"), "property.secret"));
            s.get<json>("secret", json());
        }
        const auto formula = s.opt<std::string>("formula");
        const std::string acc = s.get<std::string>("acceptance", "trailing_label");
        if (acc == "trailing_label")
            c.acceptance = product::Acceptance::TrailingLabel;
        else if (acc == "state_only")
            c.acceptance = product::Acceptance::StateOnly;
        else
            throw ConfigError("config: unknown acceptance '" + acc + "'");
        s.finish();
        try {
            if (kind == "initial_detect") {
                c.property = hyperprops::PropertySpec::initial_detect(eps, lam, p);
            } else if (kind == "current_detect") {
                c.property = hyperprops::PropertySpec::current_detect(eps, lam, p);
            } else if (kind == "initial_opacity" || kind == "current_opacity") {
                if (!secret) throw ConfigError("config: opacity properties need property.secret");
                c.property = kind == "initial_opacity" ? hyperprops::PropertySpec::initial_opacity(eps, p, secret)
                                                       : hyperprops::PropertySpec::current_opacity(eps, p, secret);
            } else if (kind == "custom") {
                if (!formula) throw ConfigError("config: custom properties need property.formula");
                auto h = ltlf::parse(*formula);
                if (secret) h.body = ltlf::bind_secret(h.body, secret);
                c.property = hyperprops::PropertySpec::custom_formula(h, p);
                c.property.secret = secret;
            } else {
                throw ConfigError("config: unknown property kind '" + kind + "'");
            }
            c.property.validate();
        } catch (const ConfigError&) {
            throw;
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(std::string("config: property: ") + e.what());
        }
    }

    {
        Section s = top.sub("discretization");
        auto& d = c.discretization;
        d.trunc_sigmas = s.positive("trunc_sigmas", 3.0);
        d.resolution = s.at_least("resolution", 101, 2);
        d.quad_points = s.at_least("quad_points", 9, 1);
        d.candidates_per_dim = s.at_least("candidates_per_dim", 21, 1);
        d.memory_cap_mb = s.get<std::size_t>("memory_cap_mb", 2048);
        s.finish();
    }
    {
        Section s = top.sub("estimation");
        auto& e = c.estimation;
        e.x0_points = s.at_least("x0_points", 9, 1);
        e.samples = s.get<std::size_t>("samples", 100000);
        if (e.samples == 0) throw ConfigError("config: estimation.samples must be positive");
        e.confidence = s.get<double>("confidence", 0.95);
        if (!(e.confidence > 0 && e.confidence < 1)) throw ConfigError("config: estimation.confidence must lie in (0, 1)");
        e.estimator.cells_per_dim = s.at_least("cells_per_dim", 201, 2);
        e.estimator.dist_points = s.at_least("dist_points", 9, 1);
        e.estimator.trunc_sigmas = c.discretization.trunc_sigmas;
        s.finish();
    }
    {
        Section s = top.sub("validation");
        auto& v = c.validation;
        v.per_dim = s.at_least("per_dim", c.finite ? c.finite->num_states : 50, 1);
        v.t_lo = s.at_least("t_lo", 0, 0);
        v.t_hi = s.get<int>("t_hi", -1);
        v.quadrature = s.get<bool>("quadrature", true);
        v.quad_points = s.at_least("quad_points", c.discretization.quad_points, 1);
        v.candidates_per_dim = s.at_least("candidates_per_dim", c.discretization.candidates_per_dim, 1);
        v.inner_samples = s.at_least("inner_samples", 30, 1);
        v.tol = s.get<double>("tol", 1e-6);
        if (!(v.tol >= 0)) throw ConfigError("config: validation.tol must be nonnegative");
        v.seed = c.seed;
        v.threads = c.threads;
        s.finish();
    }
    {
        Section s = top.sub("bound");
        c.bound.x0_per_dim = s.at_least("x0_points", 201, 1);
        c.bound.x0b_per_dim = s.at_least("x0b_points", 201, 1);
        c.bound.threads = c.threads;
        s.finish();
    }
    {
        Section s = top.sub("training");
        auto& t = c.training;
        const trainer::TrainConfig d;
        t.hidden = s.get<std::vector<int>>("hidden", d.hidden);
        t.slope = s.get<double>("slope", d.slope);
        const std::string qin = s.get<std::string>("q_input", "successor");
        if (qin != "successor" && qin != "state") throw ConfigError("config: training.q_input must be state or successor");
        t.successor_q = qin == "successor";
        t.lambda_term = s.get<double>("lambda_term", d.lambda_term);
        t.lambda_rec = s.get<double>("lambda_rec", d.lambda_rec);
        t.lambda_beta = s.get<double>("lambda_beta", d.lambda_beta);
        t.adversary_samples = s.get<int>("adversary_samples", d.adversary_samples);
        t.inner_samples = s.get<int>("inner_samples", d.inner_samples);
        t.epochs = s.get<int>("epochs", d.epochs);
        t.dataset_size = s.get<int>("dataset_size", d.dataset_size);
        t.trajectory_fraction = s.get<double>("trajectory_fraction", d.trajectory_fraction);
        t.batch_size = s.get<int>("batch_size", d.batch_size);
        t.lr = s.get<double>("lr", d.lr);
        t.lr_min = s.get<double>("lr_min", d.lr_min);
        t.momentum = s.get<double>("momentum", d.momentum);
        t.beta_init = s.get<double>("beta_init", d.beta_init);
        t.warm_start = s.get<bool>("warm_start", d.warm_start);
        t.dp_resolution = s.get<int>("dp_resolution", c.discretization.resolution);
        t.prefit_steps = s.get<int>("prefit_steps", d.prefit_steps);
        t.prefit_batch = s.get<int>("prefit_batch", d.prefit_batch);
        t.prefit_lr = s.get<double>("prefit_lr", d.prefit_lr);
        t.prefit_shift = s.get<double>("prefit_shift", d.prefit_shift);
        t.prefit_uniform_fraction = s.get<double>("prefit_uniform_fraction", d.prefit_uniform_fraction);
        t.overshoot_weight = s.get<double>("overshoot_weight", d.overshoot_weight);
        t.calibration_per_dim = s.get<int>("calibration_per_dim", 2 * c.validation.per_dim - 1);
        t.check_every = s.get<int>("check_every", d.check_every);
        t.target_p = c.property.p;
        t.seed = c.seed;
        t.threads = c.threads;
        t.validation = c.validation;
        t.bound = c.bound;
        s.finish();
        try {
            t.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }
    {
        Section s = top.sub("output");
        c.out_dir = s.get<std::string>("dir", "out");
        s.finish();
    }
    top.finish();
    c.resolved = out;
    // where results go and how many threads compute them do not change them
    json keyed = out;
    keyed.erase("output");
    keyed.erase("threads");
    c.hash = hex64(fnv1a(keyed.dump()));
    return c;
}

json read_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    const std::string text = ss.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') return parse_config_text(text);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
}

RunConfig load_config(const std::string& path) { return resolve_config(read_config_file(path)); }

std::string case_study_config_text() {
    return R"(# Scalar linear system with a quadratic output; current-state detectability.
seed = 7
threads = 0

[system]
preset = "case_study"
state_dim = 1
disturbance_dim = 1
domain_lo = [-4.0]
domain_hi = [4.0]
initial = [[[-2.0], [2.0]]]
dynamics = ["0.9*x1 + w1"]
output = ["x1^2"]
horizon = 10

[system.disturbance]
kind = "gaussian"
mean = [0.0]
std = [0.4]

[property]
kind = "current_detect"
eps = 0.5
lam = 0.8
p = 0.9
acceptance = "trailing_label"

[discretization]
trunc_sigmas = 3.0
resolution = 101
quad_points = 9
candidates_per_dim = 21

[estimation]
x0_points = 9
samples = 100000
confidence = 0.95

[training]
hidden = [64, 64, 32]
q_input = "successor"
epochs = 0
prefit_steps = 60000
prefit_batch = 1024
prefit_lr = 0.002
prefit_uniform_fraction = 0.7
overshoot_weight = 20.0

[validation]
per_dim = 50
quadrature = true

[bound]
x0_points = 201
x0b_points = 201

[output]
dir = "out"
)";
}

ltlf::HyperFormula RunConfig::formula() const { return hyperprops::to_formula(property); }

product::VerificationStructure RunConfig::structure() const {
    return product::VerificationStructure(model, formula(), acceptance, discretization.trunc_sigmas);
}

}  // namespace obscert::cli
