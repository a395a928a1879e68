#include "obscert/cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "obscert/oracle/to_certificate.hpp"

namespace obscert::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Output directory with provenance: every JSON gets config_hash and seed,
// every CSV a leading "# config_hash=... seed=..." line.
class Artifacts {
public:
    explicit Artifacts(const RunConfig& c) : dir_(c.out_dir), hash_(c.hash), seed_(c.seed) {
        fs::create_directories(dir_);
        json snap = c.resolved;
        snap["config_hash"] = hash_;
        std::ofstream os(path("config.resolved.json"));
        os << snap.dump(2) << "\n";
    }

    std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

    void write_json(const std::string& name, json j) const {
        j["config_hash"] = hash_;
        j["seed"] = seed_;
        std::ofstream os(path(name));
        if (!os) throw Error("cannot write " + path(name));
        os << j.dump(2) << "\n";
    }

    std::ofstream csv(const std::string& name) const {
        std::ofstream os(path(name));
        if (!os) throw Error("cannot write " + path(name));
        os << "# config_hash=" << hash_ << " seed=" << seed_ << "\n";
        os.precision(17);
        return os;
    }

    // An earlier artifact from the same resolved config, if any.
    std::optional<json> reuse(const std::string& name) const {
        std::ifstream is(path(name));
        if (!is) return std::nullopt;
        try {
            json j = json::parse(is);
            if (j.value("config_hash", "") == hash_) return j;
        } catch (const json::exception&) {
        }
        return std::nullopt;
    }

private:
    std::string dir_, hash_;
    std::uint64_t seed_;
};

oracle::Mode mode_for(const product::VerificationStructure& vs) {
    return vs.quantifier() == ltlf::Quantifier::Forall ? oracle::Mode::Inf : oracle::Mode::Sup;
}

oracle::GridSpec grid_for(const RunConfig& cfg, const product::VerificationStructure& vs) {
    const auto& d = cfg.discretization;
    return oracle::GridSpec::for_structure(vs, d.resolution, d.quad_points, d.candidates_per_dim);
}

oracle::ValueTable run_dp(const RunConfig& cfg, const product::VerificationStructure& vs) {
    oracle::DpOptions opt;
    opt.memory_cap_bytes = cfg.discretization.memory_cap_mb << 20;
    opt.threads = cfg.threads;
    return oracle::dp_backward(vs, grid_for(cfg, vs), mode_for(vs), opt);
}

json bound_json(const certify::BoundReport& b) {
    return {{"overall", b.overall}, {"worst_x0", b.worst_x0}, {"geometric", b.geometric}, {"points", b.x0.size()}};
}

void write_bound_csv(std::ofstream os, const certify::BoundReport& b) {
    os << "x0,bound\n";
    for (std::size_t i = 0; i < b.x0.size(); ++i) {
        for (double v : b.x0[i]) os << v << ",";
        os << b.bound[i] << "\n";
    }
}

json report_json(const certify::CheckReport& r) {
    std::ostringstream ss;
    certify::write_report_json(ss, r);
    return json::parse(ss.str());
}

void write_validation(const Artifacts& a, const certify::CheckReport& r) {
    a.write_json("validation.json", report_json(r));
    auto os = a.csv("margins.csv");
    certify::write_margins_csv(os, r);
}

json certificate_summary(const certify::Certificate& c) {
    return {{"kind", to_string(c.backing)}, {"mode", to_string(c.mode)}, {"alpha", c.alpha},
            {"beta", c.beta},               {"offset", c.offset},        {"margin", c.margin}};
}

json estimate_all(const RunConfig& cfg, const Artifacts& a) {
    const auto vs = cfg.structure();
    const hyperprops::Observer obs(cfg.model, cfg.estimation.estimator);
    const auto scan = certify::initial_scan(vs, cfg.estimation.x0_points);
    auto os = a.csv("estimate.csv");
    os << "x0,estimate,ci_low,ci_high,n,successes\n";
    json points = json::array();
    double lowest = 1.0, lowest_hi = 1.0;
    State worst;
    for (std::size_t i = 0; i < scan.size(); ++i) {
        auto r = hyperprops::empirical_probability(obs, cfg.model, cfg.property, scan[i], cfg.estimation.samples,
                                                   derive_seed(cfg.seed, i), cfg.threads);
        const auto [lo, hi] = hyperprops::clopper_pearson(r.successes, r.n, cfg.estimation.confidence);
        r.ci_low = lo;
        r.ci_high = hi;
        for (double v : scan[i]) os << v << ",";
        os << r.estimate << "," << r.ci_low << "," << r.ci_high << "," << r.n << "," << r.successes << "\n";
        points.push_back({{"x0", scan[i]},
                          {"estimate", r.estimate},
                          {"ci_low", r.ci_low},
                          {"ci_high", r.ci_high},
                          {"n", r.n},
                          {"successes", r.successes},
                          {"seed", r.seed}});
        if (i == 0 || r.estimate < lowest) {
            lowest = r.estimate;
            lowest_hi = r.ci_high;
            worst = scan[i];
        }
    }
    json j = {{"property", hyperprops::to_string(cfg.property.kind)},
              {"min_estimate", lowest},
              {"min_ci_high", lowest_hi},
              {"worst_x0", worst},
              {"confidence", cfg.estimation.confidence},
              {"estimator", cfg.model.tables() ? "exact" : "grid"},
              {"points", points}};
    a.write_json("estimate.json", j);
    return j;
}

json dp_all(const RunConfig& cfg, const Artifacts& a) {
    const auto vs = cfg.structure();
    const auto table = run_dp(cfg, vs);
    table.save(a.path("values.bin"));
    if (table.dim() == 1) {
        auto os = a.csv("values_t0.csv");
        oracle::write_slice_csv(os, table, vs, 0, vs.dfa().initial());
    }
    // V = u with beta = 0: the bound is the DP value itself over the scans.
    auto cert = certify::blank_certificate(vs, certify::Backing::Table);
    cert.table = std::make_shared<const oracle::ValueTable>(table);
    const auto b = certify::bound(cert, vs, cfg.bound);
    write_bound_csv(a.csv("dp_bound.csv"), b);
    json j = {{"mode", oracle::to_string(table.mode())},
              {"resolution", table.resolution()},
              {"num_q", table.num_q()},
              {"horizon", table.horizon()},
              {"values", "values.bin"},
              {"dp_bound", bound_json(b)}};
    a.write_json("dp.json", j);
    return j;
}

std::string certificate_path(const RunConfig& cfg, const std::string& given) {
    return given.empty() ? (fs::path(cfg.out_dir) / "certificate.json").string() : given;
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_compile(const RunConfig& cfg, std::ostream& out) {
    const Artifacts a(cfg);
    const auto h = cfg.formula();
    const auto dfa = ltlf::compile(h.body);
    {
        std::ofstream os(a.path("dfa.txt"));
        os << "# config_hash=" << cfg.hash << " seed=" << cfg.seed << "\n" << dfa.dump();
    }
    json atoms = json::array();
    for (const auto& at : dfa.atoms().atoms()) atoms.push_back(at.name());
    json states = json::array();
    for (std::size_t q = 0; q < dfa.num_states(); ++q) {
        json next = json::array();
        for (ltlf::Letter l = 0; l < dfa.num_letters(); ++l) next.push_back(dfa.step(static_cast<int>(q), l));
        states.push_back({{"name", dfa.state_name(static_cast<int>(q))},
                          {"accepting", dfa.accepting(static_cast<int>(q))},
                          {"accept_trapped", dfa.accept_trapped(static_cast<int>(q))},
                          {"reject_trapped", dfa.reject_trapped(static_cast<int>(q))},
                          {"next", next}});
    }
    a.write_json("dfa.json", {{"formula", h.to_string()},
                              {"num_states", dfa.num_states()},
                              {"initial", dfa.initial()},
                              {"atoms", atoms},
                              {"states", states},
                              {"dfa_hash", hex64(dfa.hash())}});
    out << h.to_string() << "\n" << dfa.num_states() << " states\n" << dfa.dump();
    return Ok;
}

int cmd_simulate(const RunConfig& cfg, int count, std::ostream& out) {
    if (count < 1) throw ConfigError("simulate: count must be positive");
    const Artifacts a(cfg);
    const auto vs = cfg.structure();
    const hyperprops::Observer obs(cfg.model, cfg.estimation.estimator);
    const auto scan = certify::initial_scan(vs, cfg.estimation.x0_points);
    json runs = json::array();
    int sat = 0;
    for (int i = 0; i < count; ++i) {
        const State& x0 = scan[static_cast<std::size_t>(i) % scan.size()];
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        const auto traj = poss::sample_trajectory(cfg.model, x0, rng);
        const std::string name = "trajectory_" + std::to_string(i) + ".csv";
        auto os = a.csv(name);
        poss::write_trajectory_csv(os, cfg.model, traj);
        const bool ok = hyperprops::satisfies(obs, cfg.property, traj, &vs.dfa());
        sat += ok;
        runs.push_back({{"file", name}, {"x0", x0}, {"satisfies", ok}});
    }
    a.write_json("simulate.json", {{"count", count}, {"satisfied", sat}, {"trajectories", runs}});
    out << count << " trajectories, " << sat << " satisfy the property\n";
    return Ok;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out) {
    const Artifacts a(cfg);
    const json j = estimate_all(cfg, a);
    out << "min estimate " << j["min_estimate"].get<double>() << " at x0 = " << j["worst_x0"].dump() << "\n";
    return Ok;
}

int cmd_dp(const RunConfig& cfg, std::ostream& out) {
    const Artifacts a(cfg);
    const json j = dp_all(cfg, a);
    out << "dp bound " << j["dp_bound"]["overall"].get<double>() << " (" << j["mode"].get<std::string>() << ", "
        << j["resolution"].get<int>() << " nodes per dimension)\n";
    return Ok;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
    const Artifacts a(cfg);
    const auto vs = cfg.structure();
    const auto r = trainer::train(vs, cfg.training, &out);
    certify::save_certificate(r.cert, a.path("certificate.json"));
    {
        auto os = a.csv("train_log.csv");
        trainer::write_log_csv(os, r.log);
    }
    write_validation(a, r.report);
    write_bound_csv(a.csv("bound.csv"), r.bound);
    a.write_json("train.json", {{"status", r.status()},
                                {"certificate", certificate_summary(r.cert)},
                                {"validation", r.report.label},
                                {"bound", bound_json(r.bound)},
                                {"prefit_rmse", r.prefit_rmse},
                                {"epochs_run", r.epochs_run},
                                {"target_p", cfg.training.target_p}});
    out << r.status() << ": beta " << r.cert.beta << ", bound " << r.bound.overall << ", " << r.report.label << "\n";
    return r.certified ? Ok : VerificationFailed;
}

int cmd_validate(const RunConfig& cfg, const std::string& certificate, std::ostream& out) {
    const Artifacts a(cfg);
    const auto vs = cfg.structure();
    const auto cert = certify::load_certificate(certificate_path(cfg, certificate));
    certify::check_compatible(cert, vs);
    const auto r = certify::validate_dense(cert, vs, cfg.validation);
    write_validation(a, r);
    out << r.label << ": " << r.terminal.violations << " terminal and " << r.recursion.violations
        << " recursion violations over " << r.points_checked << " points\n";
    return r.passed() ? Ok : VerificationFailed;
}

int cmd_bound(const RunConfig& cfg, const std::string& certificate, std::ostream& out) {
    const Artifacts a(cfg);
    const auto vs = cfg.structure();
    const auto cert = certify::load_certificate(certificate_path(cfg, certificate));
    certify::check_compatible(cert, vs);
    const auto b = certify::bound(cert, vs, cfg.bound);
    write_bound_csv(a.csv("bound.csv"), b);
    json j = bound_json(b);
    j["p"] = cfg.property.p;
    j["meets_p"] = b.overall >= cfg.property.p;
    a.write_json("bound.json", j);
    out << "bound " << b.overall << " at x0 = " << json(b.worst_x0).dump() << " (p = " << cfg.property.p << ")\n";
    return b.overall >= cfg.property.p ? Ok : VerificationFailed;
}

int cmd_report(const RunConfig& cfg, const std::string& certificate, std::ostream& out) {
    const Artifacts a(cfg);
    const auto vs = cfg.structure();
    json est = a.reuse("estimate.json").value_or(json());
    if (est.is_null()) est = estimate_all(cfg, a);
    json dp = a.reuse("dp.json").value_or(json());
    if (dp.is_null()) dp = dp_all(cfg, a);

    // Certificate from disk, otherwise the table certificate of the DP values.
    const std::string path = certificate_path(cfg, certificate);
    certify::Certificate cert;
    std::string source;
    if (fs::exists(path)) {
        cert = certify::load_certificate(path);
        source = path;
    } else {
        const auto table = oracle::ValueTable::load(a.path("values.bin"));
        cert = oracle::table_to_certificate(table, vs, 0.0, cfg.validation);
        certify::save_certificate(cert, a.path("report_certificate.json"));
        source = "dp table";
    }
    certify::check_compatible(cert, vs);
    const auto check = certify::validate_dense(cert, vs, cfg.validation);
    write_validation(a, check);
    const auto b = certify::bound(cert, vs, cfg.bound);
    write_bound_csv(a.csv("bound.csv"), b);

    const bool satisfied = check.passed() && b.overall >= cfg.property.p;
    const std::string verdict = satisfied ? "SATISFIED" : "NOT SATISFIED";
    a.write_json("report.json", {{"verdict", verdict},
                                 {"property", cfg.formula().to_string()},
                                 {"p", cfg.property.p},
                                 {"certificate", source},
                                 {"certificate_summary", certificate_summary(cert)},
                                 {"certificate_bound", bound_json(b)},
                                 {"validation", report_json(check)},
                                 {"dp_bound", dp["dp_bound"]["overall"]},
                                 {"empirical_estimate", est["min_estimate"]},
                                 {"empirical_ci_high", est["min_ci_high"]}});
    out << verdict << ": certificate bound " << b.overall << " vs p = " << cfg.property.p << " (" << check.label
        << "), dp bound " << dp["dp_bound"]["overall"].get<double>() << ", empirical estimate "
        << est["min_estimate"].get<double>() << " (advisory)\n";
    return satisfied ? Ok : VerificationFailed;
}

int cmd_plotdata(const RunConfig& cfg, const std::string& artifact, int t, int points, std::ostream& out) {
    const Artifacts a(cfg);
    const auto vs = cfg.structure();
    const std::string path = artifact.empty() ? certificate_path(cfg, "") : artifact;
    if (!fs::exists(path)) throw Error("plotdata: artifact not found: " + path);
    if (t < 0 || t > vs.horizon()) throw ConfigError("plotdata: t must lie in [0, T]");
    const int q0 = vs.dfa().initial();
    const std::string name = "plot_t" + std::to_string(t) + ".csv";
    auto os = a.csv(name);
    if (fs::path(path).extension() == ".bin") {
        oracle::write_slice_csv(os, oracle::ValueTable::load(path), vs, t, q0);
    } else {
        const auto cert = certify::load_certificate(path);
        certify::check_compatible(cert, vs);
        if (cert.state_dim != 1) throw Error("plotdata: slices need one-dimensional states");
        if (points < 2) throw ConfigError("plotdata: need at least two points per dimension");
        const auto xs = linspace(cert.domain.lo[0], cert.domain.hi[0], points);
        std::vector<product::ProductState> batch;
        for (double x1 : xs)
            for (double x2 : xs) batch.push_back({{x1}, {x2}, q0, false});
        const auto vals = certify::eval_certificate_batch(cert, vs, batch, t);
        os << "x1,x2,value\n";
        for (std::size_t i = 0; i < batch.size(); ++i)
            os << batch[i].x1[0] << "," << batch[i].x2[0] << "," << vals[i] << "\n";
    }
    out << "wrote " << a.path(name) << "\n";
    return Ok;
}

// ---------------------------------------------------------------------------

json raw_config(const Options& o) {
    json raw = o.config_path ? read_config_file(*o.config_path) : parse_config_text(case_study_config_text());
    if (!raw.is_object()) throw ConfigError("config must be a table");
    if (o.seed) raw["seed"] = *o.seed;
    if (o.threads) raw["threads"] = *o.threads;
    if (o.out) raw["output"]["dir"] = *o.out;
    if (o.formula) {
        raw["property"]["kind"] = "custom";
        raw["property"]["formula"] = *o.formula;
    }
    return raw;
}

int run(const Options& o, std::ostream& out, std::ostream& err) {
    auto fail = [&](const char* kind, const std::string& msg, int code, json extra = json::object()) {
        extra["error"] = kind;
        extra["message"] = msg;
        extra["exit_code"] = code;
        err << extra.dump() << "\n";
        return code;
    };
    try {
        const RunConfig cfg = resolve_config(raw_config(o));
        set_default_threads(cfg.threads);
        const std::string cert = o.certificate.value_or("");
        if (o.command == "compile") return cmd_compile(cfg, out);
        if (o.command == "simulate") return cmd_simulate(cfg, o.count, out);
        if (o.command == "estimate") return cmd_estimate(cfg, out);
        if (o.command == "dp") return cmd_dp(cfg, out);
        if (o.command == "train") return cmd_train(cfg, out);
        if (o.command == "validate") return cmd_validate(cfg, cert, out);
        if (o.command == "bound") return cmd_bound(cfg, cert, out);
        if (o.command == "report") return cmd_report(cfg, cert, out);
        if (o.command == "plotdata") return cmd_plotdata(cfg, o.artifact.value_or(""), o.t, o.slice_points, out);
        return fail("config", "unknown command '" + o.command + "'", ConfigFailure);
    } catch (const ParseError& e) {
        return fail("parse", e.what(), ConfigFailure, {{"position", e.position()}});
    } catch (const ConfigError& e) {
        return fail("config", e.what(), ConfigFailure);
    } catch (const NumericError& e) {
        return fail("numeric", e.what(), InternalFailure);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), InternalFailure);
    }
}

}  // namespace obscert::cli
