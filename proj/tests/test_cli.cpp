#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "obscert/certify/certificate.hpp"
#include "obscert/cli/commands.hpp"
#include "obscert/oracle/finite.hpp"
#include "toy.hpp"

using namespace obscert;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("obscert_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

fs::path write_config(const fs::path& dir, const std::string& text) {
    const auto p = dir / "run.toml";
    std::ofstream(p) << text;
    return p;
}

struct Run {
    int code;
    std::string out, err;
};

Run run(cli::Options o) {
    std::ostringstream out, err;
    const int code = cli::run(o, out, err);
    return {code, out.str(), err.str()};
}

// Small, fast settings on top of the case study.
const char* kSmall = R"(
seed = 3
[system]
preset = "case_study"
horizon = 2
[discretization]
resolution = 21
quad_points = 5
candidates_per_dim = 5
[estimation]
x0_points = 3
samples = 200
cells_per_dim = 41
[validation]
per_dim = 5
quad_points = 5
candidates_per_dim = 5
[bound]
x0_points = 5
x0b_points = 5
)";

json finite_config(const oracle::FiniteInstance& inst, double p, const std::string& formula) {
    json outs = json::array();
    for (const auto& y : inst.outputs) outs.push_back(y);
    return {{"seed", 1},
            {"system",
             {{"finite",
               {{"num_states", inst.num_states},
                {"num_disturbances", inst.num_disturbances},
                {"next", inst.next},
                {"probs", inst.probs},
                {"initial", inst.initial},
                {"outputs", outs},
                {"horizon", inst.horizon}}}}},
            {"property", {{"kind", "custom"}, {"formula", formula}, {"p", p}}},
            {"estimation", {{"samples", 100}}}};
}

}  // namespace

TEST_CASE("config text parses sections, arrays and comments") {
    const auto j = cli::parse_config_text(R"(
seed = 5   # trailing comment
name = "a # not a comment"
[a]
xs = [1, 2,
      3]
[a.b]
flag = true
m = [[1.5], [-2.0]]
)");
    CHECK(j["seed"] == 5);
    CHECK(j["name"] == "a # not a comment");
    CHECK(j["a"]["xs"] == json({1, 2, 3}));
    CHECK(j["a"]["b"]["flag"] == true);
    CHECK(j["a"]["b"]["m"][1][0] == -2.0);

    auto line_of = [](const std::string& text) {
        try {
            cli::parse_config_text(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(line_of("a = 1\na = 2").find("line 2") != std::string::npos);
    CHECK(line_of("a = 1\n\nb 2").find("line 3") != std::string::npos);
    CHECK(line_of("a = [1, 2").find("line 1") != std::string::npos);
    CHECK(line_of("[bad name]").find("line 1") != std::string::npos);
    CHECK(line_of("x = nope").find("line 1") != std::string::npos);
}

TEST_CASE("config schema: defaults, unknown keys, types, hash") {
    const auto cs = cli::resolve_config(cli::parse_config_text(cli::case_study_config_text()));
    CHECK(cs.formula().to_string() == "forall s2. G out_close(0.5) -> F G state_close(0.8)");
    CHECK(cs.model.horizon() == 10);
    CHECK(cs.validation.per_dim == 50);
    CHECK(cs.training.successor_q);
    CHECK(cs.resolved["training"].contains("lambda_rec"));

    CHECK_THROWS_AS(cli::resolve_config(json{{"bogus", 1}}), ConfigError);
    CHECK_THROWS_AS(cli::resolve_config(json{{"training", {{"epoch", 3}}}}), ConfigError);
    CHECK_THROWS_AS(cli::resolve_config(json{{"system", {{"preset", "case_study"}, {"horizon", "ten"}}}}), ConfigError);
    CHECK_THROWS_AS(cli::resolve_config(json{{"property", {{"kind", "initial_opacity"}}}}), ConfigError);
    CHECK_THROWS_AS(cli::resolve_config(json{{"estimation", {{"confidence", 1.5}}}}), ConfigError);
    CHECK_THROWS_AS(cli::resolve_config(json{{"system", {{"state_dim", 1}, {"disturbance_dim", 1}}}}), ConfigError);

    // the text and JSON encodings of one config agree; output and threads do not enter the hash
    auto raw = cli::parse_config_text(cli::case_study_config_text());
    const auto a = cli::resolve_config(raw);
    raw["output"]["dir"] = "elsewhere";
    raw["threads"] = 3;
    const auto b = cli::resolve_config(json::parse(raw.dump()));
    CHECK(a.hash == b.hash);
    raw["seed"] = 8;
    CHECK(cli::resolve_config(raw).hash != a.hash);

    // a resolved snapshot resolves to itself
    const auto again = cli::resolve_config(a.resolved);
    CHECK(again.hash == a.hash);
}

TEST_CASE("compile command") {
    const auto dir = scratch("compile");
    cli::Options o;
    o.command = "compile";
    o.out = dir.string();
    auto r = run(o);
    CHECK(r.code == cli::Ok);
    const auto dfa = read_json(dir / "dfa.json");
    CHECK(dfa["num_states"].get<int>() <= 8);
    CHECK(dfa["num_states"] == 3);
    CHECK(dfa["config_hash"].get<std::string>().size() == 16);
    CHECK(fs::exists(dir / "config.resolved.json"));
    const auto min = ltlf::minimize(ltlf::compile(cli::resolve_config(cli::raw_config(o)).formula().body));
    CHECK(min.num_states() == dfa["num_states"].get<std::size_t>());

    o.formula = "forall s2. true";
    r = run(o);
    CHECK(r.code == cli::Ok);
    CHECK(read_json(dir / "dfa.json")["num_states"] == 1);

    o.formula = "forall s2. G (out_close(0.5)";
    r = run(o);
    CHECK(r.code == cli::ConfigFailure);
    const auto err = json::parse(r.err);
    CHECK(err["error"] == "parse");
    CHECK(err.contains("position"));
}

TEST_CASE("exit codes and error JSON") {
    const auto dir = scratch("errors");
    cli::Options o;
    o.command = "dp";
    o.out = dir.string();
    o.config_path = write_config(dir, "[training]\nepoch = 3\n").string();
    auto r = run(o);
    CHECK(r.code == cli::ConfigFailure);
    CHECK(json::parse(r.err)["error"] == "config");

    o.config_path = (dir / "missing.toml").string();
    CHECK(run(o).code == cli::ConfigFailure);

    o.config_path = write_config(dir, kSmall).string();
    o.command = "validate";
    o.certificate = (dir / "none.json").string();
    r = run(o);
    CHECK(r.code == cli::InternalFailure);
    CHECK(json::parse(r.err)["exit_code"] == 4);

    o.command = "frobnicate";
    CHECK(run(o).code == cli::ConfigFailure);
}

TEST_CASE("dp, simulate and estimate artifacts are reproducible") {
    const auto d1 = scratch("repro1"), d2 = scratch("repro2");
    for (const auto& cmd : {"dp", "simulate", "estimate"}) {
        cli::Options o;
        o.command = cmd;
        o.count = 3;
        o.config_path = write_config(d1, kSmall).string();
        o.out = d1.string();
        REQUIRE(run(o).code == cli::Ok);
        o.out = d2.string();
        o.threads = 2;
        REQUIRE(run(o).code == cli::Ok);
    }
    for (const auto& name : {"dp.json", "values.bin", "values_t0.csv", "dp_bound.csv", "simulate.json",
                             "trajectory_0.csv", "trajectory_2.csv", "estimate.json", "estimate.csv"}) {
        CAPTURE(name);
        REQUIRE(fs::exists(d1 / name));
        CHECK(slurp(d1 / name) == slurp(d2 / name));
    }
    const auto dp = read_json(d1 / "dp.json");
    CHECK(dp["seed"] == 3);
    CHECK(dp["dp_bound"]["overall"].get<double>() >= 0.0);
    CHECK(slurp(d1 / "trajectory_0.csv").rfind("# config_hash=", 0) == 0);
}

TEST_CASE("report: trivial property is satisfied with bound 1") {
    const auto dir = scratch("trivial");
    cli::Options o;
    o.command = "report";
    o.out = dir.string();
    o.config_path = write_config(dir, std::string(kSmall) + "[property]\nkind = \"custom\"\nformula = \"forall s2. true\"\np = 1.0\n").string();
    const auto r = run(o);
    CHECK(r.code == cli::Ok);
    const auto rep = read_json(dir / "report.json");
    CHECK(rep["verdict"] == "SATISFIED");
    CHECK(rep["certificate_bound"]["overall"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep["certificate"] == "dp table");
}

TEST_CASE("report on finite instances matches the exact verdict") {
    std::mt19937_64 rng(91);
    int satisfied = 0, failed = 0;
    for (int i = 0; i < 6; ++i) {
        const auto inst = testsupport::to_instance(i == 0 ? testsupport::three_state_toy() : testsupport::random_toy(rng));
        const std::string formula = "forall s2. G out_close(0.5) -> F G state_close(0)";
        const product::VerificationStructure vs(inst.to_poss(), ltlf::parse(formula));
        const auto ex = oracle::exact_values(inst, vs, oracle::Mode::Inf);
        double exact = 1.0;
        for (int a : inst.initial)
            for (int b : inst.initial) exact = std::min(exact, ex.at(0, vs.dfa().initial(), a, b));
        for (double p : {exact - 1e-6, exact + 0.01}) {
            if (p > 1.0 || p <= 0.0) continue;
            const auto dir = scratch("finite");
            std::ofstream(dir / "run.json") << finite_config(inst, p, formula).dump();
            cli::Options o;
            o.command = "report";
            o.out = dir.string();
            o.config_path = (dir / "run.json").string();
            const auto r = run(o);
            const bool expect = exact >= p;
            CAPTURE(r.err);
            CHECK(r.code == (expect ? cli::Ok : cli::VerificationFailed));
            const auto rep = read_json(dir / "report.json");
            CHECK(rep["verdict"] == (expect ? "SATISFIED" : "NOT SATISFIED"));
            CHECK(rep["certificate_bound"]["overall"].get<double>() == doctest::Approx(exact).epsilon(1e-9));
            (expect ? satisfied : failed) += 1;
        }
    }
    CHECK(satisfied > 0);
    CHECK(failed > 0);
}

TEST_CASE("plotdata slices") {
    const auto dir = scratch("plot");
    cli::Options o;
    o.config_path = write_config(dir, std::string(kSmall) + "[property]\nkind = \"custom\"\nformula = \"forall s2. false\"\n").string();
    o.out = dir.string();
    o.command = "dp";
    REQUIRE(run(o).code == cli::Ok);
    o.command = "plotdata";
    o.artifact = (dir / "values.bin").string();
    REQUIRE(run(o).code == cli::Ok);
    {
        std::ifstream is(dir / "plot_t0.csv");
        std::string line;
        std::getline(is, line);
        std::getline(is, line);
        CHECK(line == "x1,x2,value");
        int rows = 0;
        while (std::getline(is, line)) {
            CHECK(std::stod(line.substr(line.rfind(',') + 1)) == 0.0);
            ++rows;
        }
        CHECK(rows == 21 * 21);
    }

    // certificate slices equal direct evaluation
    const auto cdir = scratch("plotcert");
    o.config_path = write_config(cdir, kSmall).string();
    o.out = cdir.string();
    const auto cfg = cli::resolve_config(cli::raw_config(o));
    const auto vs = cfg.structure();
    auto cert = certify::constant_certificate(vs, 0.25);
    auto net = std::make_shared<trainer::Mlp>(trainer::Mlp::xavier({1, static_cast<int>(vs.dfa().num_states()), {4}, 0.01, true}, 5));
    cert.mlp = net;
    certify::save_certificate(cert, (cdir / "cert.json").string());
    o.artifact = (cdir / "cert.json").string();
    o.slice_points = 7;
    o.t = 1;
    REQUIRE(run(o).code == cli::Ok);
    std::ifstream is(cdir / "plot_t1.csv");
    std::string line;
    std::getline(is, line);
    std::getline(is, line);
    int rows = 0;
    while (std::getline(is, line)) {
        double x1, x2, v;
        char c;
        std::istringstream ls(line);
        ls >> x1 >> c >> x2 >> c >> v;
        const double direct = certify::eval_certificate(cert, vs, {{x1}, {x2}, vs.dfa().initial(), false}, 1);
        CHECK(v == doctest::Approx(direct).epsilon(1e-12));
        ++rows;
    }
    CHECK(rows == 49);

    o.artifact = (cdir / "absent.json").string();
    CHECK(run(o).code != cli::Ok);
}
