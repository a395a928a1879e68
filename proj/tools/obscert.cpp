// obscert: command-line front end.
#include <iostream>

#include <CLI11.hpp>

#include "obscert/cli/commands.hpp"

int main(int argc, char** argv) {
    using obscert::cli::Options;
    CLI::App app{"Verification of probabilistic observational properties with barrier certificates"};
    app.require_subcommand(1);

    Options o;
    std::string config, formula, out, certificate, artifact;
    std::uint64_t seed = 0;
    int threads = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "Config file (key/table text or JSON); built-in case study if omitted");
        sub->add_option("--seed", seed, "Override the config seed");
        sub->add_option("--out", out, "Output directory");
        sub->add_option("--threads", threads, "Worker threads, 0 for all cores");
        sub->add_option("--formula", formula, "Replace the property formula, e.g. \"forall s2. G out_close(0.5)\"");
    };
    const struct {
        const char* name;
        const char* help;
    } commands[] = {
        {"compile", "Compile the property formula to a DFA"},
        {"simulate", "Sample trajectories and write them as CSV"},
        {"estimate", "Monte Carlo estimate of the satisfaction probability"},
        {"dp", "Grid dynamic programming for the reachability values"},
        {"train", "Synthesize a neural certificate"},
        {"validate", "Check a certificate on the dense grid"},
        {"bound", "Probability lower bound from a certificate"},
        {"report", "Aggregate estimate, DP bound and certificate into a verdict"},
        {"plotdata", "CSV slice of a value table or certificate at fixed t"},
    };
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        common(sub);
        const std::string name = c.name;
        if (name == "validate" || name == "bound" || name == "report")
            sub->add_option("--certificate", certificate, "Certificate JSON, default <out>/certificate.json");
        if (name == "simulate") sub->add_option("--count", o.count, "Number of trajectories")->capture_default_str();
        if (name == "plotdata") {
            sub->add_option("--artifact", artifact, "values.bin or certificate JSON");
            sub->add_option("--t", o.t, "Time instant")->capture_default_str();
            sub->add_option("--points", o.slice_points, "Points per dimension for certificates")->capture_default_str();
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : obscert::cli::ConfigFailure;
    }

    o.command = app.get_subcommands().front()->get_name();
    auto* sub = app.get_subcommands().front();
    if (sub->count("--config")) o.config_path = config;
    if (sub->count("--formula")) o.formula = formula;
    if (sub->count("--out")) o.out = out;
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--threads")) o.threads = threads;
    if (!certificate.empty()) o.certificate = certificate;
    if (!artifact.empty()) o.artifact = artifact;
    return obscert::cli::run(o, std::cout, std::cerr);
}
