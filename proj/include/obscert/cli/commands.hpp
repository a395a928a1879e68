#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "obscert/cli/config.hpp"

namespace obscert::cli {

enum ExitCode { Ok = 0, ConfigFailure = 2, VerificationFailed = 3, InternalFailure = 4 };

struct Options {
    std::string command;
    std::optional<std::string> config_path;  // built-in case study when absent
    std::optional<std::string> formula;      // replaces the property formula
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> certificate;  // validate / bound / report; default <out>/certificate.json
    std::optional<std::string> artifact;     // plotdata: values.bin or certificate JSON
    int t = 0;                               // plotdata time
    int count = 10;                          // simulate: trajectories
    int slice_points = 101;                  // plotdata: points per dimension for certificates
};

/// Raw config JSON for the options: file or built-in text, then --seed,
/// --threads, --out and --formula applied on top.
nlohmann::json raw_config(const Options& o);

/// Runs one subcommand and maps errors to exit codes; failures print one
/// JSON object {"error", "message", "exit_code"} to `err`.
int run(const Options& o, std::ostream& out, std::ostream& err);

/// Individual subcommands. They write artifacts under cfg.out_dir and return an exit code.
int cmd_compile(const RunConfig& cfg, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, int count, std::ostream& out);
int cmd_estimate(const RunConfig& cfg, std::ostream& out);
int cmd_dp(const RunConfig& cfg, std::ostream& out);
int cmd_train(const RunConfig& cfg, std::ostream& out);
int cmd_validate(const RunConfig& cfg, const std::string& certificate, std::ostream& out);
int cmd_bound(const RunConfig& cfg, const std::string& certificate, std::ostream& out);
int cmd_report(const RunConfig& cfg, const std::string& certificate, std::ostream& out);
int cmd_plotdata(const RunConfig& cfg, const std::string& artifact, int t, int points, std::ostream& out);

}  // namespace obscert::cli
