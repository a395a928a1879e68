#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "obscert/certify/checks.hpp"
#include "obscert/hyperprops/estimate.hpp"
#include "obscert/hyperprops/property.hpp"
#include "obscert/oracle/finite.hpp"
#include "obscert/trainer/trainer.hpp"

namespace obscert::cli {

/// Parses the key/table text format into JSON: `[section]` and
/// `[section.sub]` headers, `key = value` with numbers, booleans, quoted
/// strings and (nested) arrays, `#` comments. Throws ConfigError with a line number.
nlohmann::json parse_config_text(const std::string& text);

struct EstimationSettings {
    int x0_points = 9;       // scan points per dimension over X0
    std::size_t samples = 100000;
    double confidence = 0.95;
    hyperprops::EstimatorConfig estimator;
};

struct DiscretizationSettings {
    double trunc_sigmas = 3.0;
    int resolution = 101;
    int quad_points = 9;
    int candidates_per_dim = 21;
    std::size_t memory_cap_mb = 2048;
};

struct RunConfig {
    std::uint64_t seed = 0;
    int threads = 0;
    poss::Poss model;
    std::optional<oracle::FiniteInstance> finite;  // table-backed systems
    hyperprops::PropertySpec property;
    product::Acceptance acceptance = product::Acceptance::TrailingLabel;
    DiscretizationSettings discretization;
    EstimationSettings estimation;
    trainer::TrainConfig training;
    certify::CheckSettings validation;
    certify::BoundSettings bound;
    std::string out_dir = "out";

    nlohmann::json resolved;  // every key with its effective value
    std::string hash;         // fnv1a of the resolved dump without output and threads

    ltlf::HyperFormula formula() const;
    product::VerificationStructure structure() const;
};

/// Validates against the schema (unknown keys rejected) and fills defaults.
RunConfig resolve_config(const nlohmann::json& raw);

/// Raw file contents as JSON: JSON when the text starts with '{', the key/table format otherwise.
nlohmann::json read_config_file(const std::string& path);

/// Reads JSON when the text starts with '{', the key/table format otherwise.
RunConfig load_config(const std::string& path);

/// The case-study configuration in the key/table format.
std::string case_study_config_text();

}  // namespace obscert::cli
