#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vex/grid.hpp"
#include "vex/ineq.hpp"
#include "vex/transport.hpp"
#include "vex/varexp.hpp"

namespace vex::cli {

inline constexpr const char* kVersion = "0.1.0";
// Default output directory when --out is not given.
inline constexpr const char* kOutputDirEnvVar = "VEXLAB_OUT";

struct GridSpec {
    int dimension = 2;
    std::vector<double> origin;
    std::vector<double> extent;
    std::vector<int> resolution;
    bool half_space = false;
};

enum class ExponentKind { Constant, Linear, BumpPerturbation };

struct ExponentSpec {
    ExponentKind kind = ExponentKind::Constant;
    double value = 1.5;                // constant
    double base = 1.5;                 // linear, bump-perturbation
    std::vector<double> slope;         // linear
    double amplitude = 0.0;            // bump-perturbation
    std::vector<double> center;        // bump-perturbation
    double radius = 1.0;               // bump-perturbation
};

struct FamilySpec {
    int count = 4;
    std::uint64_t seed = 42;
    double radius_min = 0.5;
    double radius_max = 1.0;
    double power = 1.0;
};

struct TransportSpec {
    transport::OtMethod method = transport::OtMethod::Exact;
    double epsilon = 1e-2;
};

struct ExperimentConfig {
    GridSpec grid;
    ExponentSpec exponent;
    FamilySpec family;
    double s = 4.0;
    double r = 4.0;
    std::vector<double> k_sweep{1.0, 2.0, 4.0, 8.0};
    int instances = 10;  // randomized-instance count for holder / log-lemma sweeps
    TransportSpec transport;
    double tolerance = 1e-8;
    double scaling_tolerance = 1e-6;
    std::string output_dir;
};

// Parse + validate against the documented schema. Unknown keys and physically
// inadmissible values (p_+ >= n, s <= n, k < 1, ...) are hard errors with a
// field-path diagnostic.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string config_schema();

struct SuiteResult {
    std::string suite;
    std::uint64_t seed = 0;
    std::string version;
    std::string grid_digest;
    std::vector<ineq::InequalityReport> reports;
    std::map<std::string, double> timings_ms;  // metadata only, not in CSV

    bool pass() const {
        for (const auto& r : reports)
            if (!r.pass()) return false;
        return true;
    }
};

// Runs the named suite (holder | scaling | transport | key-estimate |
// log-lemma | sobolev | trace | all) on a bounded worker pool; reports are
// collected in declaration order, and per-task errors become failing reports
// instead of aborting sibling checks.
SuiteResult run_suite(const ExperimentConfig& config, const std::string& suite, int jobs = 1);

std::string result_to_json(const SuiteResult& result);
SuiteResult result_from_json(const std::string& json_text);
std::string result_to_csv(const SuiteResult& result);

// Writes <suite>.json / <suite>.csv into dir; format is "json", "csv" or "both".
void emit_report(const SuiteResult& result, const std::string& dir, const std::string& format);

}  // namespace vex::cli
