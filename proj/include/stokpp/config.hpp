#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "stokpp/couplings.hpp"
#include "stokpp/field.hpp"
#include "stokpp/integrator.hpp"

namespace stokpp {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "STOKPP_OUTPUT_DIR";

/// Invalid configuration. `field()` names the offending key as section.key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

enum class Command { simulate, duality, extinction, wave, recurrence, upper, couple };

std::string to_string(Command c);
Command parse_command(const std::string& text);

struct PhysicsConfig {
    double theta = 1.0;
    double gamma = 1.0;
    bool noise = true;
    bool superprocess = false;
    std::string profile = "bump center=0 half_width=1 mass=1";
    // Second initial condition: v0 for duality and couple.
    std::string dual_profile = "kink";
    double horizon = 1.0;
    // Observation times: extinction checkpoints, nu_T horizons, recurrence
    // horizons or front-scaling times, depending on the command.
    std::vector<double> times;
    double b_lo = -1.0;
    double b_hi = 1.0;
    double revisit_start = 0.0;
    double level = 10.0;
    UpperKind upper_kind = UpperKind::full;
    std::string phi = "bump center=0 half_width=1 height=1";
    CouplingKind coupling = CouplingKind::monotone;
    double fit_t0 = 0.0;
    double fit_t1 = 1.0;
};

struct NumericsConfig {
    double dx = 0.1;
    double dt = 0.004;
    double x_min = -10.0;
    double x_max = 10.0;
    Boundary left = Boundary::absorbing;
    Boundary right = Boundary::absorbing;
    // Boundaries for the dual_profile side of duality.
    Boundary dual_left = Boundary::absorbing;
    Boundary dual_right = Boundary::absorbing;
    Scheme scheme = Scheme::branching_split;
    double sample_interval = 0.1;
    double profile_width = 10.0;
};

struct MonteCarloConfig {
    std::size_t reps = 100;
    std::uint64_t seed = 1;
    unsigned width = 1;
};

struct OutputConfig {
    std::string dir = "out";
};

struct RunConfig {
    Command command = Command::simulate;
    PhysicsConfig physics;
    NumericsConfig numerics;
    MonteCarloConfig monte_carlo;
    OutputConfig output;

    Grid grid() const { return {numerics.dx, numerics.x_min, numerics.x_max}; }
    StepParams params() const;
    StepParams dual_params() const;
    Coefficients coefficients() const;
};

/// Throws ConfigError naming the first offending field.
void validate(const RunConfig& config);

/// INI text with sections [run], [physics], [numerics], [monte_carlo],
/// [output]. Numbers use the shortest form that reads back exactly, so
/// from_ini(to_ini(c)) == c.
std::string to_ini(const RunConfig& config);
/// Parses and validates. Keys may be omitted (defaults apply); unknown keys
/// and malformed values raise ConfigError.
RunConfig from_ini(const std::string& text);
/// As above, with keys applied on top of `base` instead of the defaults.
RunConfig from_ini(const std::string& text, RunConfig base);
/// Sets "section.key" from text, as if it appeared in the INI file. Does not
/// validate the config as a whole.
void set_value(RunConfig& config, const std::string& dotted_key, const std::string& value);
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

bool operator==(const PhysicsConfig&, const PhysicsConfig&);
bool operator==(const NumericsConfig&, const NumericsConfig&);
bool operator==(const MonteCarloConfig&, const MonteCarloConfig&);
bool operator==(const OutputConfig&, const OutputConfig&);
bool operator==(const RunConfig&, const RunConfig&);

std::string to_string(Boundary b);
Boundary parse_boundary(const std::string& text);
std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& text);
CouplingKind parse_coupling_kind(const std::string& text);

} // namespace stokpp
