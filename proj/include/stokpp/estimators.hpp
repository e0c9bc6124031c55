#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stokpp/couplings.hpp"
#include "stokpp/field.hpp"
#include "stokpp/integrator.hpp"
#include "stokpp/parallel.hpp"

namespace stokpp {

/// Monte Carlo scalar with a 95% confidence half-width.
struct Estimate {
    double mean = 0.0;
    double half_width = 0.0;
    std::size_t n = 0;
    std::size_t n_conditioned = 0;

    double lower() const noexcept { return mean - half_width; }
    double upper() const noexcept { return mean + half_width; }
    /// Standard error implied by the half-width.
    double standard_error() const noexcept;
};

inline constexpr double kZ95 = 1.96;

/// Sample mean with normal-approximation interval (Welford accumulation, so
/// identical samples give exactly that value and zero width).
Estimate mean_estimate(std::span<const double> samples);
/// Proportion hits/n; normal interval, Wilson interval when hits is 0 or n.
Estimate proportion_estimate(std::size_t hits, std::size_t n);

/// Replicate count, master seed and worker pool for an ensemble.
struct MonteCarlo {
    std::size_t reps = 100;
    std::uint64_t seed = 1;
    Executor executor{1};
};

/// Raised when a conditioned estimator has no surviving replicate.
class NoSurvivors : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---- Laplace functionals and duality -------------------------------------

/// Mean of exp(-2 <u, g>) over the ensemble. Throws on an empty ensemble.
Estimate laplace(std::span<const Field> ensemble, const Field& g);
Estimate laplace(std::span<const Field> ensemble, const std::function<double(double)>& g);

struct DualityResult {
    Estimate forward;   // E exp(-2 <u_t, v0>)
    Estimate backward;  // E exp(-2 <u0, v_t>)
    double gap() const noexcept { return forward.mean - backward.mean; }
    /// Whether the mean +- sigmas * stderr intervals of both sides intersect.
    bool overlaps(double sigmas) const noexcept;
};

/// Runs u from u0 (stream 0) and, independently, v from v0 (stream 1), both
/// to time t, and compares the two Laplace functionals. Each side has its own
/// step parameters because their boundary conditions differ.
DualityResult self_duality_gap(const Field& u0, const StepParams& u_params, const Field& v0,
                               const StepParams& v_params, double t, const Coefficients& c, const MonteCarlo& mc);

// ---- Extinction ------------------------------------------------------------

/// exp(-2 theta m / (1 - e^{-theta t})): the probability that the superprocess
/// with mass creation theta, started from total mass m, is extinct by t.
/// Throws std::invalid_argument on theta <= 0, t <= 0 or mass < 0.
double superprocess_extinction_exact(double theta, double mass, double t);

/// Extinction time (if any, up to `horizon`) of each replicate.
std::vector<std::optional<double>> extinction_times(const Field& u0, const Coefficients& c, const StepParams& p,
                                                    double horizon, const MonteCarlo& mc);
/// Fraction of `times` with extinction at or before t.
Estimate extinction_prob(std::span<const std::optional<double>> times, double t);
Estimate extinction_prob(const Field& u0, const Coefficients& c, const StepParams& p, double t, const MonteCarlo& mc);

// ---- Conditioning on survival ----------------------------------------------

struct ConditionedEnsemble {
    std::vector<Trajectory> survivors;
    std::vector<std::size_t> replicate_ids;
    Estimate survival;
};

/// Replicates with no extinction up to `horizon`. Throws NoSurvivors if none.
ConditionedEnsemble conditioned_ensemble(const Field& g0, const Coefficients& c, const StepParams& p, double horizon,
                                         const SampleSchedule& schedule, const MonteCarlo& mc);

/// Front-aligned, time-averaged profile: cells at offsets -width..+1 from R0.
struct ProfileAverage {
    Field mean;
    std::vector<double> std_error;
    double T = 0.0;
    std::size_t n_conditioned = 0;
    Estimate survival;
};

/// For each horizon T in `horizons`: among replicates alive at T, the average
/// over sample times s in [0, T] of u_s shifted so that R0(s) sits at 0; then
/// the ensemble mean and per-cell standard error. All horizons share one set
/// of paths. Throws NoSurvivors if some horizon has no survivor.
std::vector<ProfileAverage> nu_T_profiles(const Field& g0, const Coefficients& c, const StepParams& p,
                                          std::span<const double> horizons, double sample_interval,
                                          double profile_width, const MonteCarlo& mc);
/// The profiles above together with every replicate's (t, R0) samples and
/// extinction time, so front speeds come from the same paths.
struct WaveEnsemble {
    std::vector<ProfileAverage> profiles;
    std::vector<std::vector<double>> sample_times;
    std::vector<std::vector<double>> fronts;
    std::vector<std::optional<double>> extinction;
};
WaveEnsemble nu_T_ensemble(const Field& g0, const Coefficients& c, const StepParams& p,
                           std::span<const double> horizons, double sample_interval, double profile_width,
                           const MonteCarlo& mc);
ProfileAverage nu_T_profile(const Field& g0, const Coefficients& c, const StepParams& p, double T,
                            double sample_interval, double profile_width, const MonteCarlo& mc);

/// CSV `x,mean,stderr` over all profile cells.
void write_csv(const ProfileAverage& profile, std::ostream& out);

// ---- Fronts ------------------------------------------------------------------

class ExtinctionInWindow : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Least-squares slope of positions against times over samples with t in
/// [t0, t1]. Throws ExtinctionInWindow if a position in the window is -inf,
/// std::invalid_argument if fewer than two samples fall in the window.
double wave_speed(std::span<const double> times, std::span<const double> positions, double t0, double t1);
/// Slope of R0(t).
double wave_speed(const Trajectory& traj, double t0, double t1);

struct MassSpan {
    double t;
    double mass;
    double span;  // R0 - L0, -inf once extinct
};

std::vector<MassSpan> mass_and_span(const Trajectory& traj);

// ---- Recurrence ----------------------------------------------------------------

struct RecurrenceRecord {
    std::optional<double> first_visit;  // first sample t >= revisit_start with mass in B
    std::optional<double> extinction;
};

/// Tracks, per replicate, when the open interval (b_lo, b_hi) first carries
/// mass at a sample time t >= revisit_start. Paths run to `horizon`.
std::vector<RecurrenceRecord> recurrence_records(const Field& g0, double b_lo, double b_hi, const Coefficients& c,
                                                 const StepParams& p, double horizon, double revisit_start,
                                                 double sample_interval, const MonteCarlo& mc);

/// Among replicates alive at `survival_horizon`, the fraction that visited B by
/// `horizon`. Keeping survival_horizon fixed while horizon grows makes the
/// fraction nondecreasing. Throws NoSurvivors if nobody survives.
Estimate recurrence_fraction(std::span<const RecurrenceRecord> records, double horizon, double survival_horizon);

Estimate recurrence_fraction(const Field& g0, double b_lo, double b_hi, const Coefficients& c, const StepParams& p,
                             double horizon, double revisit_start, double sample_interval, const MonteCarlo& mc);

// ---- Upper measures ----------------------------------------------------------

/// theta <phi, 1> / (1 - e^{-theta T}).
double upper_moment_bound(double theta, double phi_mass, double T);

/// <u_T, phi> for u_T drawn from the level-N approximant of `kind`.
Estimate upper_moment(double T, double level, UpperKind kind, const Field& phi, const Coefficients& c,
                      const StepParams& p, const Grid& grid, const MonteCarlo& mc);

struct ScalingRow {
    double T;
    Estimate front;  // E[0 v R0(u_T)]
};

struct ScalingTable {
    std::vector<ScalingRow> rows;
    double slope = 0.0;        // log-log least-squares slope over rows with positive mean
    double slope_stderr = 0.0;
};

/// E[0 v R0(u_T^{*,l})] for every T in `times` (each replicate is one path
/// observed at all times), plus the log-log slope.
ScalingTable front_scaling_probe(std::span<const double> times, double level, const Coefficients& c,
                                 const StepParams& p, const Grid& grid, const MonteCarlo& mc);

/// Two-sided p-value of a two-sample z-test on the means.
double two_sample_p_value(std::span<const double> a, std::span<const double> b);

/// Slope and its standard error from ordinary least squares.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// CSV `name,mean,half_width,n,n_conditioned`.
void write_estimate_header(std::ostream& out);
void write_estimate_row(std::ostream& out, const std::string& name, const Estimate& e);

} // namespace stokpp
