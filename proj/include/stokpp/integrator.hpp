#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "stokpp/field.hpp"
#include "stokpp/rng.hpp"

namespace stokpp {

/// A space-dependent rate (immigration or annihilation) aligned cell for cell
/// with the field being stepped. Cells outside `window` are zero.
struct RateField {
    std::span<const double> values;
    Window window;
};

/// Coefficients of
///   du = [u_xx + alpha + theta u - beta u - gamma u^2] dt + sqrt(u) dW.
/// alpha/beta default to zero. The spans in a RateField are borrowed and must
/// outlive the step that reads them.
struct Coefficients {
    double theta = 1.0;
    double gamma = 1.0;
    bool noise_on = true;
    std::optional<RateField> alpha;
    std::optional<RateField> beta;
};

/// Drops the overcrowding, immigration and annihilation terms, leaving the
/// superprocess with mass creation theta.
Coefficients superprocess_mode(Coefficients c);

enum class Boundary {
    absorbing,  // edge cell pinned to 0
    held,       // edge cell pinned to its initial value
};

/// How the noise term is discretized.
enum class Scheme {
    /// Per step: explicit diffusion (+ immigration), exact solution of
    /// u' = -gamma u^2, then each cell's mass follows the exact transition
    /// law of dX = (theta - beta) X dt + sqrt(X) dW (Poisson-Gamma mixture).
    /// Reaches the zero state exactly, with the correct probability.
    branching_split,
    /// v = u + dt * drift + sqrt(u) xi sqrt(dt/dx), clipped at 0.
    euler_maruyama,
};

class StabilityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Time and space steps plus per-side boundary handling.
/// Construction enforces dt <= dx^2/2 for the explicit heat stencil.
class StepParams {
public:
    StepParams(double dt, double dx, Boundary left = Boundary::absorbing, Boundary right = Boundary::absorbing,
               Scheme scheme = Scheme::branching_split);

    double dt() const noexcept { return dt_; }
    double dx() const noexcept { return dx_; }
    Boundary left() const noexcept { return left_; }
    Boundary right() const noexcept { return right_; }
    Scheme scheme() const noexcept { return scheme_; }

private:
    double dt_;
    double dx_;
    Boundary left_;
    Boundary right_;
    Scheme scheme_;
};

/// Interior cells a single step touches: the window grown by one cell, merged
/// with the immigration window, clipped to exclude the two edge cells.
Window active_range(const Field& u, const Coefficients& c);

/// One Euler-Maruyama step of `u` (Scheme::euler_maruyama regardless of
/// p.scheme()). `noise` holds one standard normal per cell of
/// active_range(u, c), in order. Edge cells are left as they are.
/// Throws std::invalid_argument on a noise length mismatch or a grid mismatch.
Field step(const Field& u, const Coefficients& c, const StepParams& p, std::span<const double> noise);

/// Stateful stepping of one field, reusing buffers across steps. Randomness
/// for step n at lattice site k is addressed as (n, k) in the NoiseStream, so
/// a run is a pure function of (initial field, coefficients, params, stream).
class Stepper {
public:
    Stepper(const Field& u0, const StepParams& p);

    void advance(const Coefficients& c, const NoiseStream& noise);

    std::uint64_t steps() const noexcept { return steps_; }
    double time() const noexcept { return static_cast<double>(steps_) * params_.dt(); }
    const StepParams& params() const noexcept { return params_; }

    std::span<const double> values() const noexcept { return values_; }
    const Window& window() const noexcept { return window_; }
    bool is_zero() const noexcept { return window_.empty(); }
    double dx() const noexcept { return params_.dx(); }
    std::int64_t first_index() const noexcept { return first_index_; }

    Field snapshot() const;

private:
    friend Field step(const Field&, const Coefficients&, const StepParams&, std::span<const double>);

    Window active(const Coefficients& c) const;
    void apply_euler(const Coefficients& c, const Window& range, std::span<const double> noise);
    void apply_split(const Coefficients& c, const Window& range, const NoiseStream& noise);
    void commit(const Window& range);

    StepParams params_;
    std::int64_t first_index_;
    std::vector<double> values_;
    std::vector<double> scratch_;
    std::vector<double> noise_;
    Window window_;
    std::uint64_t steps_ = 0;
};

/// Per-sample scalar observables. Markers of a zero field are -inf (R0, R1)
/// and +inf (L0).
struct Observables {
    double t = 0.0;
    double mass = 0.0;
    double r0 = 0.0;
    double l0 = 0.0;
    double r1 = 0.0;
};

struct Trajectory {
    std::vector<Observables> samples;
    std::optional<double> extinction_time;
    std::vector<std::pair<double, Field>> snapshots;
    Field final_field;

    bool survived() const noexcept { return !extinction_time.has_value(); }
};

/// Samples are taken every `interval` time units starting at 0 (and at the
/// horizon); snapshots are stored at the listed times, rounded to steps.
struct SampleSchedule {
    double interval = 0.1;
    std::vector<double> snapshot_times;
};

using Observer = std::function<void(double t, const Field& u)>;

/// Runs to `horizon`. Stepping stops once the field is identically zero;
/// later samples are filled with the zero-field observables. The observer,
/// if set, sees the field at every sample time while it is still stepping.
Trajectory simulate(const Field& u0, const Coefficients& c, const StepParams& p, double horizon,
                    const SampleSchedule& schedule, const NoiseStream& noise, const Observer& observer = {});

Observables observe(double t, const Field& u);

/// CSV `t,mass,R0,L0,R1`.
void write_csv(const Trajectory& traj, std::ostream& out);

/// Steps needed to cover `duration` with steps of `dt`.
std::uint64_t step_count(double duration, double dt);

} // namespace stokpp
