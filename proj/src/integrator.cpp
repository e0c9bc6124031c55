#include "stokpp/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "stokpp/markers.hpp"

namespace stokpp {

Coefficients superprocess_mode(Coefficients c) {
    c.gamma = 0.0;
    c.alpha.reset();
    c.beta.reset();
    return c;
}

StepParams::StepParams(double dt, double dx, Boundary left, Boundary right, Scheme scheme)
    : dt_(dt), dx_(dx), left_(left), right_(right), scheme_(scheme) {
    if (!(dt > 0.0) || !(dx > 0.0)) throw std::invalid_argument("StepParams: dt and dx must be positive");
    if (dt > 0.5 * dx * dx) {
        throw StabilityError(fmt::format("StepParams: dt = {} exceeds the explicit stability limit dx^2/2 = {}", dt,
                                         0.5 * dx * dx));
    }
}

std::uint64_t step_count(double duration, double dt) {
    if (duration <= 0.0) return 0;
    return static_cast<std::uint64_t>(std::llround(duration / dt));
}

namespace {

Window merge(const Window& a, const Window& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

Window interior_range(const Window& window, const std::optional<RateField>& alpha, std::size_t n) {
    Window range;
    if (!window.empty()) range = {window.lo - 1, window.hi + 1};
    if (alpha) range = merge(range, alpha->window);
    if (range.empty() || n < 3) return Window{};
    range.lo = std::max<std::int64_t>(range.lo, 1);
    range.hi = std::min<std::int64_t>(range.hi, static_cast<std::int64_t>(n) - 2);
    return range;
}

double rate_at(const std::optional<RateField>& r, std::int64_t j) {
    if (!r || j < r->window.lo || j > r->window.hi) return 0.0;
    return r->values[static_cast<std::size_t>(j)];
}

} // namespace

Stepper::Stepper(const Field& u0, const StepParams& p)
    : params_(p), first_index_(u0.first_index()), values_(u0.values().begin(), u0.values().end()) {
    if (u0.dx() != p.dx()) throw std::invalid_argument("Stepper: field dx differs from step dx");
    if (u0.size() < 3) throw std::invalid_argument("Stepper: domain needs at least three cells");
    if (p.left() == Boundary::absorbing) values_.front() = 0.0;
    if (p.right() == Boundary::absorbing) values_.back() = 0.0;
    window_ = Field(p.dx(), first_index_, values_).window();
}

Window Stepper::active(const Coefficients& c) const { return interior_range(window_, c.alpha, values_.size()); }

void Stepper::apply_euler(const Coefficients& c, const Window& range, std::span<const double> noise) {
    if (range.empty()) return;
    const std::size_t count = static_cast<std::size_t>(range.size());
    scratch_.resize(count);

    const double dt = params_.dt();
    const double inv_dx2 = 1.0 / (params_.dx() * params_.dx());
    const double noise_scale = std::sqrt(dt / params_.dx());
    const double theta = c.theta;
    const double gamma = c.gamma;
    const double* u = values_.data();

    for (std::size_t i = 0; i < count; ++i) {
        const auto j = static_cast<std::size_t>(range.lo) + i;
        const auto jj = static_cast<std::int64_t>(j);
        const double uj = u[j];
        const double drift = (u[j - 1] - 2.0 * uj + u[j + 1]) * inv_dx2 + rate_at(c.alpha, jj) + theta * uj -
                             rate_at(c.beta, jj) * uj - gamma * uj * uj;
        double next = uj + dt * drift;
        if (c.noise_on) next += std::sqrt(uj) * noise[i] * noise_scale;
        scratch_[i] = next > 0.0 ? next : 0.0;
    }
    commit(range);
}

namespace {

// Cell-mass transition of dX = r X dt + sqrt(X) dW over dt:
// X' = Gamma(K) / c with K ~ Poisson(X c e^{r dt}), c = 2r / (e^{r dt} - 1).
struct BranchingLaw {
    double growth;  // e^{r dt}
    double c;

    BranchingLaw(double r, double dt)
        : growth(std::exp(r * dt)), c(r == 0.0 ? 2.0 / dt : 2.0 * r / std::expm1(r * dt)) {}

    double sample(double mass, CellEngine& engine) const {
        const double mean = mass * c * growth;
        const auto k = std::poisson_distribution<std::int64_t>(mean)(engine);
        if (k == 0) return 0.0;
        return std::gamma_distribution<double>(static_cast<double>(k), 1.0)(engine) / c;
    }
};

} // namespace

void Stepper::apply_split(const Coefficients& c, const Window& range, const NoiseStream& noise) {
    if (range.empty()) return;
    const std::size_t count = static_cast<std::size_t>(range.size());
    scratch_.resize(count);

    const double dt = params_.dt();
    const double dx = params_.dx();
    const double lambda = dt / (dx * dx);
    const double keep = 1.0 - 2.0 * lambda;  // >= 0 by the stability limit
    const double gamma_dt = c.gamma * dt;
    const BranchingLaw uniform_law(c.theta, dt);
    const double* u = values_.data();

    for (std::size_t i = 0; i < count; ++i) {
        const auto j = static_cast<std::size_t>(range.lo) + i;
        const auto jj = static_cast<std::int64_t>(j);
        double v = keep * u[j] + lambda * (u[j - 1] + u[j + 1]);
        if (c.alpha) v += dt * rate_at(c.alpha, jj);
        if (gamma_dt != 0.0) v /= 1.0 + gamma_dt * v;
        if (v > 0.0) {
            const double beta = rate_at(c.beta, jj);
            if (!c.noise_on) {
                v *= beta == 0.0 ? uniform_law.growth : std::exp((c.theta - beta) * dt);
            } else {
                CellEngine engine = noise.engine(steps_, first_index_ + jj);
                const double mass = v * dx;
                v = (beta == 0.0 ? uniform_law.sample(mass, engine)
                                 : BranchingLaw(c.theta - beta, dt).sample(mass, engine)) /
                    dx;
            }
        }
        scratch_[i] = v > 0.0 ? v : 0.0;
    }
    commit(range);
}

void Stepper::commit(const Window& range) {
    const std::size_t n = values_.size();
    const std::size_t count = static_cast<std::size_t>(range.size());
    std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(count), values_.begin() + range.lo);

    Window w;
    const auto end = scratch_.begin() + static_cast<std::ptrdiff_t>(count);
    const auto first = std::find_if(scratch_.begin(), end, [](double v) { return v > 0.0; });
    if (first != end) {
        auto last = end - 1;
        while (!(*last > 0.0)) --last;
        w = {range.lo + (first - scratch_.begin()), range.lo + (last - scratch_.begin())};
    }
    // Pinned edge cells keep their value and may be the only positive ones.
    if (values_.front() > 0.0) w = merge(w, Window{0, 0});
    if (values_.back() > 0.0) w = merge(w, Window{static_cast<std::int64_t>(n) - 1, static_cast<std::int64_t>(n) - 1});
    window_ = w;
}

void Stepper::advance(const Coefficients& c, const NoiseStream& noise) {
    const Window range = active(c);
    if (params_.scheme() == Scheme::branching_split) {
        apply_split(c, range, noise);
    } else {
        if (c.noise_on && !range.empty()) {
            noise_.resize(static_cast<std::size_t>(range.size()));
            noise.fill(steps_, first_index_ + range.lo, noise_);
        }
        apply_euler(c, range, noise_);
    }
    ++steps_;
}

Field Stepper::snapshot() const { return Field(params_.dx(), first_index_, values_); }

Window active_range(const Field& u, const Coefficients& c) { return interior_range(u.window(), c.alpha, u.size()); }

Field step(const Field& u, const Coefficients& c, const StepParams& p, std::span<const double> noise) {
    if (u.dx() != p.dx()) throw std::invalid_argument("step: field dx differs from step dx");
    const Window range = active_range(u, c);
    if (c.noise_on && static_cast<std::int64_t>(noise.size()) != range.size()) {
        throw std::invalid_argument(fmt::format("step: expected {} noise draws, got {}", range.size(), noise.size()));
    }
    // Edge cells are not reset here: a single step leaves them as given.
    Stepper s(u, StepParams(p.dt(), p.dx(), Boundary::held, Boundary::held));
    s.apply_euler(c, range, noise);
    return s.snapshot();
}

Observables observe(double t, const Field& u) {
    return {t, total_mass(u), right_marker(u), left_marker(u), exp_marker(u)};
}

Trajectory simulate(const Field& u0, const Coefficients& c, const StepParams& p, double horizon,
                    const SampleSchedule& schedule, const NoiseStream& noise, const Observer& observer) {
    if (!(horizon >= 0.0)) throw std::invalid_argument("simulate: horizon must be >= 0");
    if (!(schedule.interval > 0.0)) throw std::invalid_argument("simulate: sample interval must be positive");

    const std::uint64_t total = step_count(horizon, p.dt());
    const std::uint64_t every = std::max<std::uint64_t>(1, step_count(schedule.interval, p.dt()));
    std::vector<std::uint64_t> snapshot_steps;
    for (double t : schedule.snapshot_times) snapshot_steps.push_back(std::min(total, step_count(t, p.dt())));
    std::sort(snapshot_steps.begin(), snapshot_steps.end());
    auto next_snapshot = snapshot_steps.begin();

    Trajectory traj;
    Stepper stepper(u0, p);
    const Field zero = Field::zeros(p.dx(), u0.first_index(), u0.size());

    auto record = [&](std::uint64_t n, bool sample, bool snap) {
        const double t = static_cast<double>(n) * p.dt();
        if (stepper.is_zero()) {
            if (sample) traj.samples.push_back(observe(t, zero));
            if (snap) traj.snapshots.emplace_back(t, zero);
            return;
        }
        const Field u = stepper.snapshot();
        if (sample) {
            traj.samples.push_back(observe(t, u));
            if (observer) observer(t, u);
        }
        if (snap) traj.snapshots.emplace_back(t, u);
    };

    for (std::uint64_t n = 0;; ++n) {
        if (stepper.is_zero() && !traj.extinction_time) traj.extinction_time = stepper.time();
        const bool sample = (n % every == 0) || n == total;
        bool snap = false;
        while (next_snapshot != snapshot_steps.end() && *next_snapshot == n) {
            snap = true;
            ++next_snapshot;
        }
        if (sample || snap) record(n, sample, snap);
        if (n == total) break;
        if (stepper.is_zero()) {
            // Zero is absorbing: jump straight to the remaining sample points.
            for (std::uint64_t m = n + 1; m <= total; ++m) {
                bool s = (m % every == 0) || m == total;
                bool sn = false;
                while (next_snapshot != snapshot_steps.end() && *next_snapshot == m) {
                    sn = true;
                    ++next_snapshot;
                }
                if (s || sn) record(m, s, sn);
            }
            break;
        }
        stepper.advance(c, noise);
    }
    traj.final_field = stepper.is_zero() ? zero : stepper.snapshot();
    return traj;
}

void write_csv(const Trajectory& traj, std::ostream& out) {
    out << "t,mass,R0,L0,R1\n";
    for (const Observables& o : traj.samples) {
        out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", o.t, o.mass, o.r0, o.l0, o.r1);
    }
}

} // namespace stokpp
