#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stokpp/integrator.hpp"
#include "stokpp/markers.hpp"

using namespace stokpp;
using doctest::Approx;

namespace {

Coefficients noiseless(double theta, double gamma) {
    Coefficients c;
    c.theta = theta;
    c.gamma = gamma;
    c.noise_on = false;
    return c;
}

SampleSchedule every(double interval) {
    SampleSchedule s;
    s.interval = interval;
    return s;
}

double peak(const Field& f) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, v);
    return m;
}

// Logistic u' = u - u^2 from u0, closed form.
double logistic(double u0, double t) { return 1.0 / (1.0 + (1.0 / u0 - 1.0) * std::exp(-t)); }

double run_constant(double u0, double t, double dt, Scheme scheme) {
    // Wide enough that the held edges cannot reach the centre by time t.
    const Field start = materialize(profile::ConstantPsiN{u0}, Grid{0.5, -20.0, 20.0});
    const StepParams p(dt, 0.5, Boundary::held, Boundary::held, scheme);
    Stepper s(start, p);
    const NoiseStream noise(1, 0, 0);
    for (std::uint64_t n = 0; n < step_count(t, dt); ++n) s.advance(noiseless(1.0, 1.0), noise);
    return s.values()[start.size() / 2];
}

} // namespace

TEST_CASE("stability bound") {
    CHECK_NOTHROW(StepParams(0.005, 0.1));
    CHECK_THROWS_AS(StepParams(0.0051, 0.1), StabilityError);
    CHECK_THROWS_AS(StepParams(0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(StepParams(0.001, 0.0), std::invalid_argument);
}

TEST_CASE("superprocess mode") {
    Coefficients c;
    c.theta = 2.5;
    const Coefficients s = superprocess_mode(c);
    CHECK(s.theta == 2.5);
    CHECK(s.gamma == 0.0);
    CHECK(s.noise_on);
    const Coefficients twice = superprocess_mode(s);
    CHECK(twice.theta == s.theta);
    CHECK(twice.gamma == s.gamma);
    CHECK(superprocess_mode(Coefficients{}).theta == 1.0);
}

TEST_CASE("step counts") {
    CHECK(step_count(1.0, 0.004) == 250);
    CHECK(step_count(std::log(3.0), 0.001) == 1099);
    CHECK(step_count(0.0, 0.01) == 0);
}

TEST_CASE("zero is absorbing under any noise") {
    const Field zero = Field::zeros(0.1, -20, 41);
    const StepParams p(0.004, 0.1, Boundary::absorbing, Boundary::absorbing, Scheme::euler_maruyama);
    const Window r = active_range(zero, Coefficients{});
    CHECK(r.empty());
    CHECK(step(zero, Coefficients{}, p, {}).is_zero());

    Stepper s(zero, StepParams(0.004, 0.1));
    const NoiseStream noise(9, 0, 0);
    for (int n = 0; n < 50; ++n) s.advance(Coefficients{}, noise);
    CHECK(s.is_zero());
}

TEST_CASE("constant field is stationary without reaction") {
    const Field start = materialize(profile::ConstantPsiN{0.7}, Grid{0.1, -1, 1});
    const StepParams p(0.004, 0.1, Boundary::held, Boundary::held, Scheme::euler_maruyama);
    const Window r = active_range(start, noiseless(0.0, 0.0));
    std::vector<double> noise(static_cast<std::size_t>(r.size()), 0.3);
    const Field next = step(start, noiseless(0.0, 0.0), p, noise);
    for (double v : next.values()) CHECK(v == Approx(0.7).epsilon(1e-15));
}

TEST_CASE("euler-maruyama step matches the explicit formula") {
    const double dx = 0.1, dt = 0.004;
    const Field u(dx, -3, {0.0, 0.2, 1.0, 0.5, 0.0, 0.0, 0.0});
    Coefficients c;
    c.theta = 1.3;
    c.gamma = 0.8;
    const StepParams p(dt, dx, Boundary::absorbing, Boundary::absorbing, Scheme::euler_maruyama);
    const Window r = active_range(u, c);
    CHECK(r == Window{1, 4});
    std::vector<double> xi{0.4, -1.2, 2.0, -30.0};
    const Field v = step(u, c, p, xi);
    for (std::int64_t j = r.lo; j <= r.hi; ++j) {
        const auto k = static_cast<std::size_t>(j);
        const double lap = u[k - 1] - 2 * u[k] + u[k + 1];
        const double drift = lap / (dx * dx) + c.theta * u[k] - c.gamma * u[k] * u[k];
        const double expected = u[k] + dt * drift + std::sqrt(u[k]) * xi[static_cast<std::size_t>(j - r.lo)] * std::sqrt(dt / dx);
        CHECK(v[k] == Approx(std::max(0.0, expected)).epsilon(1e-14));
    }
    CHECK(v[0] == 0.0);
    CHECK(v[6] == 0.0);
    CHECK_THROWS_AS(step(u, c, p, std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST_CASE("spatially constant logistic solution") {
    const double t = std::log(3.0);
    CHECK(logistic(0.5, t) == Approx(0.75).epsilon(1e-14));
    for (Scheme scheme : {Scheme::branching_split, Scheme::euler_maruyama}) {
        for (double dt : {0.01, 0.005}) {
            // ln 3 is not a multiple of dt; the scheme stops at n dt.
            const double reached = static_cast<double>(step_count(t, dt)) * dt;
            CHECK(std::abs(run_constant(0.5, t, dt, scheme) - 0.75) <= dt);
            CHECK(std::abs(run_constant(0.5, t, dt, scheme) - logistic(0.5, reached)) <= 0.5 * dt);
        }
        // First order: halving dt roughly halves the error at a common end time.
        const double e1 = std::abs(run_constant(0.5, 1.0, 0.02, scheme) - logistic(0.5, 1.0));
        const double e2 = std::abs(run_constant(0.5, 1.0, 0.01, scheme) - logistic(0.5, 1.0));
        CHECK(e2 < 0.7 * e1);
        CHECK(e2 > 0.3 * e1);
    }
}

TEST_CASE("heat kernel semigroup") {
    const Field start = materialize(profile::GaussianKernel{0.25, 0.0}, Grid{0.05, -8, 8});
    const StepParams p(0.001, 0.05);
    for (Scheme scheme : {Scheme::branching_split, Scheme::euler_maruyama}) {
        const StepParams q(p.dt(), p.dx(), Boundary::absorbing, Boundary::absorbing, scheme);
        const Trajectory traj = simulate(start, noiseless(0.0, 0.0), q, 0.25, every(0.25), NoiseStream(1, 0, 0));
        const double exact = 1.0 / std::sqrt(4.0 * std::numbers::pi * 0.5);
        CHECK(exact == Approx(0.3989).epsilon(1e-4));
        CHECK(std::abs(peak(traj.final_field) - exact) <= 0.01 * exact);
        CHECK(total_mass(traj.final_field) == Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("boundaries") {
    const Field kink = materialize(profile::KinkF0{}, Grid{0.1, -5, 5});
    Stepper held(kink, StepParams(0.004, 0.1, Boundary::held, Boundary::absorbing));
    Stepper absorbing(kink, StepParams(0.004, 0.1));
    CHECK(absorbing.values()[0] == 0.0);
    const NoiseStream noise(4, 0, 0);
    for (int n = 0; n < 100; ++n) {
        held.advance(Coefficients{}, noise);
        absorbing.advance(Coefficients{}, noise);
    }
    CHECK(held.values()[0] == 1.0);
    CHECK(held.values().back() == 0.0);
    CHECK(absorbing.values()[0] == 0.0);
}

TEST_CASE("support grows at most one cell per step") {
    const Field start(0.1, -50, [] {
        std::vector<double> v(101, 0.0);
        v[50] = 1.0;
        return v;
    }());
    Stepper s(start, StepParams(0.004, 0.1));
    const NoiseStream noise(5, 0, 0);
    for (int n = 1; n <= 20; ++n) {
        s.advance(Coefficients{}, noise);
        if (s.is_zero()) break;
        CHECK(s.window().lo >= 50 - n);
        CHECK(s.window().hi <= 50 + n);
    }
}

TEST_CASE("simulate from zero") {
    const Field zero = Field::zeros(0.1, -10, 21);
    const Trajectory t = simulate(zero, Coefficients{}, StepParams(0.004, 0.1), 1.0, every(0.1), NoiseStream(1, 0, 0));
    REQUIRE(t.extinction_time.has_value());
    CHECK(*t.extinction_time == 0.0);
    CHECK(t.samples.size() == 11);
    for (const Observables& o : t.samples) {
        CHECK(o.mass == 0.0);
        CHECK(o.r0 == -std::numeric_limits<double>::infinity());
        CHECK(o.l0 == std::numeric_limits<double>::infinity());
        CHECK(o.r1 == -std::numeric_limits<double>::infinity());
    }
    std::ostringstream csv;
    write_csv(t, csv);
    CHECK(csv.str().rfind("t,mass,R0,L0,R1\n0,0,-inf,inf,-inf\n", 0) == 0);
}

TEST_CASE("simulate is a pure function of its inputs") {
    const Field u0 = materialize(profile::Bump::with_mass(0.0, 1.0, 1.0), Grid{0.1, -10, 10});
    SampleSchedule s = every(0.1);
    s.snapshot_times = {0.5, 1.0};
    const auto run = [&](std::uint64_t seed) {
        return simulate(u0, Coefficients{}, StepParams(0.004, 0.1), 1.0, s, NoiseStream(seed, 0, 0));
    };
    const Trajectory a = run(7), b = run(7), c = run(8);
    CHECK(a.final_field == b.final_field);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].mass == b.samples[i].mass);
        CHECK(a.samples[i].r0 == b.samples[i].r0);
    }
    CHECK(a.snapshots.size() == 2);
    CHECK(a.snapshots.back().second == a.final_field);
    CHECK(!(a.final_field == c.final_field));
}

TEST_CASE("superprocess mean mass grows like exp(theta t)") {
    // For the branching split scheme the expected cell mass is exactly
    // e^{theta dt} times the post-diffusion mass, and diffusion conserves
    // mass away from the boundaries.
    const Field u0 = materialize(profile::Bump::with_mass(0.0, 1.0, 2.0), Grid{0.2, -15, 15});
    Coefficients c = superprocess_mode(Coefficients{});
    c.theta = 0.7;
    const int reps = 1500;
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        const Trajectory t = simulate(u0, c, StepParams(0.01, 0.2), 1.0, every(1.0), NoiseStream(3, r, 0));
        const double m = total_mass(t.final_field);
        sum += m;
        sum2 += m * m;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - 2.0 * std::exp(0.7)) <= 4.0 * se);
}

TEST_CASE("noiseless front travels at about 2 sqrt(theta)") {
    const Field u0 = materialize(profile::Bump{0.0, 1.0, 1.0}, Grid{0.2, -5, 60});
    const StepParams p(0.01, 0.2);
    SampleSchedule s = every(0.5);
    std::vector<double> ts, xs;
    const Observer track = [&](double t, const Field& u) {
        ts.push_back(t);
        xs.push_back(level_marker(u, 0.5));
    };
    simulate(u0, noiseless(1.0, 1.0), p, 20.0, s, NoiseStream(1, 0, 0), track);
    double n = 0, st = 0, sx = 0, stt = 0, stx = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] < 10.0) continue;
        n += 1;
        st += ts[i];
        sx += xs[i];
        stt += ts[i] * ts[i];
        stx += ts[i] * xs[i];
    }
    const double slope = (n * stx - st * sx) / (n * stt - st * st);
    CHECK(slope > 1.8);
    CHECK(slope < 2.2);
}

TEST_CASE("noiseless mass increases after the transient") {
    const Field u0 = materialize(profile::Bump{0.0, 1.0, 1.0}, Grid{0.1, -30, 30});
    const Trajectory t = simulate(u0, noiseless(1.0, 1.0), StepParams(0.004, 0.1), 5.0, every(0.25), NoiseStream(1, 0, 0));
    for (std::size_t i = 2; i < t.samples.size(); ++i) CHECK(t.samples[i].mass > t.samples[i - 1].mass);
}
