#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "stokpp/markers.hpp"

using namespace stokpp;
using doctest::Approx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Field ones_on(double lo, double hi, double dx) {
    const auto first = static_cast<std::int64_t>(std::llround(lo / dx));
    const auto last = static_cast<std::int64_t>(std::llround(hi / dx));
    return Field(dx, first, std::vector<double>(static_cast<std::size_t>(last - first + 1), 1.0));
}

// Direct transcription of sup{x in [-N, N] : f(x) > 0, mass on (x, N] >= m},
// quadratic in the cell count.
double brute_truncated(const Field& f, double m, double N) {
    const double edge = N + 1e-9 * f.dx();  // the lattice site at N counts as inside
    double best = -N;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double x = f.x(j);
        if (f[j] <= 0.0 || x < -edge || x > edge) continue;
        double tail = 0.0;
        for (std::size_t k = j + 1; k < f.size(); ++k) {
            if (f.x(k) <= edge) tail += f[k] * f.dx();
        }
        if (tail >= m) best = std::max(best, std::clamp(x, -N, N));
    }
    return best;
}

Field random_field(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> cells(1, 120);
    const double dx = 0.05 * (1 + static_cast<int>(u(rng) * 4));
    std::vector<double> v(static_cast<std::size_t>(cells(rng)));
    for (double& x : v) x = u(rng) < 0.35 ? 0.0 : 3.0 * u(rng);
    return Field(dx, static_cast<std::int64_t>(-60 + u(rng) * 60), std::move(v));
}

} // namespace

TEST_CASE("right and left markers") {
    const Field zero = Field::zeros(0.1, -10, 20);
    CHECK(right_marker(zero) == -kInf);
    CHECK(left_marker(zero) == kInf);

    const Field b = materialize(profile::Bump{0.5, 1.5, 1.0}, Grid{0.1, -3, 4});
    CHECK(std::abs(right_marker(b) - 2.0) <= 0.1 + 1e-12);
    CHECK(std::abs(left_marker(b) + 1.0) <= 0.1 + 1e-12);

    const Field single(0.5, -15, {1.0});
    CHECK(right_marker(single) == Approx(-7.5));
    CHECK(left_marker(single) == Approx(-7.5));
}

TEST_CASE("left marker is the mirror of the right marker") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const Field f = random_field(rng);
        std::vector<double> rev(f.values().rbegin(), f.values().rend());
        const auto last = f.lattice_index(f.size() - 1);
        const Field mirrored(f.dx(), -last, std::move(rev));
        if (f.is_zero()) {
            CHECK(left_marker(mirrored) == kInf);
        } else {
            CHECK(left_marker(mirrored) == Approx(-right_marker(f)));
        }
    }
}

TEST_CASE("exponential marker") {
    CHECK(exp_marker(Field::zeros(0.1, 0, 5)) == -kInf);
    const Field f = ones_on(0.0, 1.0, 1e-4);
    CHECK(exp_marker(f) == Approx(std::log(std::numbers::e - 1.0)).epsilon(2e-4));
    CHECK(exp_marker(f) == Approx(0.5413).epsilon(2e-4));

    const Field g = materialize(profile::Bump{0.0, 1.0, 1.0}, Grid{0.1, -5, 5});
    for (double a : {-2.0, 0.7, 3.0}) CHECK(exp_marker(shift(g, -a)) == Approx(exp_marker(g) + a).epsilon(1e-12));

    // Far-right mass does not overflow.
    const Field far(0.5, 2000, {1.0, 1.0});
    CHECK(std::isfinite(exp_marker(far)));
    CHECK(exp_marker(far) == Approx(1000.5 + std::log(0.5 * (1.0 + std::exp(-0.5)))));
}

TEST_CASE("level marker") {
    const Field f(0.5, 0, {3, 2, 1, 0.5, 0.001});
    CHECK(level_marker(f, 0.0) == Approx(2.0));
    CHECK(level_marker(f, 0.9) == Approx(1.0));
    CHECK(level_marker(f, 5.0) == -kInf);
}

TEST_CASE("truncated marker hand values") {
    const double dx = 1e-3;
    const Field f = ones_on(0.0, 2.0, dx);
    CHECK(std::abs(truncated_marker(f, 0.5, 5.0) - 1.5) <= 2 * dx);
    CHECK(truncated_marker(f, 3.0, 5.0) == -5.0);
    CHECK(truncated_marker(f, 0.0, 5.0) == Approx(std::min(right_marker(f), 5.0)));
    CHECK(truncated_marker(f, 0.0, 1.0) == Approx(1.0));
    CHECK(truncated_marker(Field::zeros(0.1, 0, 3), 0.0, 2.0) == -2.0);

    CHECK_THROWS_AS(truncated_marker(f, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(truncated_marker(f, -0.1, 5.0), std::invalid_argument);
}

TEST_CASE("truncated marker agrees with brute force") {
    std::mt19937_64 rng(11);
    const std::vector<double> ms{0.0, 0.01, 0.1, 0.5, 1.0, 4.0};
    for (int i = 0; i < 200; ++i) {
        const Field f = random_field(rng);
        const double N = 1.0 + 0.5 * (i % 7);
        const auto all = truncated_markers(f, ms, N);
        for (std::size_t k = 0; k < ms.size(); ++k) {
            CHECK(truncated_marker(f, ms[k], N) == brute_truncated(f, ms[k], N));
            CHECK(all[k] == brute_truncated(f, ms[k], N));
        }
    }
}

TEST_CASE("truncated marker is nonincreasing in m") {
    std::mt19937_64 rng(12);
    std::vector<double> ms;
    for (int k = 0; k <= 60; ++k) ms.push_back(0.05 * k);
    for (int i = 0; i < 200; ++i) {
        const auto all = truncated_markers(random_field(rng), ms, 4.0);
        CHECK(std::is_sorted(all.rbegin(), all.rend()));
    }
}

TEST_CASE("smoothing kernel") {
    // Simpson oracle for the unit integral of Phi.
    const int n = 20000;
    const double h = 1.0 / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) s += SmoothingKernel::phi(-1.0 + i * h) * (i == 0 || i == n ? 1 : (i % 2 ? 4 : 2));
    CHECK(s * h / 3.0 == Approx(1.0).epsilon(1e-9));
    CHECK(SmoothingKernel::phi(0.1) == 0.0);
    CHECK(SmoothingKernel::phi(-1.1) == 0.0);

    const SmoothingKernel k(0.2);
    CHECK(k.nodes() == 64);
    double total = 0.0;
    for (double w : k.weights()) total += w;
    CHECK(total == Approx(1.0).epsilon(1e-14));
    CHECK(k.raw_mass() == Approx(1.0).epsilon(1e-3));
    CHECK(std::is_sorted(k.masses().begin(), k.masses().end()));
    CHECK(k.masses().front() > 0.0);
    CHECK(k.masses().back() < 0.2);
    CHECK(k.scaled(-0.1) == Approx(SmoothingKernel::phi(-0.5) / 0.2));
}

TEST_CASE("smoothed marker hand values") {
    const SmoothingKernel k(0.1);
    CHECK(smoothed_marker(Field::zeros(0.1, -5, 10), k, 3.0) == -3.0);
    const Field f = ones_on(0.0, 2.0, 1e-3);
    const double r = smoothed_marker(f, k, 5.0);
    CHECK(r >= 1.9 - 1e-3);
    CHECK(r <= 2.0 + 1e-12);
}

TEST_CASE("smoothed marker sandwich on random fields") {
    std::mt19937_64 rng(13);
    for (double m0 : {0.2, 0.05}) {
        const SmoothingKernel k(m0);
        for (int i = 0; i < 300; ++i) {
            const Field f = random_field(rng);
            const double r = smoothed_marker(f, k, 3.0);
            CHECK(r >= truncated_marker(f, m0, 3.0));
            CHECK(r <= truncated_marker(f, 0.0, 3.0));
        }
    }
}
