#include "stokpp/markers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stokpp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cells whose coordinate lies in [-N, N], as an index range.
Window clamp_to(const Field& f, double N) {
    const double slack = 1e-9 * f.dx();
    const auto lo = static_cast<std::int64_t>(std::ceil((-N - slack) / f.dx())) - f.first_index();
    const auto hi = static_cast<std::int64_t>(std::floor((N + slack) / f.dx())) - f.first_index();
    Window w{std::max<std::int64_t>(lo, f.window().lo), std::min<std::int64_t>(hi, f.window().hi)};
    if (f.is_zero()) return Window{};
    return w;
}

} // namespace

double right_marker(const Field& f) {
    return f.is_zero() ? -kInf : f.x(static_cast<std::size_t>(f.window().hi));
}

double left_marker(const Field& f) {
    return f.is_zero() ? kInf : f.x(static_cast<std::size_t>(f.window().lo));
}

double exp_marker(const Field& f) {
    if (f.is_zero()) return -kInf;
    const Window& w = f.window();
    const double top = f.x(static_cast<std::size_t>(w.hi));
    double sum = 0.0;
    for (std::int64_t j = w.lo; j <= w.hi; ++j) {
        const auto k = static_cast<std::size_t>(j);
        sum += f[k] * std::exp(f.x(k) - top);
    }
    return top + std::log(f.dx() * sum);
}

double level_marker(const Field& f, double level) {
    const Window& w = f.window();
    for (std::int64_t j = w.hi; j >= w.lo; --j) {
        const auto k = static_cast<std::size_t>(j);
        if (f[k] > level) return f.x(k);
    }
    return -kInf;
}

std::vector<double> truncated_markers(const Field& f, std::span<const double> ascending, double N) {
    if (!(N > 0.0)) throw std::invalid_argument("truncated_marker: N must be positive");
    if (!ascending.empty() && !(ascending.front() >= 0.0))
        throw std::invalid_argument("truncated_marker: mass threshold must be >= 0");
    if (!std::is_sorted(ascending.begin(), ascending.end()))
        throw std::invalid_argument("truncated_markers: thresholds must be ascending");

    std::vector<double> result(ascending.size(), -N);
    const Window w = clamp_to(f, N);
    std::size_t next = 0;
    double tail = 0.0;  // sum of cells strictly right of j, inside [-N, N]
    for (std::int64_t j = w.hi; j >= w.lo && next < ascending.size(); --j) {
        const auto k = static_cast<std::size_t>(j);
        if (f[k] > 0.0) {
            const double tail_mass = f.dx() * tail;
            while (next < ascending.size() && ascending[next] <= tail_mass) result[next++] = std::clamp(f.x(k), -N, N);
        }
        tail += f[k];
    }
    return result;
}

double truncated_marker(const Field& f, double m, double N) {
    const double thresholds[] = {m};
    return truncated_markers(f, thresholds, N).front();
}

double SmoothingKernel::phi(double x) {
    if (x <= -1.0 || x >= 0.0) return 0.0;
    const double s = 2.0 * x + 1.0;
    return (2.0 / kBumpIntegral) * std::exp(-1.0 / (1.0 - s * s));
}

SmoothingKernel::SmoothingKernel(double m0, int nodes) : m0_(m0) {
    if (!(m0 > 0.0)) throw std::invalid_argument("SmoothingKernel: m0 must be positive");
    if (nodes < 1) throw std::invalid_argument("SmoothingKernel: need at least one node");
    const double h = m0 / nodes;
    masses_.resize(static_cast<std::size_t>(nodes));
    weights_.resize(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i) {
        const double m = (i + 0.5) * h;
        masses_[static_cast<std::size_t>(i)] = m;
        weights_[static_cast<std::size_t>(i)] = h * scaled(-m);
        raw_mass_ += weights_[static_cast<std::size_t>(i)];
    }
    for (double& w : weights_) w /= raw_mass_;
}

double smoothed_marker(const Field& f, const SmoothingKernel& k, double N) {
    const auto markers = truncated_markers(f, k.masses(), N);
    double sum = 0.0;
    for (std::size_t i = 0; i < markers.size(); ++i) sum += k.weights()[i] * markers[i];
    // A convex combination; rounding must not push it past its extremes.
    return std::clamp(sum, markers.back(), markers.front());
}

} // namespace stokpp
