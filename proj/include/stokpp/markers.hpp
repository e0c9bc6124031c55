#pragma once

#include <span>
#include <vector>

#include "stokpp/field.hpp"

namespace stokpp {

// Markers of an identically zero region use IEEE infinities as sentinels:
// right-type markers return -inf, left_marker returns +inf. Taking
// std::max(0.0, r) then behaves like 0 v R0 without special cases.

/// Coordinate of the rightmost strictly positive cell.
double right_marker(const Field& f);
/// Coordinate of the leftmost strictly positive cell.
double left_marker(const Field& f);
/// ln(integral of e^x f(x) dx), evaluated with a shifted exponent so wide
/// domains do not overflow.
double exp_marker(const Field& f);

/// Rightmost cell whose value exceeds `level`; -inf if there is none.
/// Front tracking for noiseless runs, where strict positivity spreads to the
/// whole domain in one step per cell.
double level_marker(const Field& f, double level);

/// sup{x in [-N, N] : f(x) > 0 and mass of f on (x, N] >= m}, or -N if empty.
/// Throws std::invalid_argument on N <= 0 or m < 0.
double truncated_marker(const Field& f, double m, double N);

/// truncated_marker for each threshold in `ascending` (must be sorted), in one
/// right-to-left sweep.
std::vector<double> truncated_markers(const Field& f, std::span<const double> ascending, double N);

/// Phi_{m0}(x) = Phi(x/m0)/m0 with Phi a normalized C-infinity bump on (-1, 0),
/// discretized for the midpoint rule on (0, m0).
class SmoothingKernel {
public:
    explicit SmoothingKernel(double m0, int nodes = 64);

    double m0() const noexcept { return m0_; }
    int nodes() const noexcept { return static_cast<int>(masses_.size()); }

    /// Phi itself (unit integral, support (-1, 0)).
    static double phi(double x);
    double scaled(double x) const { return phi(x / m0_) / m0_; }

    /// Midpoint nodes in (0, m0), ascending, and their weights Phi_{m0}(-m) dm
    /// rescaled to sum to one.
    std::span<const double> masses() const noexcept { return masses_; }
    std::span<const double> weights() const noexcept { return weights_; }
    /// Midpoint sum of Phi_{m0}(-m) dm before rescaling.
    double raw_mass() const noexcept { return raw_mass_; }

private:
    double m0_;
    std::vector<double> masses_;
    std::vector<double> weights_;
    double raw_mass_ = 0.0;
};

/// Quadrature of the m-integral of Phi_{m0}(-m) R^{m,N}(f) over (0, m0).
/// Always lies between truncated_marker(f, m0, N) and truncated_marker(f, 0, N).
double smoothed_marker(const Field& f, const SmoothingKernel& k, double N);

} // namespace stokpp
