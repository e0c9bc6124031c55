#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace stokpp {

/// Index range [lo, hi] into a Field's cells; empty when lo > hi.
struct Window {
    std::int64_t lo = 0;
    std::int64_t hi = -1;

    bool empty() const noexcept { return lo > hi; }
    std::int64_t size() const noexcept { return empty() ? 0 : hi - lo + 1; }
    friend bool operator==(const Window&, const Window&) = default;
};

/// Spatial discretization: cell spacing and the closed extent [lo, hi] that
/// the simulation domain covers. Cells sit on the lattice k*dx, k integer.
struct Grid {
    double dx = 0.1;
    double lo = -10.0;
    double hi = 10.0;
};

/// Non-negative function sampled on the lattice x = (first_index + j) * dx,
/// j = 0..size()-1, with the window of strictly positive cells tracked.
///
/// Anchoring every field to the same lattice makes shifts exact integer
/// translations and lets fields with equal dx be combined cell by cell.
class Field {
public:
    Field() = default;

    /// Throws std::invalid_argument on dx <= 0 or on a negative / non-finite value.
    Field(double dx, std::int64_t first_index, std::vector<double> values);

    static Field zeros(double dx, std::int64_t first_index, std::size_t size);

    double dx() const noexcept { return dx_; }
    std::int64_t first_index() const noexcept { return first_index_; }
    double origin() const noexcept { return static_cast<double>(first_index_) * dx_; }
    std::size_t size() const noexcept { return values_.size(); }
    double x(std::size_t j) const noexcept { return static_cast<double>(first_index_ + static_cast<std::int64_t>(j)) * dx_; }
    std::int64_t lattice_index(std::size_t j) const noexcept { return first_index_ + static_cast<std::int64_t>(j); }

    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t j) const noexcept { return values_[j]; }

    /// Value at lattice site k; zero outside the stored cells.
    double at_lattice(std::int64_t k) const noexcept;

    const Window& window() const noexcept { return window_; }
    bool is_zero() const noexcept { return window_.empty(); }

    friend bool operator==(const Field&, const Field&) = default;

private:
    double dx_ = 1.0;
    std::int64_t first_index_ = 0;
    std::vector<double> values_;
    Window window_;
};

namespace profile {

/// f0(x) = 1 ^ (-x v 0)
struct KinkF0 {};

/// height * exp(1 - 1/(1 - ((x - center)/half_width)^2)) on |x - center| < half_width.
struct Bump {
    double center = 0.0;
    double half_width = 1.0;
    double height = 1.0;

    /// Bump whose exact integral is `mass`.
    static Bump with_mass(double center, double half_width, double mass);
    double mass() const;
};

/// psi_N = N everywhere.
struct ConstantPsiN {
    double level = 1.0;
};

/// zeta_N: N left of -ramp, linear down to 0 on [-ramp, 0], 0 on x >= 0.
/// ramp <= 0 means "one grid cell" at materialization time.
struct HalfLineZetaN {
    double level = 1.0;
    double ramp = 0.0;
};

/// xi_N(x) = zeta_N(-x).
struct MirroredXiN {
    double level = 1.0;
    double ramp = 0.0;
};

/// Heat kernel G_t0(x - center) = (4 pi t0)^{-1/2} exp(-(x - center)^2 / (4 t0)).
struct GaussianKernel {
    double t0 = 0.25;
    double center = 0.0;
};

} // namespace profile

using Profile = std::variant<profile::KinkF0, profile::Bump, profile::ConstantPsiN, profile::HalfLineZetaN,
                             profile::MirroredXiN, profile::GaussianKernel>;

/// Integral of exp(-1/(1-s^2)) over (-1, 1).
inline constexpr double kBumpIntegral = 0.44399381616807943;

double evaluate(const Profile& p, double x, double dx = 0.0);

/// Closed support interval of a compact profile; nullopt for unbounded ones.
std::optional<std::pair<double, double>> compact_support(const Profile& p);

/// Textual form `kind key=value ...`, e.g. `bump center=0 half_width=1 mass=1`.
Profile parse_profile(const std::string& text);
std::string to_string(const Profile& p);

/// Samples the profile on every lattice site of the grid extent.
/// Throws std::invalid_argument on dx <= 0, an empty extent, or a compact
/// profile whose support does not fit inside the extent.
Field materialize(const Profile& p, const Grid& grid);

double total_mass(const Field& f);
double inner_product(const Field& f, const std::function<double(double)>& g);
/// Lattice-aligned product of two fields; throws if dx differs.
double inner_product(const Field& f, const Field& g);

/// h(x) = f(x + a), with a rounded to the nearest multiple of dx.
Field shift(const Field& f, double a);

/// sup_x f(x) exp(-lambda |x|); throws on lambda <= 0.
double weighted_sup_norm(const Field& f, double lambda);

/// CSV `x,value` for every cell in the window.
void write_csv(const Field& f, std::ostream& out);
/// JSON sidecar {dx, origin, first_index, size, window}.
std::string sidecar_json(const Field& f);
Field read_field(std::istream& csv, const std::string& sidecar);

} // namespace stokpp
