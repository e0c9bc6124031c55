#include "stokpp/field.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

namespace stokpp {

namespace {

Window scan_window(std::span<const double> v) {
    Window w;
    const auto first = std::find_if(v.begin(), v.end(), [](double x) { return x > 0.0; });
    if (first == v.end()) return w;
    const auto last = std::find_if(v.rbegin(), v.rend(), [](double x) { return x > 0.0; });
    w.lo = first - v.begin();
    w.hi = static_cast<std::int64_t>(v.size()) - 1 - (last - v.rbegin());
    return w;
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double ramp_down(double level, double ramp, double x) {
    if (x >= 0.0) return 0.0;
    if (x <= -ramp) return level;
    return level * (-x / ramp);
}

} // namespace

Field::Field(double dx, std::int64_t first_index, std::vector<double> values)
    : dx_(dx), first_index_(first_index), values_(std::move(values)) {
    if (!(dx > 0.0) || !std::isfinite(dx)) throw std::invalid_argument("Field: dx must be positive");
    for (double v : values_) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("Field: values must be finite and >= 0");
    }
    window_ = scan_window(values_);
}

Field Field::zeros(double dx, std::int64_t first_index, std::size_t size) {
    return Field(dx, first_index, std::vector<double>(size, 0.0));
}

double Field::at_lattice(std::int64_t k) const noexcept {
    const std::int64_t j = k - first_index_;
    if (j < 0 || j >= static_cast<std::int64_t>(values_.size())) return 0.0;
    return values_[static_cast<std::size_t>(j)];
}

profile::Bump profile::Bump::with_mass(double center, double half_width, double mass) {
    if (!(half_width > 0.0)) throw std::invalid_argument("Bump: half_width must be positive");
    return {center, half_width, mass / (half_width * std::numbers::e * kBumpIntegral)};
}

double profile::Bump::mass() const { return height * half_width * std::numbers::e * kBumpIntegral; }

double evaluate(const Profile& p, double x, double dx) {
    return std::visit(
        overloaded{
            [&](const profile::KinkF0&) { return x < 0.0 ? std::min(1.0, -x) : 0.0; },
            [&](const profile::Bump& b) {
                const double s = (x - b.center) / b.half_width;
                if (b.height == 0.0 || std::abs(s) >= 1.0) return 0.0;
                return b.height * std::exp(1.0 - 1.0 / (1.0 - s * s));
            },
            [&](const profile::ConstantPsiN& c) { return c.level; },
            [&](const profile::HalfLineZetaN& z) { return ramp_down(z.level, z.ramp > 0.0 ? z.ramp : dx, x); },
            [&](const profile::MirroredXiN& z) { return ramp_down(z.level, z.ramp > 0.0 ? z.ramp : dx, -x); },
            [&](const profile::GaussianKernel& g) {
                const double r = x - g.center;
                return std::exp(-r * r / (4.0 * g.t0)) / std::sqrt(4.0 * std::numbers::pi * g.t0);
            },
        },
        p);
}

std::optional<std::pair<double, double>> compact_support(const Profile& p) {
    if (const auto* b = std::get_if<profile::Bump>(&p)) {
        if (b->height == 0.0) return std::pair{b->center, b->center};
        return std::pair{b->center - b->half_width, b->center + b->half_width};
    }
    if (const auto* c = std::get_if<profile::ConstantPsiN>(&p); c && c->level == 0.0) return std::pair{0.0, 0.0};
    return std::nullopt;
}

Profile parse_profile(const std::string& text) {
    std::istringstream in(text);
    std::string kind;
    in >> kind;
    std::unordered_map<std::string, double> kv;
    std::string token;
    while (in >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("profile: expected key=value, got '" + token + "'");
        try {
            kv[token.substr(0, eq)] = std::stod(token.substr(eq + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("profile: bad number in '" + token + "'");
        }
    }
    auto get = [&](const char* key, double fallback) {
        const auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        const double v = it->second;
        kv.erase(it);
        return v;
    };
    Profile result;
    if (kind == "kink") {
        result = profile::KinkF0{};
    } else if (kind == "bump") {
        const double center = get("center", 0.0);
        const double half_width = get("half_width", 1.0);
        if (kv.count("mass") && kv.count("height")) throw std::invalid_argument("profile: bump takes mass or height, not both");
        if (kv.count("mass")) {
            result = profile::Bump::with_mass(center, half_width, get("mass", 1.0));
        } else {
            result = profile::Bump{center, half_width, get("height", 1.0)};
        }
    } else if (kind == "psi") {
        result = profile::ConstantPsiN{get("level", 1.0)};
    } else if (kind == "zeta") {
        result = profile::HalfLineZetaN{get("level", 1.0), get("ramp", 0.0)};
    } else if (kind == "xi") {
        result = profile::MirroredXiN{get("level", 1.0), get("ramp", 0.0)};
    } else if (kind == "gaussian") {
        result = profile::GaussianKernel{get("t0", 0.25), get("center", 0.0)};
    } else if (kind == "zero") {
        result = profile::Bump{0.0, 1.0, 0.0};
    } else {
        throw std::invalid_argument("profile: unknown kind '" + kind + "'");
    }
    if (!kv.empty()) throw std::invalid_argument("profile: unknown parameter '" + kv.begin()->first + "' for " + kind);
    return result;
}

std::string to_string(const Profile& p) {
    return std::visit(
        overloaded{
            [](const profile::KinkF0&) { return std::string("kink"); },
            [](const profile::Bump& b) {
                return fmt::format("bump center={:.17g} half_width={:.17g} height={:.17g}", b.center, b.half_width,
                                   b.height);
            },
            [](const profile::ConstantPsiN& c) { return fmt::format("psi level={:.17g}", c.level); },
            [](const profile::HalfLineZetaN& z) { return fmt::format("zeta level={:.17g} ramp={:.17g}", z.level, z.ramp); },
            [](const profile::MirroredXiN& z) { return fmt::format("xi level={:.17g} ramp={:.17g}", z.level, z.ramp); },
            [](const profile::GaussianKernel& g) {
                return fmt::format("gaussian t0={:.17g} center={:.17g}", g.t0, g.center);
            },
        },
        p);
}

Field materialize(const Profile& p, const Grid& grid) {
    if (!(grid.dx > 0.0)) throw std::invalid_argument("materialize: dx must be positive");
    if (!(grid.hi > grid.lo)) throw std::invalid_argument("materialize: empty domain extent");
    const auto first = static_cast<std::int64_t>(std::ceil(grid.lo / grid.dx - 1e-9));
    const auto last = static_cast<std::int64_t>(std::floor(grid.hi / grid.dx + 1e-9));
    if (last < first) throw std::invalid_argument("materialize: extent holds no lattice site");
    if (const auto support = compact_support(p); support && support->first < support->second) {
        const double slack = 1e-9 * grid.dx;
        if (support->first < grid.lo - slack || support->second > grid.hi + slack)
            throw std::invalid_argument("materialize: domain extent does not contain the profile support");
    }
    std::vector<double> values(static_cast<std::size_t>(last - first + 1));
    for (std::size_t j = 0; j < values.size(); ++j) {
        values[j] = evaluate(p, static_cast<double>(first + static_cast<std::int64_t>(j)) * grid.dx, grid.dx);
    }
    return Field(grid.dx, first, std::move(values));
}

double total_mass(const Field& f) {
    const Window& w = f.window();
    double sum = 0.0;
    for (std::int64_t j = w.lo; j <= w.hi; ++j) sum += f[static_cast<std::size_t>(j)];
    return f.dx() * sum;
}

double inner_product(const Field& f, const std::function<double(double)>& g) {
    const Window& w = f.window();
    double sum = 0.0;
    for (std::int64_t j = w.lo; j <= w.hi; ++j) {
        const auto k = static_cast<std::size_t>(j);
        sum += f[k] * g(f.x(k));
    }
    return f.dx() * sum;
}

double inner_product(const Field& f, const Field& g) {
    if (f.dx() != g.dx()) throw std::invalid_argument("inner_product: fields on different grids");
    if (f.is_zero() || g.is_zero()) return 0.0;
    const std::int64_t lo = std::max(f.lattice_index(static_cast<std::size_t>(f.window().lo)),
                                     g.lattice_index(static_cast<std::size_t>(g.window().lo)));
    const std::int64_t hi = std::min(f.lattice_index(static_cast<std::size_t>(f.window().hi)),
                                     g.lattice_index(static_cast<std::size_t>(g.window().hi)));
    double sum = 0.0;
    for (std::int64_t k = lo; k <= hi; ++k) sum += f.at_lattice(k) * g.at_lattice(k);
    return f.dx() * sum;
}

Field shift(const Field& f, double a) {
    const auto cells = static_cast<std::int64_t>(std::llround(a / f.dx()));
    std::vector<double> values(f.values().begin(), f.values().end());
    return Field(f.dx(), f.first_index() - cells, std::move(values));
}

double weighted_sup_norm(const Field& f, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("weighted_sup_norm: lambda must be positive");
    double best = 0.0;
    const Window& w = f.window();
    for (std::int64_t j = w.lo; j <= w.hi; ++j) {
        const auto k = static_cast<std::size_t>(j);
        best = std::max(best, f[k] * std::exp(-lambda * std::abs(f.x(k))));
    }
    return best;
}

void write_csv(const Field& f, std::ostream& out) {
    out << "x,value\n";
    const Window& w = f.window();
    for (std::int64_t j = w.lo; j <= w.hi; ++j) {
        const auto k = static_cast<std::size_t>(j);
        out << fmt::format("{:.17g},{:.17g}\n", f.x(k), f[k]);
    }
}

std::string sidecar_json(const Field& f) {
    nlohmann::ordered_json j;
    j["dx"] = f.dx();
    j["origin"] = f.origin();
    j["first_index"] = f.first_index();
    j["size"] = f.size();
    if (f.is_zero()) {
        j["window"] = nullptr;
    } else {
        j["window"] = {{"lo", f.window().lo}, {"hi", f.window().hi}};
    }
    return j.dump(2);
}

Field read_field(std::istream& csv, const std::string& sidecar) {
    const auto j = nlohmann::json::parse(sidecar);
    const double dx = j.at("dx").get<double>();
    const auto first = j.at("first_index").get<std::int64_t>();
    std::vector<double> values(j.at("size").get<std::size_t>(), 0.0);
    std::string line;
    if (!std::getline(csv, line) || line != "x,value") throw std::invalid_argument("read_field: missing x,value header");
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("read_field: malformed row '" + line + "'");
        const double x = std::stod(line.substr(0, comma));
        const auto k = std::llround(x / dx) - first;
        if (k < 0 || k >= static_cast<std::int64_t>(values.size()))
            throw std::invalid_argument("read_field: row outside the declared grid");
        values[static_cast<std::size_t>(k)] = std::stod(line.substr(comma + 1));
    }
    Field f(dx, first, std::move(values));
    const auto& jw = j.at("window");
    const Window declared = jw.is_null() ? Window{} : Window{jw.at("lo").get<std::int64_t>(), jw.at("hi").get<std::int64_t>()};
    if (declared != f.window()) throw std::invalid_argument("read_field: window in sidecar does not match the data");
    return f;
}

} // namespace stokpp
