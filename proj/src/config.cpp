#include "stokpp/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace stokpp {

namespace pt = boost::property_tree;

std::string to_string(Command c) {
    switch (c) {
    case Command::simulate: return "simulate";
    case Command::duality: return "duality";
    case Command::extinction: return "extinction";
    case Command::wave: return "wave";
    case Command::recurrence: return "recurrence";
    case Command::upper: return "upper";
    case Command::couple: return "couple";
    }
    return "unknown";
}

Command parse_command(const std::string& text) {
    for (Command c : {Command::simulate, Command::duality, Command::extinction, Command::wave, Command::recurrence,
                      Command::upper, Command::couple}) {
        if (to_string(c) == text) return c;
    }
    throw std::invalid_argument("unknown command '" + text + "'");
}

std::string to_string(Boundary b) { return b == Boundary::held ? "held" : "absorbing"; }

Boundary parse_boundary(const std::string& text) {
    if (text == "absorbing") return Boundary::absorbing;
    if (text == "held") return Boundary::held;
    throw std::invalid_argument("expected absorbing or held, got '" + text + "'");
}

std::string to_string(Scheme s) { return s == Scheme::euler_maruyama ? "euler_maruyama" : "branching_split"; }

Scheme parse_scheme(const std::string& text) {
    if (text == "branching_split") return Scheme::branching_split;
    if (text == "euler_maruyama") return Scheme::euler_maruyama;
    throw std::invalid_argument("expected branching_split or euler_maruyama, got '" + text + "'");
}

CouplingKind parse_coupling_kind(const std::string& text) {
    if (text == "monotone") return CouplingKind::monotone;
    if (text == "superprocess") return CouplingKind::superprocess;
    if (text == "upper-measure") return CouplingKind::upper_measure;
    throw std::invalid_argument("expected monotone, superprocess or upper-measure, got '" + text + "'");
}

StepParams RunConfig::params() const {
    return StepParams(numerics.dt, numerics.dx, numerics.left, numerics.right, numerics.scheme);
}

StepParams RunConfig::dual_params() const {
    return StepParams(numerics.dt, numerics.dx, numerics.dual_left, numerics.dual_right, numerics.scheme);
}

Coefficients RunConfig::coefficients() const {
    Coefficients c;
    c.theta = physics.theta;
    c.gamma = physics.gamma;
    c.noise_on = physics.noise;
    return physics.superprocess ? superprocess_mode(c) : c;
}

namespace {

std::string format_double(double v) { return fmt::format("{}", v); }

std::string format_list(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += format_double(xs[i]);
    }
    return out;
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

double parse_double(const std::string& field, std::string text) {
    boost::algorithm::trim(text);
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty()) throw ConfigError(field, "expected a number, got '" + text + "'");
    if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
    return v;
}

template <class Int>
Int parse_integer(const std::string& field, std::string text) {
    boost::algorithm::trim(text);
    Int v = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw ConfigError(field, "expected a non-negative integer, got '" + text + "'");
    }
    return v;
}

bool parse_bool(const std::string& field, std::string text) {
    boost::algorithm::trim(text);
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError(field, "expected true or false, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& field, const std::string& text) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        boost::algorithm::trim(item);
        if (item.empty()) continue;
        out.push_back(parse_double(field, item));
    }
    return out;
}

// Wraps an enum/profile parser so that its message carries the field name.
template <class F>
auto with_field(const std::string& field, F&& parse) -> decltype(parse()) {
    try {
        return parse();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(field, e.what());
    }
}

using Section = std::vector<std::pair<std::string, std::string>>;

std::map<std::string, Section> sections(const RunConfig& c) {
    const auto& ph = c.physics;
    const auto& nu = c.numerics;
    std::map<std::string, Section> out;
    out["run"] = {{"command", to_string(c.command)}};
    out["physics"] = {
        {"theta", format_double(ph.theta)},
        {"gamma", format_double(ph.gamma)},
        {"noise", format_bool(ph.noise)},
        {"superprocess", format_bool(ph.superprocess)},
        {"profile", ph.profile},
        {"dual_profile", ph.dual_profile},
        {"horizon", format_double(ph.horizon)},
        {"times", format_list(ph.times)},
        {"b_lo", format_double(ph.b_lo)},
        {"b_hi", format_double(ph.b_hi)},
        {"revisit_start", format_double(ph.revisit_start)},
        {"level", format_double(ph.level)},
        {"upper_kind", to_string(ph.upper_kind)},
        {"phi", ph.phi},
        {"coupling", to_string(ph.coupling)},
        {"fit_t0", format_double(ph.fit_t0)},
        {"fit_t1", format_double(ph.fit_t1)},
    };
    out["numerics"] = {
        {"dx", format_double(nu.dx)},
        {"dt", format_double(nu.dt)},
        {"x_min", format_double(nu.x_min)},
        {"x_max", format_double(nu.x_max)},
        {"left", to_string(nu.left)},
        {"right", to_string(nu.right)},
        {"dual_left", to_string(nu.dual_left)},
        {"dual_right", to_string(nu.dual_right)},
        {"scheme", to_string(nu.scheme)},
        {"sample_interval", format_double(nu.sample_interval)},
        {"profile_width", format_double(nu.profile_width)},
    };
    out["monte_carlo"] = {
        {"reps", std::to_string(c.monte_carlo.reps)},
        {"seed", std::to_string(c.monte_carlo.seed)},
        {"width", std::to_string(c.monte_carlo.width)},
    };
    out["output"] = {{"dir", c.output.dir}};
    return out;
}

void assign(RunConfig& c, const std::string& section, const std::string& key, const std::string& raw) {
    const std::string field = section + "." + key;
    std::string value = raw;
    boost::algorithm::trim(value);
    auto& ph = c.physics;
    auto& nu = c.numerics;
    auto& mc = c.monte_carlo;
    auto profile_text = [&] {
        with_field(field, [&] { return parse_profile(value); });
        return value;
    };

    if (section == "run" && key == "command") c.command = with_field(field, [&] { return parse_command(value); });
    else if (section == "physics" && key == "theta") ph.theta = parse_double(field, value);
    else if (section == "physics" && key == "gamma") ph.gamma = parse_double(field, value);
    else if (section == "physics" && key == "noise") ph.noise = parse_bool(field, value);
    else if (section == "physics" && key == "superprocess") ph.superprocess = parse_bool(field, value);
    else if (section == "physics" && key == "profile") ph.profile = profile_text();
    else if (section == "physics" && key == "dual_profile") ph.dual_profile = profile_text();
    else if (section == "physics" && key == "horizon") ph.horizon = parse_double(field, value);
    else if (section == "physics" && key == "times") ph.times = parse_list(field, value);
    else if (section == "physics" && key == "b_lo") ph.b_lo = parse_double(field, value);
    else if (section == "physics" && key == "b_hi") ph.b_hi = parse_double(field, value);
    else if (section == "physics" && key == "revisit_start") ph.revisit_start = parse_double(field, value);
    else if (section == "physics" && key == "level") ph.level = parse_double(field, value);
    else if (section == "physics" && key == "upper_kind") ph.upper_kind = with_field(field, [&] { return parse_upper_kind(value); });
    else if (section == "physics" && key == "phi") ph.phi = profile_text();
    else if (section == "physics" && key == "coupling") ph.coupling = with_field(field, [&] { return parse_coupling_kind(value); });
    else if (section == "physics" && key == "fit_t0") ph.fit_t0 = parse_double(field, value);
    else if (section == "physics" && key == "fit_t1") ph.fit_t1 = parse_double(field, value);
    else if (section == "numerics" && key == "dx") nu.dx = parse_double(field, value);
    else if (section == "numerics" && key == "dt") nu.dt = parse_double(field, value);
    else if (section == "numerics" && key == "x_min") nu.x_min = parse_double(field, value);
    else if (section == "numerics" && key == "x_max") nu.x_max = parse_double(field, value);
    else if (section == "numerics" && key == "left") nu.left = with_field(field, [&] { return parse_boundary(value); });
    else if (section == "numerics" && key == "right") nu.right = with_field(field, [&] { return parse_boundary(value); });
    else if (section == "numerics" && key == "dual_left") nu.dual_left = with_field(field, [&] { return parse_boundary(value); });
    else if (section == "numerics" && key == "dual_right") nu.dual_right = with_field(field, [&] { return parse_boundary(value); });
    else if (section == "numerics" && key == "scheme") nu.scheme = with_field(field, [&] { return parse_scheme(value); });
    else if (section == "numerics" && key == "sample_interval") nu.sample_interval = parse_double(field, value);
    else if (section == "numerics" && key == "profile_width") nu.profile_width = parse_double(field, value);
    else if (section == "monte_carlo" && key == "reps") mc.reps = parse_integer<std::size_t>(field, value);
    else if (section == "monte_carlo" && key == "seed") mc.seed = parse_integer<std::uint64_t>(field, value);
    else if (section == "monte_carlo" && key == "width") mc.width = parse_integer<unsigned>(field, value);
    else if (section == "output" && key == "dir") c.output.dir = value;
    else throw ConfigError(field, "unknown key");
}

} // namespace

void validate(const RunConfig& c) {
    const auto& ph = c.physics;
    const auto& nu = c.numerics;
    auto require = [](bool ok, const char* field, const std::string& message) {
        if (!ok) throw ConfigError(field, message);
    };
    require(ph.theta > 0.0, "physics.theta", "must be positive");
    require(ph.gamma >= 0.0, "physics.gamma", "must be >= 0");
    require(ph.horizon > 0.0, "physics.horizon", "must be positive");
    for (double t : ph.times) require(t > 0.0, "physics.times", "every time must be positive");
    require(ph.b_lo < ph.b_hi, "physics.b_hi", "interval B must satisfy b_lo < b_hi");
    require(ph.revisit_start >= 0.0, "physics.revisit_start", "must be >= 0");
    require(ph.level >= 0.0, "physics.level", "must be >= 0");
    require(ph.fit_t0 < ph.fit_t1, "physics.fit_t1", "fit window must satisfy fit_t0 < fit_t1");
    require(nu.dx > 0.0, "numerics.dx", "must be positive");
    require(nu.dt > 0.0, "numerics.dt", "must be positive");
    require(nu.dt <= nu.dx * nu.dx / 2.0, "numerics.dt",
            fmt::format("must satisfy dt <= dx^2/2 = {:.17g}", nu.dx * nu.dx / 2.0));
    require(nu.x_min < nu.x_max, "numerics.x_max", "domain must satisfy x_min < x_max");
    require(nu.x_max - nu.x_min >= 4.0 * nu.dx, "numerics.x_max", "domain must hold at least five cells");
    require(nu.sample_interval > 0.0, "numerics.sample_interval", "must be positive");
    require(nu.profile_width > 0.0, "numerics.profile_width", "must be positive");
    require(c.monte_carlo.reps >= 1, "monte_carlo.reps", "must be >= 1");
    require(c.monte_carlo.width >= 1, "monte_carlo.width", "must be >= 1");
    require(c.monte_carlo.reps <= 0xffffffffull, "monte_carlo.reps", "must fit in 32 bits");
    require(!c.output.dir.empty(), "output.dir", "must not be empty");
    for (auto [field, text] : {std::pair{"physics.profile", &ph.profile}, std::pair{"physics.dual_profile", &ph.dual_profile},
                               std::pair{"physics.phi", &ph.phi}}) {
        with_field(field, [&] { return parse_profile(*text); });
    }
    if (c.command == Command::couple && ph.coupling == CouplingKind::superprocess) {
        require(ph.gamma == 1.0, "physics.gamma", "the superprocess coupling needs gamma = 1");
    }
    if (c.command == Command::recurrence) {
        require(!ph.times.empty(), "physics.times", "recurrence needs at least one horizon");
    }
    if (c.command == Command::wave) {
        require(!ph.times.empty(), "physics.times", "wave needs at least one horizon");
    }
}

std::string to_ini(const RunConfig& config) {
    const auto all = sections(config);
    std::string out;
    for (const char* name : {"run", "physics", "numerics", "monte_carlo", "output"}) {
        if (!out.empty()) out += "\n";
        out += fmt::format("[{}]\n", name);
        for (const auto& [key, value] : all.at(name)) out += fmt::format("{} = {}\n", key, value);
    }
    return out;
}

RunConfig from_ini(const std::string& text) { return from_ini(text, RunConfig{}); }

RunConfig from_ini(const std::string& text, RunConfig base) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config", e.message() + " at line " + std::to_string(e.line()));
    }
    RunConfig config = std::move(base);
    const std::set<std::string> known{"run", "physics", "numerics", "monte_carlo", "output"};
    for (const auto& [section, body] : tree) {
        if (!known.count(section)) throw ConfigError(section, "unknown section");
        if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside of a section");
        for (const auto& [key, value] : body) assign(config, section, key, value.data());
    }
    validate(config);
    return config;
}

void set_value(RunConfig& config, const std::string& dotted_key, const std::string& value) {
    const auto dot = dotted_key.find('.');
    if (dot == std::string::npos) throw ConfigError(dotted_key, "expected section.key");
    assign(config, dotted_key.substr(0, dot), dotted_key.substr(dot + 1), value);
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return from_ini(text.str(), std::move(base));
}

bool operator==(const PhysicsConfig& a, const PhysicsConfig& b) {
    return a.theta == b.theta && a.gamma == b.gamma && a.noise == b.noise && a.superprocess == b.superprocess &&
           a.profile == b.profile && a.dual_profile == b.dual_profile && a.horizon == b.horizon && a.times == b.times &&
           a.b_lo == b.b_lo && a.b_hi == b.b_hi && a.revisit_start == b.revisit_start && a.level == b.level &&
           a.upper_kind == b.upper_kind && a.phi == b.phi && a.coupling == b.coupling && a.fit_t0 == b.fit_t0 &&
           a.fit_t1 == b.fit_t1;
}

bool operator==(const NumericsConfig& a, const NumericsConfig& b) {
    return a.dx == b.dx && a.dt == b.dt && a.x_min == b.x_min && a.x_max == b.x_max && a.left == b.left &&
           a.right == b.right && a.dual_left == b.dual_left && a.dual_right == b.dual_right && a.scheme == b.scheme &&
           a.sample_interval == b.sample_interval && a.profile_width == b.profile_width;
}

bool operator==(const MonteCarloConfig& a, const MonteCarloConfig& b) {
    return a.reps == b.reps && a.seed == b.seed && a.width == b.width;
}

bool operator==(const OutputConfig& a, const OutputConfig& b) { return a.dir == b.dir; }

bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.command == b.command && a.physics == b.physics && a.numerics == b.numerics &&
           a.monte_carlo == b.monte_carlo && a.output == b.output;
}

} // namespace stokpp
