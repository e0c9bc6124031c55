#include "stokpp/couplings.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace stokpp {

std::string to_string(CouplingKind kind) {
    switch (kind) {
    case CouplingKind::monotone: return "monotone";
    case CouplingKind::superprocess: return "superprocess";
    case CouplingKind::upper_measure: return "upper-measure";
    }
    return "unknown";
}

std::string to_string(UpperKind kind) {
    switch (kind) {
    case UpperKind::full: return "full";
    case UpperKind::left: return "left";
    case UpperKind::right: return "right";
    }
    return "unknown";
}

UpperKind parse_upper_kind(const std::string& text) {
    if (text == "full") return UpperKind::full;
    if (text == "left") return UpperKind::left;
    if (text == "right") return UpperKind::right;
    throw std::invalid_argument("unknown upper-measure kind '" + text + "'");
}

namespace {

bool same_grid(const Field& a, const Field& b) {
    return a.dx() == b.dx() && a.first_index() == b.first_index() && a.size() == b.size();
}

enum class IncrementRate { annihilation, immigration };

// Lock-step evolution of u and the increment w, tracking upper = u + w.
CoupledPair run_pair(const Field& u0, const Field& w0, const Coefficients& c, const StepParams& p, double horizon,
                     const SampleSchedule& schedule, const NoiseStream& lower_noise,
                     const NoiseStream& increment_noise, IncrementRate rate, CouplingKind kind) {
    if (c.alpha || c.beta) throw std::invalid_argument("coupling: base coefficients must not carry alpha/beta rates");
    if (!(schedule.interval > 0.0)) throw std::invalid_argument("coupling: sample interval must be positive");

    CoupledPair pair;
    pair.kind = kind;
    pair.params = p;
    pair.seed = lower_noise.seed();
    pair.replicate = lower_noise.replicate();
    pair.lower_stream = lower_noise.stream();
    pair.increment_stream = increment_noise.stream();
    pair.min_gap = std::numeric_limits<double>::infinity();

    Stepper u(u0, p);
    Stepper w(w0, p);
    std::vector<double> forcing(u0.size(), 0.0);
    std::vector<double> upper(u0.size(), 0.0);

    Coefficients wc;
    wc.theta = c.theta;
    wc.noise_on = c.noise_on;
    wc.gamma = rate == IncrementRate::annihilation ? c.gamma : 0.0;

    const std::uint64_t total = step_count(horizon, p.dt());
    const std::uint64_t every = std::max<std::uint64_t>(1, step_count(schedule.interval, p.dt()));
    std::vector<std::uint64_t> snapshot_steps;
    for (double t : schedule.snapshot_times) snapshot_steps.push_back(std::min(total, step_count(t, p.dt())));
    std::sort(snapshot_steps.begin(), snapshot_steps.end());

    auto check_order = [&] {
        const Window& a = u.window();
        const Window& b = w.window();
        Window span = a.empty() ? b : (b.empty() ? a : Window{std::min(a.lo, b.lo), std::max(a.hi, b.hi)});
        if (span.empty()) {
            pair.min_gap = std::min(pair.min_gap, 0.0);
            return;
        }
        const auto uv = u.values();
        const auto wv = w.values();
        for (std::int64_t j = span.lo; j <= span.hi; ++j) {
            const auto k = static_cast<std::size_t>(j);
            upper[k] = uv[k] + wv[k];
            const double gap = upper[k] - uv[k];
            if (gap < 0.0) ++pair.violations;
            pair.min_gap = std::min(pair.min_gap, gap);
        }
    };

    auto upper_field = [&] {
        const auto uv = u.values();
        const auto wv = w.values();
        for (std::size_t k = 0; k < upper.size(); ++k) upper[k] = uv[k] + wv[k];
        return Field(p.dx(), u0.first_index(), upper);
    };

    auto record = [&](std::uint64_t n) {
        const double t = static_cast<double>(n) * p.dt();
        const bool sample = (n % every == 0) || n == total;
        const bool snap = std::binary_search(snapshot_steps.begin(), snapshot_steps.end(), n);
        if (!sample && !snap) return;
        const Field lo = u.snapshot();
        const Field hi = upper_field();
        if (sample) {
            pair.lower.samples.push_back(observe(t, lo));
            pair.upper.samples.push_back(observe(t, hi));
        }
        if (snap) {
            pair.lower.snapshots.emplace_back(t, lo);
            pair.upper.snapshots.emplace_back(t, hi);
        }
    };

    for (std::uint64_t n = 0;; ++n) {
        const double t = static_cast<double>(n) * p.dt();
        if (u.is_zero() && !pair.lower.extinction_time) pair.lower.extinction_time = t;
        if (u.is_zero() && w.is_zero() && !pair.upper.extinction_time) pair.upper.extinction_time = t;
        check_order();
        record(n);
        if (n == total) break;

        // Rates for w come from the current u, before u moves.
        const Window uw = u.window();
        const auto uv = u.values();
        for (std::int64_t j = uw.lo; j <= uw.hi; ++j) {
            const auto k = static_cast<std::size_t>(j);
            forcing[k] = rate == IncrementRate::annihilation ? 2.0 * c.gamma * uv[k] : c.gamma * uv[k] * uv[k];
        }
        const RateField r{forcing, uw};
        wc.alpha.reset();
        wc.beta.reset();
        if (uw.empty()) {
            // nothing to add
        } else if (rate == IncrementRate::annihilation) {
            wc.beta = r;
        } else {
            wc.alpha = r;
        }
        w.advance(wc, increment_noise);
        u.advance(c, lower_noise);
        for (std::int64_t j = uw.lo; j <= uw.hi; ++j) forcing[static_cast<std::size_t>(j)] = 0.0;
    }
    pair.lower.final_field = u.snapshot();
    pair.upper.final_field = upper_field();
    return pair;
}

} // namespace

CoupledPair monotone_pair(const Field& u0, const Field& v0, const Coefficients& c, const StepParams& p, double horizon,
                          const SampleSchedule& schedule, const NoiseStream& lower_noise,
                          const NoiseStream& increment_noise) {
    if (!same_grid(u0, v0)) throw std::invalid_argument("monotone_pair: u0 and v0 must share a grid");
    std::vector<double> diff(u0.size());
    for (std::size_t k = 0; k < diff.size(); ++k) {
        if (u0[k] > v0[k]) throw std::invalid_argument("monotone_pair: u0 <= v0 violated at x = " + std::to_string(u0.x(k)));
        diff[k] = v0[k] - u0[k];
    }
    return run_pair(u0, Field(u0.dx(), u0.first_index(), std::move(diff)), c, p, horizon, schedule, lower_noise,
                    increment_noise, IncrementRate::annihilation, CouplingKind::monotone);
}

CoupledPair superprocess_pair(const Field& u0, const Coefficients& c, const StepParams& p, double horizon,
                              const SampleSchedule& schedule, const NoiseStream& lower_noise,
                              const NoiseStream& increment_noise) {
    if (c.gamma != 1.0) throw std::invalid_argument("superprocess_pair: requires gamma = 1");
    return run_pair(u0, Field::zeros(u0.dx(), u0.first_index(), u0.size()), c, p, horizon, schedule, lower_noise,
                    increment_noise, IncrementRate::immigration, CouplingKind::superprocess);
}

Profile upper_profile(UpperKind kind, double level) {
    switch (kind) {
    case UpperKind::full: return profile::ConstantPsiN{level};
    case UpperKind::left: return profile::HalfLineZetaN{level, 0.0};
    case UpperKind::right: return profile::MirroredXiN{level, 0.0};
    }
    throw std::invalid_argument("upper_profile: bad kind");
}

StepParams upper_params(UpperKind kind, const StepParams& p) {
    const Boundary left = kind == UpperKind::right ? Boundary::absorbing : Boundary::held;
    const Boundary right = kind == UpperKind::left ? Boundary::absorbing : Boundary::held;
    return StepParams(p.dt(), p.dx(), left, right, p.scheme());
}

Field upper_measure_sample(double T, double level, UpperKind kind, const Coefficients& c, const StepParams& p,
                           const Grid& grid, const NoiseStream& noise) {
    if (!(T > 0.0)) throw std::invalid_argument("upper_measure_sample: T must be positive");
    if (level < 0.0) throw std::invalid_argument("upper_measure_sample: level must be >= 0");
    const Field start = materialize(upper_profile(kind, level), grid);
    const StepParams params = upper_params(kind, p);
    Stepper s(start, params);
    const std::uint64_t total = step_count(T, p.dt());
    for (std::uint64_t n = 0; n < total && !s.is_zero(); ++n) s.advance(c, noise);
    return s.snapshot();
}

CoupledPair left_upper_pair(const Field& u0, double level, const Coefficients& c, const StepParams& p, double horizon,
                            const SampleSchedule& schedule, const NoiseStream& lower_noise,
                            const NoiseStream& increment_noise) {
    const Grid grid{u0.dx(), u0.origin(), u0.x(u0.size() - 1)};
    const Field upper0 = materialize(upper_profile(UpperKind::left, level), grid);
    CoupledPair pair = monotone_pair(u0, upper0, c, upper_params(UpperKind::left, p), horizon, schedule, lower_noise,
                                     increment_noise);
    pair.kind = CouplingKind::upper_measure;
    return pair;
}

std::string pair_manifest_json(const CoupledPair& pair) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(pair.kind);
    j["seed"] = pair.seed;
    j["replicate"] = pair.replicate;
    j["lower_stream"] = pair.lower_stream;
    j["increment_stream"] = pair.increment_stream;
    j["dt"] = pair.params.dt();
    j["dx"] = pair.params.dx();
    j["min_gap"] = pair.min_gap;
    j["violations"] = pair.violations;
    return j.dump(2);
}

} // namespace stokpp
