#include "stokpp/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "stokpp/markers.hpp"

namespace stokpp {

namespace {

constexpr std::uint32_t kPrimaryStream = 0;
constexpr std::uint32_t kDualStream = 1;

struct Welford {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

SampleSchedule every(double interval) {
    SampleSchedule s;
    s.interval = interval;
    return s;
}

NoiseStream stream_for(const MonteCarlo& mc, std::size_t replicate, std::uint32_t stream) {
    return NoiseStream(mc.seed, static_cast<std::uint32_t>(replicate), stream);
}

} // namespace

double Estimate::standard_error() const noexcept { return half_width / kZ95; }

Estimate mean_estimate(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("mean_estimate: no samples");
    Welford acc;
    for (double x : samples) acc.add(x);
    Estimate e;
    e.mean = acc.mean;
    e.n = samples.size();
    e.n_conditioned = samples.size();
    e.half_width = kZ95 * std::sqrt(acc.variance() / static_cast<double>(acc.n));
    return e;
}

Estimate proportion_estimate(std::size_t hits, std::size_t n) {
    if (n == 0) throw std::invalid_argument("proportion_estimate: no trials");
    if (hits > n) throw std::invalid_argument("proportion_estimate: more hits than trials");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(hits) / nn;
    Estimate e;
    e.mean = p;
    e.n = n;
    e.n_conditioned = n;
    if (hits == 0 || hits == n) {
        const double z2 = kZ95 * kZ95;
        const double centre = (p + z2 / (2.0 * nn)) / (1.0 + z2 / nn);
        const double hw = kZ95 / (1.0 + z2 / nn) * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
        e.half_width = std::max(std::abs(centre + hw - p), std::abs(p - (centre - hw)));
    } else {
        e.half_width = kZ95 * std::sqrt(p * (1.0 - p) / nn);
    }
    return e;
}

Estimate laplace(std::span<const Field> ensemble, const Field& g) {
    if (ensemble.empty()) throw std::invalid_argument("laplace: empty ensemble");
    std::vector<double> values;
    values.reserve(ensemble.size());
    for (const Field& u : ensemble) values.push_back(std::exp(-2.0 * inner_product(u, g)));
    return mean_estimate(values);
}

Estimate laplace(std::span<const Field> ensemble, const std::function<double(double)>& g) {
    if (ensemble.empty()) throw std::invalid_argument("laplace: empty ensemble");
    std::vector<double> values;
    values.reserve(ensemble.size());
    for (const Field& u : ensemble) values.push_back(std::exp(-2.0 * inner_product(u, g)));
    return mean_estimate(values);
}

bool DualityResult::overlaps(double sigmas) const noexcept {
    const double reach = sigmas * (forward.standard_error() + backward.standard_error());
    return std::abs(gap()) <= reach;
}

DualityResult self_duality_gap(const Field& u0, const StepParams& u_params, const Field& v0,
                               const StepParams& v_params, double t, const Coefficients& c, const MonteCarlo& mc) {
    const SampleSchedule schedule = every(std::max(t, u_params.dt()));
    auto run = [&](const Field& start, const StepParams& p, std::uint32_t stream) {
        return mc.executor.map<Field>(mc.reps, [&](std::size_t r) {
            return simulate(start, c, p, t, schedule, stream_for(mc, r, stream)).final_field;
        });
    };
    const std::vector<Field> u_t = run(u0, u_params, kPrimaryStream);
    const std::vector<Field> v_t = run(v0, v_params, kDualStream);
    return {laplace(u_t, v0), laplace(v_t, u0)};
}

double superprocess_extinction_exact(double theta, double mass, double t) {
    if (!(theta > 0.0)) throw std::invalid_argument("superprocess_extinction_exact: theta must be positive");
    if (!(t > 0.0)) throw std::invalid_argument("superprocess_extinction_exact: t must be positive");
    if (!(mass >= 0.0)) throw std::invalid_argument("superprocess_extinction_exact: mass must be >= 0");
    return std::exp(-2.0 * theta * mass / -std::expm1(-theta * t));
}

std::vector<std::optional<double>> extinction_times(const Field& u0, const Coefficients& c, const StepParams& p,
                                                    double horizon, const MonteCarlo& mc) {
    const SampleSchedule schedule = every(std::max(horizon, p.dt()));
    return mc.executor.map<std::optional<double>>(mc.reps, [&](std::size_t r) {
        return simulate(u0, c, p, horizon, schedule, stream_for(mc, r, kPrimaryStream)).extinction_time;
    });
}

Estimate extinction_prob(std::span<const std::optional<double>> times, double t) {
    const std::size_t hits = static_cast<std::size_t>(
        std::count_if(times.begin(), times.end(), [t](const auto& e) { return e && *e <= t; }));
    return proportion_estimate(hits, times.size());
}

Estimate extinction_prob(const Field& u0, const Coefficients& c, const StepParams& p, double t, const MonteCarlo& mc) {
    const auto times = extinction_times(u0, c, p, t, mc);
    return extinction_prob(times, t);
}

ConditionedEnsemble conditioned_ensemble(const Field& g0, const Coefficients& c, const StepParams& p, double horizon,
                                         const SampleSchedule& schedule, const MonteCarlo& mc) {
    if (g0.is_zero()) throw NoSurvivors("conditioned_ensemble: the zero field cannot survive");
    auto all = mc.executor.map<Trajectory>(mc.reps, [&](std::size_t r) {
        return simulate(g0, c, p, horizon, schedule, stream_for(mc, r, kPrimaryStream));
    });
    ConditionedEnsemble out;
    for (std::size_t r = 0; r < all.size(); ++r) {
        if (!all[r].survived()) continue;
        out.survivors.push_back(std::move(all[r]));
        out.replicate_ids.push_back(r);
    }
    out.survival = proportion_estimate(out.survivors.size(), mc.reps);
    if (out.survivors.empty()) {
        throw NoSurvivors(fmt::format("conditioned_ensemble: none of {} replicates survived to t = {}", mc.reps, horizon));
    }
    return out;
}

WaveEnsemble nu_T_ensemble(const Field& g0, const Coefficients& c, const StepParams& p,
                           std::span<const double> horizons, double sample_interval, double profile_width,
                           const MonteCarlo& mc) {
    if (horizons.empty()) throw std::invalid_argument("nu_T_profiles: no horizon");
    if (!(profile_width > 0.0)) throw std::invalid_argument("nu_T_profiles: profile width must be positive");
    const double last = *std::max_element(horizons.begin(), horizons.end());
    const auto width = static_cast<std::int64_t>(std::llround(profile_width / p.dx()));
    const auto cells = static_cast<std::size_t>(width + 2);
    const double tolerance = 0.5 * p.dt();

    struct PerReplicate {
        std::vector<std::vector<double>> sums;
        std::vector<std::size_t> counts;
        std::vector<double> times;
        std::vector<double> fronts;
        std::optional<double> extinction;
    };

    auto replicates = mc.executor.map<PerReplicate>(mc.reps, [&](std::size_t r) {
        PerReplicate out;
        out.sums.assign(horizons.size(), std::vector<double>(cells, 0.0));
        out.counts.assign(horizons.size(), 0);
        const Observer observer = [&](double t, const Field& u) {
            if (u.is_zero()) return;
            const std::int64_t front = u.lattice_index(static_cast<std::size_t>(u.window().hi));
            for (std::size_t h = 0; h < horizons.size(); ++h) {
                if (t > horizons[h] + tolerance) continue;
                auto& sum = out.sums[h];
                for (std::size_t i = 0; i < cells; ++i) sum[i] += u.at_lattice(front - width + static_cast<std::int64_t>(i));
                ++out.counts[h];
            }
        };
        const Trajectory traj =
            simulate(g0, c, p, last, every(sample_interval), stream_for(mc, r, kPrimaryStream), observer);
        out.extinction = traj.extinction_time;
        for (const Observables& o : traj.samples) {
            out.times.push_back(o.t);
            out.fronts.push_back(o.r0);
        }
        return out;
    });

    WaveEnsemble ensemble;
    std::vector<ProfileAverage>& result = ensemble.profiles;
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        const double T = horizons[h];
        std::vector<Welford> acc(cells);
        std::size_t survivors = 0;
        for (const PerReplicate& rep : replicates) {
            if (rep.extinction && *rep.extinction <= T + tolerance) continue;
            if (rep.counts[h] == 0) continue;
            ++survivors;
            for (std::size_t i = 0; i < cells; ++i) acc[i].add(rep.sums[h][i] / static_cast<double>(rep.counts[h]));
        }
        if (survivors == 0) throw NoSurvivors(fmt::format("nu_T_profile: no replicate survived to T = {}", T));
        ProfileAverage avg;
        std::vector<double> mean(cells);
        avg.std_error.resize(cells);
        for (std::size_t i = 0; i < cells; ++i) {
            mean[i] = std::max(0.0, acc[i].mean);
            avg.std_error[i] = std::sqrt(acc[i].variance() / static_cast<double>(survivors));
        }
        avg.mean = Field(p.dx(), -width, std::move(mean));
        avg.T = T;
        avg.n_conditioned = survivors;
        avg.survival = proportion_estimate(survivors, mc.reps);
        result.push_back(std::move(avg));
    }
    for (PerReplicate& rep : replicates) {
        ensemble.sample_times.push_back(std::move(rep.times));
        ensemble.fronts.push_back(std::move(rep.fronts));
        ensemble.extinction.push_back(rep.extinction);
    }
    return ensemble;
}

std::vector<ProfileAverage> nu_T_profiles(const Field& g0, const Coefficients& c, const StepParams& p,
                                          std::span<const double> horizons, double sample_interval,
                                          double profile_width, const MonteCarlo& mc) {
    return nu_T_ensemble(g0, c, p, horizons, sample_interval, profile_width, mc).profiles;
}

ProfileAverage nu_T_profile(const Field& g0, const Coefficients& c, const StepParams& p, double T,
                            double sample_interval, double profile_width, const MonteCarlo& mc) {
    const double horizons[] = {T};
    return nu_T_profiles(g0, c, p, horizons, sample_interval, profile_width, mc).front();
}

void write_csv(const ProfileAverage& profile, std::ostream& out) {
    out << "x,mean,stderr\n";
    for (std::size_t i = 0; i < profile.mean.size(); ++i) {
        out << fmt::format("{:.17g},{:.17g},{:.17g}\n", profile.mean.x(i), profile.mean[i], profile.std_error[i]);
    }
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: all x values coincide");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double sse = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            sse += r * r;
        }
        fit.slope_stderr = std::sqrt(sse / (n - 2.0) / sxx);
    }
    return fit;
}

double wave_speed(std::span<const double> times, std::span<const double> positions, double t0, double t1) {
    if (times.size() != positions.size()) throw std::invalid_argument("wave_speed: length mismatch");
    std::vector<double> ts, xs;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t0 || times[i] > t1) continue;
        if (!std::isfinite(positions[i])) {
            throw ExtinctionInWindow(fmt::format("wave_speed: no front at t = {} inside the fit window", times[i]));
        }
        ts.push_back(times[i]);
        xs.push_back(positions[i]);
    }
    if (ts.size() < 2) throw std::invalid_argument("wave_speed: fewer than two samples in the fit window");
    return fit_line(ts, xs).slope;
}

double wave_speed(const Trajectory& traj, double t0, double t1) {
    std::vector<double> ts, xs;
    for (const Observables& o : traj.samples) {
        ts.push_back(o.t);
        xs.push_back(o.r0);
    }
    return wave_speed(ts, xs, t0, t1);
}

std::vector<MassSpan> mass_and_span(const Trajectory& traj) {
    std::vector<MassSpan> out;
    out.reserve(traj.samples.size());
    for (const Observables& o : traj.samples) {
        const double span = std::isfinite(o.r0) ? o.r0 - o.l0 : -std::numeric_limits<double>::infinity();
        out.push_back({o.t, o.mass, span});
    }
    return out;
}

std::vector<RecurrenceRecord> recurrence_records(const Field& g0, double b_lo, double b_hi, const Coefficients& c,
                                                 const StepParams& p, double horizon, double revisit_start,
                                                 double sample_interval, const MonteCarlo& mc) {
    if (!(b_lo < b_hi)) throw std::invalid_argument("recurrence: interval B must be nonempty");
    if (revisit_start > horizon) throw std::invalid_argument("recurrence: revisit_start must not exceed horizon");
    const double tolerance = 0.5 * p.dt();
    return mc.executor.map<RecurrenceRecord>(mc.reps, [&](std::size_t r) {
        RecurrenceRecord rec;
        const Observer observer = [&](double t, const Field& u) {
            if (rec.first_visit || t < revisit_start - tolerance || u.is_zero()) return;
            const Window& w = u.window();
            for (std::int64_t j = w.lo; j <= w.hi; ++j) {
                const auto k = static_cast<std::size_t>(j);
                if (u[k] > 0.0 && u.x(k) > b_lo && u.x(k) < b_hi) {
                    rec.first_visit = t;
                    return;
                }
            }
        };
        rec.extinction =
            simulate(g0, c, p, horizon, every(sample_interval), stream_for(mc, r, kPrimaryStream), observer)
                .extinction_time;
        return rec;
    });
}

Estimate recurrence_fraction(std::span<const RecurrenceRecord> records, double horizon, double survival_horizon) {
    std::size_t survivors = 0;
    std::size_t visited = 0;
    for (const RecurrenceRecord& rec : records) {
        if (rec.extinction && *rec.extinction <= survival_horizon) continue;
        ++survivors;
        if (rec.first_visit && *rec.first_visit <= horizon) ++visited;
    }
    if (survivors == 0) throw NoSurvivors(fmt::format("recurrence_fraction: no replicate survived to t = {}", survival_horizon));
    Estimate e = proportion_estimate(visited, survivors);
    e.n = records.size();
    e.n_conditioned = survivors;
    return e;
}

Estimate recurrence_fraction(const Field& g0, double b_lo, double b_hi, const Coefficients& c, const StepParams& p,
                             double horizon, double revisit_start, double sample_interval, const MonteCarlo& mc) {
    const auto records = recurrence_records(g0, b_lo, b_hi, c, p, horizon, revisit_start, sample_interval, mc);
    return recurrence_fraction(records, horizon, horizon);
}

double upper_moment_bound(double theta, double phi_mass, double T) {
    if (!(theta > 0.0) || !(T > 0.0)) throw std::invalid_argument("upper_moment_bound: theta and T must be positive");
    return theta * phi_mass / -std::expm1(-theta * T);
}

Estimate upper_moment(double T, double level, UpperKind kind, const Field& phi, const Coefficients& c,
                      const StepParams& p, const Grid& grid, const MonteCarlo& mc) {
    const auto values = mc.executor.map<double>(mc.reps, [&](std::size_t r) {
        return inner_product(upper_measure_sample(T, level, kind, c, p, grid, stream_for(mc, r, kPrimaryStream)), phi);
    });
    return mean_estimate(values);
}

ScalingTable front_scaling_probe(std::span<const double> times, double level, const Coefficients& c,
                                 const StepParams& p, const Grid& grid, const MonteCarlo& mc) {
    if (times.empty()) throw std::invalid_argument("front_scaling_probe: no times");
    const double last = *std::max_element(times.begin(), times.end());
    const Field start = materialize(upper_profile(UpperKind::left, level), grid);
    const StepParams params = upper_params(UpperKind::left, p);
    SampleSchedule schedule = every(std::max(last, p.dt()));
    schedule.snapshot_times.assign(times.begin(), times.end());

    const auto fronts = mc.executor.map<std::vector<double>>(mc.reps, [&](std::size_t r) {
        const Trajectory traj = simulate(start, c, params, last, schedule, stream_for(mc, r, kPrimaryStream));
        std::vector<double> out(times.size(), 0.0);
        for (std::size_t i = 0; i < times.size(); ++i) {
            const auto step = step_count(times[i], p.dt());
            for (const auto& [t, f] : traj.snapshots) {
                if (step_count(t, p.dt()) == step) {
                    out[i] = std::max(0.0, right_marker(f));
                    break;
                }
            }
        }
        return out;
    });

    ScalingTable table;
    std::vector<double> log_t, log_front;
    for (std::size_t i = 0; i < times.size(); ++i) {
        std::vector<double> column;
        column.reserve(fronts.size());
        for (const auto& row : fronts) column.push_back(row[i]);
        const Estimate e = mean_estimate(column);
        table.rows.push_back({times[i], e});
        if (e.mean > 0.0 && times[i] > 0.0) {
            log_t.push_back(std::log(times[i]));
            log_front.push_back(std::log(e.mean));
        }
    }
    if (log_t.size() >= 2) {
        const LineFit fit = fit_line(log_t, log_front);
        table.slope = fit.slope;
        table.slope_stderr = fit.slope_stderr;
    }
    return table;
}

double two_sample_p_value(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("two_sample_p_value: need two samples per side");
    Welford wa, wb;
    for (double x : a) wa.add(x);
    for (double x : b) wb.add(x);
    const double se = std::sqrt(wa.variance() / static_cast<double>(wa.n) + wb.variance() / static_cast<double>(wb.n));
    if (se == 0.0) return wa.mean == wb.mean ? 1.0 : 0.0;
    const double z = (wa.mean - wb.mean) / se;
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

void write_estimate_header(std::ostream& out) { out << "name,mean,half_width,n,n_conditioned\n"; }

void write_estimate_row(std::ostream& out, const std::string& name, const Estimate& e) {
    out << fmt::format("{},{:.17g},{:.17g},{},{}\n", name, e.mean, e.half_width, e.n, e.n_conditioned);
}

} // namespace stokpp
