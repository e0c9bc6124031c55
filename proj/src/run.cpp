#include "stokpp/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "stokpp/estimators.hpp"
#include "stokpp/markers.hpp"

namespace stokpp {

namespace {

constexpr std::uint32_t kStreamU = 0;
constexpr std::uint32_t kStreamV = 1;

class Emitter {
public:
    Emitter(std::filesystem::path dir, RunManifest& manifest) : dir_(std::move(dir)), manifest_(manifest) {
        std::filesystem::create_directories(dir_);
    }

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        out << content;
        manifest_.files.push_back(name);
    }

    template <class Writer>
    void csv(const std::string& name, Writer&& writer) {
        std::ostringstream text;
        writer(text);
        write(name, text.str());
    }

private:
    std::filesystem::path dir_;
    RunManifest& manifest_;
};

std::string number(double v) { return fmt::format("{:.17g}", v); }

// Times in file names: 20 -> "20", 0.5 -> "0.5".
std::string tag(double t) { return fmt::format("{:g}", t); }

MonteCarlo monte_carlo(const RunConfig& c) {
    MonteCarlo mc;
    mc.reps = c.monte_carlo.reps;
    mc.seed = c.monte_carlo.seed;
    mc.executor = Executor(c.monte_carlo.width);
    return mc;
}

Field initial(const RunConfig& c, const std::string& spec) { return materialize(parse_profile(spec), c.grid()); }

std::vector<double> times_or_horizon(const RunConfig& c) {
    std::vector<double> t = c.physics.times;
    if (t.empty()) t.push_back(c.physics.horizon);
    std::sort(t.begin(), t.end());
    return t;
}

void run_simulate(const RunConfig& c, Emitter& out, RunManifest& m) {
    m.streams["u"] = kStreamU;
    m.replicates = 1;
    SampleSchedule schedule;
    schedule.interval = c.numerics.sample_interval;
    schedule.snapshot_times = c.physics.times;
    const Trajectory traj = simulate(initial(c, c.physics.profile), c.coefficients(), c.params(), c.physics.horizon,
                                     schedule, NoiseStream(c.monte_carlo.seed, 0, kStreamU));
    out.csv("trajectory.csv", [&](std::ostream& s) { write_csv(traj, s); });
    out.csv("final_field.csv", [&](std::ostream& s) { write_csv(traj.final_field, s); });
    out.write("final_field.json", sidecar_json(traj.final_field) + "\n");
    for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
        const auto& [t, f] = traj.snapshots[i];
        out.csv(fmt::format("snapshot_{}.csv", i), [&](std::ostream& s) { write_csv(f, s); });
        out.write(fmt::format("snapshot_{}.json", i), sidecar_json(f) + "\n");
    }
    out.csv("summary.csv", [&](std::ostream& s) {
        s << "name,value\n";
        s << "extinction_time," << (traj.extinction_time ? number(*traj.extinction_time) : "") << "\n";
        s << "final_mass," << number(total_mass(traj.final_field)) << "\n";
    });
}

void run_duality(const RunConfig& c, Emitter& out, RunManifest& m) {
    m.streams["u"] = kStreamU;
    m.streams["v"] = kStreamV;
    m.replicates = c.monte_carlo.reps;
    const DualityResult d = self_duality_gap(initial(c, c.physics.profile), c.params(), initial(c, c.physics.dual_profile),
                                             c.dual_params(), c.physics.horizon, c.coefficients(), monte_carlo(c));
    out.csv("duality.csv", [&](std::ostream& s) {
        write_estimate_header(s);
        write_estimate_row(s, "forward", d.forward);
        write_estimate_row(s, "backward", d.backward);
        Estimate gap;
        gap.mean = d.gap();
        gap.half_width = kZ95 * std::hypot(d.forward.standard_error(), d.backward.standard_error());
        gap.n = d.forward.n;
        gap.n_conditioned = d.forward.n_conditioned;
        write_estimate_row(s, "gap", gap);
    });
}

void run_extinction(const RunConfig& c, Emitter& out, RunManifest& m) {
    m.streams["u"] = kStreamU;
    m.replicates = c.monte_carlo.reps;
    const Field u0 = initial(c, c.physics.profile);
    const std::vector<double> checkpoints = times_or_horizon(c);
    const auto times = extinction_times(u0, c.coefficients(), c.params(), checkpoints.back(), monte_carlo(c));
    const double mass = total_mass(u0);
    out.csv("extinction.csv", [&](std::ostream& s) {
        s << "t,p_hat,half_width,n,exact\n";
        for (double t : checkpoints) {
            const Estimate e = extinction_prob(times, t);
            const std::string exact =
                c.physics.superprocess ? number(superprocess_extinction_exact(c.physics.theta, mass, t)) : "";
            s << fmt::format("{},{},{},{},{}\n", number(t), number(e.mean), number(e.half_width), e.n, exact);
        }
    });
}

void run_wave(const RunConfig& c, Emitter& out, RunManifest& m) {
    m.streams["u"] = kStreamU;
    m.replicates = c.monte_carlo.reps;
    const std::vector<double> horizons = times_or_horizon(c);
    const WaveEnsemble w = nu_T_ensemble(initial(c, c.physics.profile), c.coefficients(), c.params(), horizons,
                                         c.numerics.sample_interval, c.numerics.profile_width, monte_carlo(c));
    for (const ProfileAverage& p : w.profiles) {
        out.csv(fmt::format("profile_T{}.csv", tag(p.T)), [&](std::ostream& s) { write_csv(p, s); });
        nlohmann::ordered_json j;
        j["T"] = p.T;
        j["dx"] = p.mean.dx();
        j["first_index"] = p.mean.first_index();
        j["n_conditioned"] = p.n_conditioned;
        j["survival"] = p.survival.mean;
        j["survival_half_width"] = p.survival.half_width;
        j["front_position"] = right_marker(p.mean);
        out.write(fmt::format("profile_T{}.json", tag(p.T)), j.dump(2) + "\n");
    }

    std::vector<double> speeds;
    out.csv("front_speed.csv", [&](std::ostream& s) {
        s << "replicate,speed\n";
        for (std::size_t r = 0; r < w.fronts.size(); ++r) {
            if (w.extinction[r] && *w.extinction[r] <= c.physics.fit_t1) continue;
            const double v = wave_speed(w.sample_times[r], w.fronts[r], c.physics.fit_t0, c.physics.fit_t1);
            speeds.push_back(v);
            s << r << "," << number(v) << "\n";
        }
    });
    out.csv("wave.csv", [&](std::ostream& s) {
        write_estimate_header(s);
        if (!speeds.empty()) {
            Estimate speed = mean_estimate(speeds);
            speed.n = c.monte_carlo.reps;
            write_estimate_row(s, "speed", speed);
        }
        for (const ProfileAverage& p : w.profiles) write_estimate_row(s, "survival_T" + tag(p.T), p.survival);
    });
}

void run_recurrence(const RunConfig& c, Emitter& out, RunManifest& m) {
    m.streams["u"] = kStreamU;
    m.replicates = c.monte_carlo.reps;
    const std::vector<double> horizons = times_or_horizon(c);
    const double last = horizons.back();
    const auto records =
        recurrence_records(initial(c, c.physics.profile), c.physics.b_lo, c.physics.b_hi, c.coefficients(), c.params(),
                           last, c.physics.revisit_start, c.numerics.sample_interval, monte_carlo(c));
    out.csv("recurrence.csv", [&](std::ostream& s) {
        write_estimate_header(s);
        for (double h : horizons) write_estimate_row(s, "horizon_" + tag(h), recurrence_fraction(records, h, last));
    });
}

void run_upper(const RunConfig& c, Emitter& out, RunManifest& m) {
    m.streams["u"] = kStreamU;
    m.replicates = c.monte_carlo.reps;
    const MonteCarlo mc = monte_carlo(c);
    const Field phi = initial(c, c.physics.phi);
    const double T = c.physics.horizon;
    const Estimate moment =
        upper_moment(T, c.physics.level, c.physics.upper_kind, phi, c.coefficients(), c.params(), c.grid(), mc);
    Estimate bound;
    bound.mean = upper_moment_bound(c.physics.theta, total_mass(phi), T);
    out.csv("upper.csv", [&](std::ostream& s) {
        write_estimate_header(s);
        write_estimate_row(s, "moment", moment);
        write_estimate_row(s, "bound", bound);
    });
    const std::vector<double> times = times_or_horizon(c);
    const ScalingTable table = front_scaling_probe(times, c.physics.level, c.coefficients(), c.params(), c.grid(), mc);
    out.csv("scaling.csv", [&](std::ostream& s) {
        s << "T,mean,half_width,n\n";
        for (const ScalingRow& row : table.rows) {
            s << fmt::format("{},{},{},{}\n", number(row.T), number(row.front.mean), number(row.front.half_width),
                             row.front.n);
        }
    });
    out.csv("scaling_fit.csv", [&](std::ostream& s) {
        s << "slope,slope_stderr\n" << number(table.slope) << "," << number(table.slope_stderr) << "\n";
    });
}

void run_couple(const RunConfig& c, Emitter& out, RunManifest& m) {
    m.streams["lower"] = kStreamU;
    m.streams["increment"] = kStreamV;
    m.replicates = c.monte_carlo.reps;
    const Field u0 = initial(c, c.physics.profile);
    const Coefficients coeffs = c.coefficients();
    const StepParams p = c.params();
    SampleSchedule schedule;
    schedule.interval = c.numerics.sample_interval;
    std::optional<Field> v0;
    if (c.physics.coupling == CouplingKind::monotone) v0 = initial(c, c.physics.dual_profile);

    auto pair_for = [&](std::size_t r) {
        const NoiseStream lower(c.monte_carlo.seed, static_cast<std::uint32_t>(r), kStreamU);
        const NoiseStream increment(c.monte_carlo.seed, static_cast<std::uint32_t>(r), kStreamV);
        switch (c.physics.coupling) {
        case CouplingKind::monotone:
            return monotone_pair(u0, *v0, coeffs, p, c.physics.horizon, schedule, lower, increment);
        case CouplingKind::superprocess:
            return superprocess_pair(u0, coeffs, p, c.physics.horizon, schedule, lower, increment);
        case CouplingKind::upper_measure:
            return left_upper_pair(u0, c.physics.level, coeffs, p, c.physics.horizon, schedule, lower, increment);
        }
        throw std::logic_error("unreachable coupling kind");
    };

    struct Summary {
        double min_gap = 0.0;
        std::uint64_t violations = 0;
        std::optional<double> lower_extinction;
        std::optional<double> upper_extinction;
    };
    std::optional<CoupledPair> first;
    const auto summaries = monte_carlo(c).executor.map<Summary>(c.monte_carlo.reps, [&](std::size_t r) {
        CoupledPair pair = pair_for(r);
        Summary s{pair.min_gap, pair.violations, pair.lower.extinction_time, pair.upper.extinction_time};
        if (r == 0) first = std::move(pair);
        return s;
    });

    auto opt = [](const std::optional<double>& v) { return v ? number(*v) : std::string(); };
    out.csv("couple.csv", [&](std::ostream& s) {
        s << "replicate,min_gap,violations,lower_extinction,upper_extinction\n";
        for (std::size_t r = 0; r < summaries.size(); ++r) {
            const Summary& x = summaries[r];
            s << fmt::format("{},{},{},{},{}\n", r, number(x.min_gap), x.violations, opt(x.lower_extinction),
                             opt(x.upper_extinction));
        }
    });
    out.csv("lower.csv", [&](std::ostream& s) { write_csv(first->lower, s); });
    out.csv("upper.csv", [&](std::ostream& s) { write_csv(first->upper, s); });
    out.write("pair.json", pair_manifest_json(*first) + "\n");
}

} // namespace

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["version"] = version;
    j["command"] = to_string(config.command);
    j["seed"] = config.monte_carlo.seed;
    j["replicates"] = replicates;
    nlohmann::ordered_json s = nlohmann::ordered_json::object();
    for (const auto& [role, id] : streams) s[role] = id;
    j["streams"] = s;
    j["wall_clock_seconds"] = wall_clock_seconds;
    j["files"] = files;
    j["config"] = to_ini(config);
    return j.dump(2);
}

RunConfig preset(Command command) {
    RunConfig c;
    c.command = command;
    auto& ph = c.physics;
    auto& nu = c.numerics;
    auto& mc = c.monte_carlo;
    switch (command) {
    case Command::simulate:
        ph.horizon = 5.0;
        nu.x_min = -20.0;
        nu.x_max = 20.0;
        mc.reps = 1;
        break;
    case Command::duality:
        ph.profile = "kink";
        ph.dual_profile = "bump center=0 half_width=1 mass=1";
        ph.horizon = 0.5;
        nu.left = Boundary::held;
        mc.reps = 4000;
        break;
    case Command::extinction:
        ph.superprocess = true;
        ph.horizon = 1.0;
        mc.reps = 4000;
        break;
    case Command::wave:
        ph.theta = 5.0;
        ph.times = {20.0, 40.0};
        ph.fit_t0 = 10.0;
        ph.fit_t1 = 20.0;
        nu.dx = 0.2;
        nu.dt = 0.01;
        nu.x_min = -190.0;
        nu.x_max = 190.0;
        mc.reps = 150;
        break;
    case Command::recurrence:
        ph.theta = 5.0;
        ph.profile = "bump center=8 half_width=1 mass=1";
        ph.times = {10.0, 20.0, 40.0};
        nu.x_min = -40.0;
        nu.x_max = 40.0;
        mc.reps = 200;
        break;
    case Command::upper:
        ph.upper_kind = UpperKind::full;
        ph.times = {1.0, 2.0, 4.0, 8.0};
        nu.x_min = -20.0;
        nu.x_max = 20.0;
        mc.reps = 1000;
        break;
    case Command::couple:
        ph.dual_profile = "bump center=0 half_width=1 mass=2";
        ph.horizon = 2.0;
        mc.reps = 500;
        break;
    }
    return c;
}

std::filesystem::path output_dir(const RunConfig& config) {
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return config.output.dir;
}

RunManifest run(const RunConfig& config, const std::filesystem::path& dir) {
    validate(config);
    const auto start = std::chrono::steady_clock::now();
    RunManifest manifest;
    manifest.config = config;
    Emitter out(dir, manifest);
    switch (config.command) {
    case Command::simulate: run_simulate(config, out, manifest); break;
    case Command::duality: run_duality(config, out, manifest); break;
    case Command::extinction: run_extinction(config, out, manifest); break;
    case Command::wave: run_wave(config, out, manifest); break;
    case Command::recurrence: run_recurrence(config, out, manifest); break;
    case Command::upper: run_upper(config, out, manifest); break;
    case Command::couple: run_couple(config, out, manifest); break;
    }
    manifest.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest.files.push_back("manifest.json");
    std::ofstream(dir / "manifest.json") << manifest.to_json() << "\n";
    return manifest;
}

RunManifest run(const RunConfig& config) { return run(config, output_dir(config)); }

} // namespace stokpp
