#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "stokpp/config.hpp"
#include "stokpp/run.hpp"

using namespace stokpp;

namespace {

std::string field_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

} // namespace

TEST_CASE("defaults round-trip") {
    const RunConfig c;
    CHECK(from_ini(to_ini(c)) == c);
}

TEST_CASE("presets validate and round-trip") {
    for (Command cmd : {Command::simulate, Command::duality, Command::extinction, Command::wave, Command::recurrence,
                        Command::upper, Command::couple}) {
        const RunConfig c = preset(cmd);
        CHECK(c.command == cmd);
        CHECK_NOTHROW(validate(c));
        CHECK(from_ini(to_ini(c)) == c);
        CHECK(parse_command(to_string(cmd)) == cmd);
    }
}

TEST_CASE("awkward doubles round-trip exactly") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        RunConfig c;
        c.physics.theta = 0.1 + 9.0 * u(rng);
        c.physics.times = {u(rng), 1.0 / 3.0, 1e-7 * (1.0 + u(rng))};
        c.numerics.dx = 0.05 + u(rng);
        c.numerics.dt = c.numerics.dx * c.numerics.dx / 2.0 * u(rng) + 1e-12;
        c.monte_carlo.seed = rng();
        const RunConfig back = from_ini(to_ini(c));
        CHECK(back == c);
        CHECK(back.physics.times == c.physics.times);
    }
}

TEST_CASE("partial files keep defaults") {
    const RunConfig c = from_ini("[physics]\ntheta = 2.5\n[monte_carlo]\nreps = 7\n");
    CHECK(c.physics.theta == 2.5);
    CHECK(c.monte_carlo.reps == 7);
    RunConfig expected;
    expected.physics.theta = 2.5;
    expected.monte_carlo.reps = 7;
    CHECK(c == expected);

    const RunConfig base = preset(Command::wave);
    const RunConfig layered = from_ini("[monte_carlo]\nwidth = 3\n", base);
    CHECK(layered.monte_carlo.width == 3);
    CHECK(layered.physics.times == base.physics.times);
}

TEST_CASE("errors name the offending field") {
    CHECK(field_of([] { from_ini("[physics]\ntheta = abc\n"); }) == "physics.theta");
    CHECK(field_of([] { from_ini("[physics]\ntheta = -1\n"); }) == "physics.theta");
    CHECK(field_of([] { from_ini("[physics]\nthetta = 1\n"); }) == "physics.thetta");
    CHECK(field_of([] { from_ini("[physics]\nprofile = blob\n"); }) == "physics.profile");
    CHECK(field_of([] { from_ini("[physics]\nnoise = maybe\n"); }) == "physics.noise");
    CHECK(field_of([] { from_ini("[physics]\ntimes = 1, x\n"); }) == "physics.times");
    CHECK(field_of([] { from_ini("[physics]\ntimes = 1, -2\n"); }) == "physics.times");
    CHECK(field_of([] { from_ini("[numerics]\ndt = 0.01\n"); }) == "numerics.dt");
    CHECK(field_of([] { from_ini("[numerics]\nleft = sticky\n"); }) == "numerics.left");
    CHECK(field_of([] { from_ini("[numerics]\nscheme = rk4\n"); }) == "numerics.scheme");
    CHECK(field_of([] { from_ini("[numerics]\nx_min = 0\nx_max = 0.2\n"); }) == "numerics.x_max");
    CHECK(field_of([] { from_ini("[monte_carlo]\nreps = 0\n"); }) == "monte_carlo.reps");
    CHECK(field_of([] { from_ini("[monte_carlo]\nreps = -3\n"); }) == "monte_carlo.reps");
    CHECK(field_of([] { from_ini("[monte_carlo]\nwidth = 0\n"); }) == "monte_carlo.width");
    CHECK(field_of([] { from_ini("[extra]\nx = 1\n"); }) == "extra");
    CHECK(field_of([] { from_ini("[run]\ncommand = dance\n"); }) == "run.command");
    CHECK(field_of([] { from_ini("[run]\ncommand = recurrence\n"); }) == "physics.times");
    CHECK(field_of([] { from_ini("[run]\ncommand = couple\n[physics]\ncoupling = superprocess\ngamma = 2\n"); }) ==
          "physics.gamma");
    CHECK(field_of([] { from_ini("[physics\n"); }) == "config");
}

TEST_CASE("set_value") {
    RunConfig c;
    set_value(c, "physics.theta", "3");
    set_value(c, "numerics.right", "held");
    set_value(c, "physics.times", "1,2, 4");
    CHECK(c.physics.theta == 3.0);
    CHECK(c.numerics.right == Boundary::held);
    CHECK(c.physics.times == std::vector<double>{1, 2, 4});
    CHECK(field_of([&] { set_value(c, "theta", "1"); }) == "theta");
    CHECK(field_of([&] { set_value(c, "physics.nope", "1"); }) == "physics.nope");
}

TEST_CASE("derived parameters") {
    RunConfig c;
    c.physics.theta = 2.0;
    c.physics.superprocess = true;
    const Coefficients k = c.coefficients();
    CHECK(k.theta == 2.0);
    CHECK(k.gamma == 0.0);
    c.numerics.left = Boundary::held;
    c.numerics.dual_right = Boundary::held;
    CHECK(c.params().left() == Boundary::held);
    CHECK(c.params().right() == Boundary::absorbing);
    CHECK(c.dual_params().left() == Boundary::absorbing);
    CHECK(c.dual_params().right() == Boundary::held);
}

TEST_CASE("load_config and output directory") {
    const auto path = std::filesystem::temp_directory_path() / "stokpp_test_config.ini";
    std::ofstream(path) << "[output]\ndir = somewhere\n";
    const RunConfig c = load_config(path);
    CHECK(c.output.dir == "somewhere");
    std::filesystem::remove(path);
    CHECK(field_of([&] { load_config(path); }) == "config");

    ::unsetenv(kOutputDirEnv);
    CHECK(output_dir(c) == std::filesystem::path("somewhere"));
    ::setenv(kOutputDirEnv, "elsewhere", 1);
    CHECK(output_dir(c) == std::filesystem::path("elsewhere"));
    ::setenv(kOutputDirEnv, "", 1);
    CHECK(output_dir(c) == std::filesystem::path("somewhere"));
    ::unsetenv(kOutputDirEnv);
}
