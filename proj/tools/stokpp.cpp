#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stokpp/estimators.hpp"
#include "stokpp/run.hpp"

namespace {

struct Overrides {
    std::string config_file;
    std::vector<std::string> sets;
    std::string out;
    bool print_only = false;
};

stokpp::RunConfig assemble(std::optional<stokpp::Command> command, const Overrides& o) {
    using namespace stokpp;
    RunConfig config = command ? preset(*command) : RunConfig{};
    if (!o.config_file.empty()) config = load_config(o.config_file, config);
    if (command) config.command = *command;
    for (const std::string& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError(kv, "--set expects section.key=value");
        set_value(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    validate(config);
    return config;
}

int execute(const stokpp::RunConfig& config, const Overrides& o) {
    if (o.print_only) {
        std::cout << stokpp::to_ini(config);
        return stokpp::kExitOk;
    }
    const auto dir = o.out.empty() ? stokpp::output_dir(config) : std::filesystem::path(o.out);
    const stokpp::RunManifest m = stokpp::run(config, dir);
    std::cout << "wrote " << m.files.size() << " files to " << dir.string() << " in " << m.wall_clock_seconds
              << " s\n";
    return stokpp::kExitOk;
}

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("-c,--config", o.config_file, "INI config file")->check(CLI::ExistingFile);
    app->add_option("-s,--set", o.sets, "override one key, e.g. --set monte_carlo.reps=200");
    app->add_option("-o,--out", o.out, "output directory (beats STOKPP_OUTPUT_DIR and output.dir)");
    app->add_flag("--print-config", o.print_only, "print the effective config and exit");
}

} // namespace

int main(int argc, char** argv) {
    using namespace stokpp;
    CLI::App app{"Monte Carlo experiments for the stochastic KPP equation with branching noise"};
    app.require_subcommand(1);

    Overrides overrides;
    std::optional<Command> chosen;
    bool from_file = false;

    const std::vector<std::pair<Command, std::string>> commands{
        {Command::simulate, "one trajectory: observables, final field and snapshots"},
        {Command::duality, "Laplace functionals of the self-duality identity"},
        {Command::extinction, "extinction probability against the superprocess closed form"},
        {Command::wave, "front-aligned average profiles and front speeds"},
        {Command::recurrence, "fraction of survivors whose support returns to B"},
        {Command::upper, "upper-measure moment, its bound, and front scaling"},
        {Command::couple, "pathwise coupled pairs and their order check"},
    };
    for (const auto& [command, help] : commands) {
        CLI::App* sub = app.add_subcommand(to_string(command), help);
        add_common(sub, overrides);
        sub->callback([&chosen, command = command] { chosen = command; });
    }
    CLI::App* run_sub = app.add_subcommand("run", "run whatever command the config file names");
    add_common(run_sub, overrides);
    run_sub->get_option("--config")->required();
    run_sub->callback([&from_file] { from_file = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const RunConfig config = assemble(from_file ? std::nullopt : chosen, overrides);
        return execute(config, overrides);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const StabilityError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NoSurvivors& e) {
        std::cerr << "no survivors: " << e.what() << "\n";
        return kExitNoSurvivors;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}
