#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <yaml-cpp/exceptions.h>

#include "dbp/common.hpp"
#include "dbp/runner.hpp"

namespace {

struct Flags
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::optional<int> trials;
    bool quiet = false;
};

void add_flags(CLI::App* sub, Flags& f, bool runs)
{
    sub->add_option("--config", f.config, "experiment file (YAML or JSON)")->required();
    sub->add_option("--seed", f.seed, "override the seed");
    sub->add_option("--trials", f.trials, "override the number of trials")->check(CLI::PositiveNumber);
    if (runs) {
        sub->add_option("--out", f.out, "output directory");
        sub->add_flag("--quiet", f.quiet, "no progress on stderr");
    }
}

dbp::runner::ExperimentSpec load(const std::string& command, const Flags& f)
{
    auto spec = dbp::runner::load_spec(f.config);
    if (command != "validate") {
        if (spec.experiment.empty())
            spec.experiment = command;
        else if (spec.experiment != command)
            throw dbp::ConfigError("config describes experiment '" + spec.experiment +
                                   "' but subcommand is '" + command + "'");
    }
    if (f.seed)
        spec.cfg.seed = *f.seed;
    if (f.trials)
        spec.trials = *f.trials;
    dbp::runner::validate(spec);
    return spec;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Distributed baseband processing experiments"};
    app.require_subcommand(1);
    Flags flags;
    for (const char* name : {"chanest", "ul-eq", "dl-precode", "multicell", "sweep"})
        add_flags(app.add_subcommand(name, std::string("run a ") + name + " experiment"), flags, true);
    add_flags(app.add_subcommand("validate", "check a config file and exit"), flags, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        dbp::runner::apply_thread_env();
        const auto spec = load(command, flags);
        if (command == "validate") {
            std::cout << flags.config << ": ok (" << spec.experiment << '/' << spec.algorithm << ")\n";
            return 0;
        }
        dbp::runner::run(spec, flags.out, {flags.quiet, true});
        return 0;
    } catch (const dbp::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const dbp::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const YAML::Exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
