#include "plumeseek/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace plumeseek;

int main(int argc, char** argv)
{
    CLI::App app{"Gas source localization by one-shot plume simulation"};
    app.require_subcommand(1);

    std::string config_path, truth, out = "out", algo, log_path;
    std::optional<std::uint64_t> seed;
    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "run seed, overrides the config");
        sub->add_option("--out", out, "output directory");
        sub->add_option("--algo", algo, "algorithm name");
        sub->add_option("--truth", truth, "true source as \"x,y\" in meters");
    };
    CLI::App* simulate = app.add_subcommand("simulate", "run the plume simulator and sample probes");
    CLI::App* localize = app.add_subcommand("localize", "locate the source from a flight log");
    CLI::App* active = app.add_subcommand("active", "fly an active-sensing mission");
    CLI::App* bench = app.add_subcommand("bench", "sensitivity, speed and convergence reports");
    for (CLI::App* sub : {simulate, localize, active, bench})
        common(sub);
    localize->add_option("log", log_path, "flight log CSV")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        CommandOptions opt;
        opt.config = config_path.empty() ? Config{} : load_config(config_path);
        if (seed)
            opt.config.seed = *seed;
        opt.config.validate();
        opt.out = out;
        opt.algo = algo;
        if (!truth.empty())
            opt.truth = parse_point(truth);
        opt.log = log_path;
        opt.threads = default_threads();
        opt.msg = &std::cout;

        if (simulate->parsed())
            return cmd_simulate(opt);
        if (localize->parsed())
            return cmd_localize(opt);
        if (active->parsed())
            return cmd_active(opt);
        return cmd_bench(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
