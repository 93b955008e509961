#include "purcell/errors.hpp"
#include "purcell/report/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace
{
using purcell::report::CommandContext;
using purcell::report::Config;

struct Subcommand
{
    const char *name;
    const char *description;
    int (*run)(CommandContext &);
    // flag name -> config key
    std::vector<std::pair<std::string, std::string>> options;
};

std::vector<Subcommand> subcommands()
{
    using namespace purcell::report;
    return {
        {"fit-fano",
         "Background-correct a reflection spectrum and fit a Fano lineshape",
         cmd_fit_fano,
         {{"--spectrum", "fano.spectrum"},
          {"--background", "fano.background"},
          {"--background-mode", "fano.background_mode"},
          {"--window-lo-nm", "fano.window_lo_nm"},
          {"--window-hi-nm", "fano.window_hi_nm"}}},
        {"fit-lifetime",
         "Fit a single-exponential decay to a histogram or raw time tags",
         cmd_fit_lifetime,
         {{"--trace", "lifetime.trace"},
          {"--timetags", "lifetime.timetags"},
          {"--bin-width-ps", "lifetime.bin_width_ps"},
          {"--period-ns", "lifetime.period_ns"},
          {"--pulse-width-ns", "lifetime.pulse_width_ns"},
          {"--photon-channel", "lifetime.photon_channel"},
          {"--sync-channel", "lifetime.sync_channel"},
          {"--downsample", "lifetime.downsample"},
          {"--window-lo-ns", "lifetime.window_lo_ns"},
          {"--window-hi-ns", "lifetime.window_hi_ns"}}},
        {"fit-tuning",
         "Fit a multi-Lorentzian to emission rate versus cavity wavelength",
         cmd_fit_tuning,
         {{"--tuning", "tuning.series"},
          {"--traces", "tuning.traces"},
          {"--n-peaks", "tuning.n_peaks"},
          {"--centers", "tuning.centers"},
          {"--window-lo-ns", "lifetime.window_lo_ns"},
          {"--window-hi-ns", "lifetime.window_hi_ns"}}},
        {"solve-br",
         "Solve for the branching ratio and fabrication offset from two or more devices",
         cmd_solve_br,
         {{"--eta-min", "solver.eta_min"},
          {"--eta-max", "solver.eta_max"},
          {"--tol", "solver.tol"},
          {"--grid-step", "solver.grid_step"},
          {"--curve-step", "solver.curve_step"}}},
        {"purcell",
         "Convert enhancement ratios into Purcell factors at a given branching ratio",
         cmd_purcell,
         {{"--zeta-c", "purcell.zeta_c"},
          {"--zeta-d", "purcell.zeta_d"},
          {"--eta-br", "purcell.eta_br"},
          {"--tau-off-ns", "purcell.tau_off_ns"},
          {"--pattern-angle-deg", "purcell.pattern_angle_deg"},
          {"--dipole-family", "purcell.dipole_family"}}},
        {"synth",
         "Write a synthetic dataset with its ground truth",
         cmd_synth,
         {{"--eta-br", "synth.eta_br"},
          {"--phi-deg", "synth.phi_deg"},
          {"--second-emitter", "synth.second_emitter"},
          {"--counts", "synth.counts_per_trace"},
          {"--background-fraction", "synth.background_fraction"},
          {"--points-per-line", "synth.points_per_line"},
          {"--cavity-fwhm-nm", "synth.cavity_fwhm_nm"},
          {"--tau-off-ns", "synth.tau_off_ns"}}},
        {"survey",
         "Summarize resonance wavelength and quality factor across devices",
         cmd_survey,
         {{"--input", "survey.input"},
          {"--wavelength-bin-nm", "survey.wavelength_bin_nm"},
          {"--q-bin", "survey.q_bin"}}},
    };
}
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Cavity-coupled color center analysis"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    std::map<std::string, std::optional<std::string>> common{
        {"general.out_dir", std::nullopt}, {"general.seed", std::nullopt}, {"general.eta_dw", std::nullopt}};
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
    app.add_option("--out-dir", common["general.out_dir"], "Output directory");
    app.add_option("--seed", common["general.seed"], "Random seed (positive integer)");
    app.add_option("--eta-dw", common["general.eta_dw"], "Debye-Waller factor");
    app.add_option("--set", overrides, "Override any configuration key: section.key=value");

    const auto table = subcommands();
    std::vector<std::map<std::string, std::optional<std::string>>> values(table.size());
    std::vector<CLI::App *> apps;
    for (std::size_t i = 0; i < table.size(); ++i)
    {
        CLI::App *sub = app.add_subcommand(table[i].name, table[i].description);
        sub->fallthrough();
        for (const auto &[flag, key] : table[i].options)
        {
            sub->add_option(flag, values[i][key], "config key " + key);
        }
        apps.push_back(sub);
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return purcell::report::kExitUsage;
    }

    Config config;
    try
    {
        if (config_path)
        {
            config = Config::load(*config_path);
        }
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return purcell::report::kExitUsage;
    }
    for (const auto &[key, value] : common)
    {
        if (value)
        {
            config.set(key, *value);
        }
    }
    for (const auto &text : overrides)
    {
        const auto eq = text.find('=');
        if (eq == std::string::npos || text.find('.') > eq)
        {
            std::cerr << "error: --set expects section.key=value, got '" << text << "'\n";
            return purcell::report::kExitUsage;
        }
        config.set(text.substr(0, eq), text.substr(eq + 1));
    }

    for (std::size_t i = 0; i < table.size(); ++i)
    {
        if (!apps[i]->parsed())
        {
            continue;
        }
        for (const auto &[key, value] : values[i])
        {
            if (value)
            {
                config.set(key, *value);
            }
        }
        CommandContext ctx{std::move(config), std::cout, std::cerr};
        return purcell::report::run_guarded(ctx, table[i].run);
    }
    return purcell::report::kExitUsage;
}
