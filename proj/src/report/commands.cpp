#include "purcell/report/commands.hpp"

#include "purcell/errors.hpp"
#include "purcell/fitting/fits.hpp"
#include "purcell/io/csv.hpp"
#include "purcell/io/rng.hpp"
#include "purcell/io/synth.hpp"
#include "purcell/io/timetags.hpp"
#include "purcell/report/output.hpp"
#include "purcell/report/survey.hpp"
#include "purcell/report/svg.hpp"
#include "purcell/solvers.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <tuple>

namespace purcell::report
{
namespace
{
namespace fs = std::filesystem;

constexpr const char *kFitColor = "#d62728";
constexpr const char *kDataColor = "#1f77b4";
const std::vector<std::string> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

fs::path out_dir(const Config &cfg)
{
    return cfg.get_string("general.out_dir", "purcell_out");
}

fs::path require_file(const Config &cfg, const std::string &key, const std::string &flag)
{
    const auto p = cfg.find_path(key);
    if (!p)
    {
        throw InputError("missing required input " + flag);
    }
    if (!fs::is_regular_file(*p))
    {
        throw InputError(flag + ": file not found: " + p->string());
    }
    return *p;
}

std::string pm(double value, std::optional<double> sigma)
{
    if (!sigma || !std::isfinite(*sigma))
    {
        return fmt::format("{:.6g}", value);
    }
    return fmt::format("{:.6g} +- {:.2g}", value, *sigma);
}

void write_report(const Config &cfg, const std::string &name, const std::string &body)
{
    std::string text = body;
    text += "\n# resolved configuration\n";
    text += cfg.resolved_ini();
    write_file_atomic(out_dir(cfg) / name, text);
}

std::string fit_result_csv(const fit::FitResult &r)
{
    std::string out = "quantity,kind,value,sigma\n";
    for (std::size_t i = 0; i < r.params.size(); ++i)
    {
        out += fmt::format("{},param,{},{}\n", r.names[i], io::format_double(r.params[i]),
                           io::format_double(r.sigma[i]));
    }
    for (const auto &d : r.derived)
    {
        out += fmt::format("{},derived,{},{}\n", d.name, io::format_double(d.value), io::format_double(d.sigma));
    }
    out += fmt::format("chi2,stat,{},\nreduced_chi2,stat,{},\nn_points,stat,{},\n", io::format_double(r.chi2),
                       io::format_double(r.reduced_chi2), r.n_points);
    return out;
}

std::string fit_result_text(const fit::FitResult &r)
{
    std::string out = fmt::format("model: {}\nconverged: {}\niterations: {}\npoints: {}\nchi2: {:.6g}\n"
                                  "reduced_chi2: {:.6g}\nwindow: [{:.6g}, {:.6g}]\n",
                                  r.model_id, r.converged ? "yes" : "no", r.iterations, r.n_points, r.chi2,
                                  r.reduced_chi2, r.fit_window.first, r.fit_window.second);
    for (std::size_t i = 0; i < r.params.size(); ++i)
    {
        out += fmt::format("  {} = {}\n", r.names[i], pm(r.params[i], r.sigma[i]));
    }
    for (const auto &d : r.derived)
    {
        out += fmt::format("  {} = {}\n", d.name, pm(d.value, d.sigma));
    }
    for (const auto &w : r.warnings)
    {
        out += "warning: " + w + "\n";
    }
    return out;
}

Plot overlay_plot(const std::string &title, const std::string &x_label, const std::string &y_label,
                  const std::vector<double> &x, const std::vector<double> &y, const fit::FitResult &r,
                  std::pair<double, double> window)
{
    Plot plot{title, x_label, y_label, {}, {}, "data - fit"};
    Series data{"data", {}, {}, SeriesStyle::points, kDataColor};
    Series curve{"fit", {}, {}, SeriesStyle::line, kFitColor};
    Series resid{"residual", {}, {}, SeriesStyle::points, kDataColor};
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        data.x.push_back(x[i]);
        data.y.push_back(y[i]);
        if (x[i] >= window.first && x[i] <= window.second)
        {
            const double f = fit::fitted_curve(r, x[i]);
            curve.x.push_back(x[i]);
            curve.y.push_back(f);
            resid.x.push_back(x[i]);
            resid.y.push_back(y[i] - f);
        }
    }
    plot.series = {data, curve};
    plot.residuals = {resid};
    return plot;
}

SolverSettings solver_settings(const Config &cfg)
{
    SolverSettings s;
    s.eta_dw = cfg.get_double("general.eta_dw", kDefaultEtaDw);
    s.eta_min = cfg.get_double("solver.eta_min", s.eta_min);
    s.eta_max = cfg.get_double("solver.eta_max", s.eta_max);
    s.tol = cfg.get_double("solver.tol", s.tol);
    s.grid_step = cfg.get_double("solver.grid_step", s.grid_step);
    s.golden_tol = cfg.get_double("solver.golden_tol", s.golden_tol);
    if (!(s.eta_min > 0.0 && s.eta_max < 1.0 && s.eta_min < s.eta_max))
    {
        throw InputError("solver bracket must satisfy 0 < eta_min < eta_max < 1");
    }
    if (!(s.eta_dw > 0.0 && s.eta_dw < 1.0))
    {
        throw InputError("--eta-dw must lie in (0, 1)");
    }
    return s;
}

DipoleFamily parse_family(const std::string &key, const std::string &text)
{
    if (text == "primary")
    {
        return DipoleFamily::primary;
    }
    if (text == "orthogonal")
    {
        return DipoleFamily::orthogonal;
    }
    throw InputError(key + ": expected 'primary' or 'orthogonal', got '" + text + "'");
}

std::string family_name(DipoleFamily f)
{
    return f == DipoleFamily::primary ? "primary" : "orthogonal";
}

std::string label_of(const std::string &section)
{
    const auto dot = section.find('.');
    return dot == std::string::npos ? section : section.substr(dot + 1);
}

// One device section: ratios given directly, or measured from a tuning series.
EnhancementPair load_device(const Config &cfg, const std::string &section, std::ostream &log)
{
    EnhancementPair pair;
    pair.label = cfg.get_string(section + ".label", label_of(section));
    pair.geometry.pattern_angle_deg = cfg.get_double(section + ".pattern_angle_deg", 0.0);
    pair.geometry.dipole_family =
        parse_family(section + ".dipole_family", cfg.get_string(section + ".dipole_family", "primary"));

    const auto zc = cfg.find_double(section + ".zeta_c");
    const auto zd = cfg.find_double(section + ".zeta_d");
    if (zc && zd)
    {
        pair.zeta_c = *zc;
        pair.zeta_d = *zd;
        pair.sigma_zeta_c = cfg.get_double(section + ".sigma_zeta_c", 0.0);
        pair.sigma_zeta_d = cfg.get_double(section + ".sigma_zeta_d", 0.0);
        return pair;
    }
    if (zc || zd)
    {
        throw InputError(section + ": zeta_c and zeta_d must be given together");
    }
    if (!cfg.has(section + ".tuning_csv"))
    {
        throw InputError(section + ": needs zeta_c/zeta_d or tuning_csv");
    }
    const fs::path path = require_file(cfg, section + ".tuning_csv", section + ".tuning_csv");
    const TuningSeries series = io::read_tuning_csv(path);
    const auto centers = cfg.get_list(section + ".centers", {});
    if (centers.size() < 2)
    {
        throw InputError(section + ".centers: at least two peak centres are required");
    }
    const auto peak_c = static_cast<std::size_t>(cfg.get_int(section + ".peak_c", 1));
    const auto peak_d = static_cast<std::size_t>(cfg.get_int(section + ".peak_d", 2));
    if (peak_c < 1 || peak_c > centers.size() || peak_d < 1 || peak_d > centers.size() || peak_c == peak_d)
    {
        throw InputError(section + ": peak_c/peak_d must index distinct entries of centers");
    }
    const fit::FitResult r = fit::fit_multi_lorentzian(series, centers.size(), centers);
    const auto &c = r.derived_value("zeta_" + std::to_string(peak_c));
    const auto &d = r.derived_value("zeta_" + std::to_string(peak_d));
    pair.zeta_c = c.value;
    pair.zeta_d = d.value;
    pair.sigma_zeta_c = c.sigma;
    pair.sigma_zeta_d = d.sigma;
    log << fmt::format("{}: fitted {} -> zeta_c = {}, zeta_d = {}\n", pair.label, path.string(),
                       pm(c.value, c.sigma), pm(d.value, d.sigma));
    return pair;
}

std::pair<double, double> finite_range(const std::vector<std::pair<double, double>> &curve)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto &[eta, phi] : curve)
    {
        if (std::isfinite(phi))
        {
            lo = std::min(lo, phi);
            hi = std::max(hi, phi);
        }
    }
    return {lo, hi};
}

void emit_phi_curves(const Config &cfg, const std::vector<PhiCurve> &curves, const SolverSettings &settings,
                     double step, std::optional<std::pair<double, double>> solution)
{
    std::vector<std::vector<std::pair<double, double>>> sampled;
    for (const auto &c : curves)
    {
        sampled.push_back(sample_phi_curve(c, settings, step));
    }
    std::string csv = "eta_br";
    for (const auto &c : curves)
    {
        csv += ",phi_deg_" + c.source().label;
    }
    csv += '\n';
    Plot plot{"fabrication offset vs branching ratio", "eta_BR", "phi (deg)", {}, {}, {}};
    for (std::size_t k = 0; k < curves.size(); ++k)
    {
        Series s{curves[k].source().label, {}, {}, SeriesStyle::line, kPalette[k % kPalette.size()]};
        for (const auto &[eta, phi] : sampled[k])
        {
            s.x.push_back(eta);
            s.y.push_back(phi);
        }
        plot.series.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < sampled.front().size(); ++i)
    {
        csv += io::format_double(sampled.front()[i].first);
        for (const auto &s : sampled)
        {
            csv += "," + (std::isfinite(s[i].second) ? io::format_double(s[i].second) : std::string());
        }
        csv += '\n';
    }
    if (solution)
    {
        plot.series.push_back({"solution", {solution->first}, {solution->second}, SeriesStyle::points, "#000"});
    }
    write_file_atomic(out_dir(cfg) / "phi_curves.csv", csv);
    write_file_atomic(out_dir(cfg) / "phi_curves.svg", render_svg(plot));
}

std::string survey_stats_line(const std::string &what, const SampleStats &s)
{
    if (!s.mean)
    {
        return fmt::format("{}: no resonances found\n", what);
    }
    return fmt::format("{}: n = {}, mean = {:.6g}, std = {}\n", what, s.n, *s.mean,
                       s.stddev ? fmt::format("{:.6g}", *s.stddev) : std::string("absent"));
}

std::string opt_csv(const std::optional<double> &v)
{
    return v ? io::format_double(*v) : std::string();
}

io::PulseParams pulse_params(const Config &cfg, const std::string &section)
{
    io::PulseParams p;
    p.period_ns = cfg.get_double(section + ".period_ns", p.period_ns);
    p.pulse_width_ns = cfg.get_double(section + ".pulse_width_ns", p.pulse_width_ns);
    try
    {
        p.validate();
    }
    catch (const DomainError &e)
    {
        throw InputError(section + ": " + e.what());
    }
    return p;
}

fit::FitResult fit_trace_with_config(const Config &cfg, const LifetimeTrace &trace)
{
    const auto lo = cfg.find_double("lifetime.window_lo_ns");
    const auto hi = cfg.find_double("lifetime.window_hi_ns");
    if (lo.has_value() != hi.has_value())
    {
        throw InputError("--window-lo-ns and --window-hi-ns must be given together");
    }
    std::optional<fit::DecayWindow> window;
    if (lo)
    {
        window = fit::DecayWindow{*lo, *hi};
    }
    return fit::fit_exp_decay(trace, window);
}
} // namespace

int cmd_fit_fano(CommandContext &ctx)
{
    const Config &cfg = ctx.config;
    const fs::path spectrum_path = require_file(cfg, "fano.spectrum", "--spectrum");
    SpectrumTrace spectrum = io::read_spectrum_csv(spectrum_path);
    std::optional<SpectrumTrace> background;
    std::string background_source = "none";
    if (cfg.has("fano.background"))
    {
        const fs::path bg_path = require_file(cfg, "fano.background", "--background");
        background = io::read_spectrum_csv(bg_path);
        background_source = bg_path.string();
    }
    else if (spectrum.background_counts)
    {
        background = SpectrumTrace{spectrum.wavelength_nm, *spectrum.background_counts, std::nullopt};
        background_source = "third column of " + spectrum_path.string();
    }
    const std::string mode_text = cfg.get_string("fano.background_mode", "divide");
    if (mode_text != "divide" && mode_text != "subtract")
    {
        throw InputError("--background-mode: expected 'divide' or 'subtract'");
    }
    SpectrumTrace corrected = spectrum;
    corrected.background_counts.reset();
    if (background)
    {
        corrected = fit::background_correct(corrected, *background,
                                            mode_text == "divide" ? fit::BackgroundMode::divide
                                                                  : fit::BackgroundMode::subtract);
    }
    const double lo = cfg.get_double("fano.window_lo_nm", corrected.wavelength_nm.front());
    const double hi = cfg.get_double("fano.window_hi_nm", corrected.wavelength_nm.back());

    const fit::FitResult r = fit::fit_fano(corrected, {lo, hi});

    std::string body = fmt::format("# fit-fano\nspectrum: {}\nbackground: {}\n", spectrum_path.string(),
                                   background_source);
    body += fit_result_text(r);
    ctx.out << fmt::format("Q = {}\n", pm(r.derived_value("Q").value, r.derived_value("Q").sigma));

    std::ostringstream corrected_csv;
    io::write_spectrum_csv(corrected_csv, corrected);
    write_file_atomic(out_dir(cfg) / "fano_fit.csv", fit_result_csv(r));
    write_file_atomic(out_dir(cfg) / "fano_spectrum.csv", corrected_csv.str());
    write_file_atomic(out_dir(cfg) / "fano_fit.svg",
                      render_svg(overlay_plot("Fano fit", "wavelength (nm)", "normalized signal",
                                              corrected.wavelength_nm, corrected.counts, r, r.fit_window)));
    write_report(cfg, "fit_fano_report.txt", body);
    return kExitSuccess;
}

int cmd_fit_lifetime(CommandContext &ctx)
{
    const Config &cfg = ctx.config;
    LifetimeTrace trace;
    std::string source;
    if (cfg.has("lifetime.trace"))
    {
        const fs::path p = require_file(cfg, "lifetime.trace", "--trace");
        trace = io::read_lifetime_csv(p);
        source = p.string();
    }
    else if (cfg.has("lifetime.timetags"))
    {
        const fs::path p = require_file(cfg, "lifetime.timetags", "--timetags");
        const io::PulseParams pulse = pulse_params(cfg, "lifetime");
        io::BinningOptions options;
        const long long photon = cfg.get_int("lifetime.photon_channel", 1);
        const long long sync = cfg.get_int("lifetime.sync_channel", -1);
        if (photon >= 0)
        {
            options.photon_channel = static_cast<std::uint8_t>(photon);
        }
        if (sync >= 0)
        {
            options.sync_channel = static_cast<std::uint8_t>(sync);
        }
        trace = io::bin_timetag_file(p, pulse, cfg.get_double("lifetime.bin_width_ps", 32.0), options);
        source = p.string();
    }
    else
    {
        throw InputError("missing required input --trace or --timetags");
    }
    const long long factor = cfg.get_int("lifetime.downsample", 1);
    if (factor < 1)
    {
        throw InputError("--downsample must be at least 1");
    }
    trace = io::downsample(trace, static_cast<std::size_t>(factor));

    const fit::FitResult r = fit_trace_with_config(cfg, trace);
    const double tau = r.derived_value("tau_ns").value;
    const double sigma_tau = r.derived_value("tau_ns").sigma;

    std::string body = fmt::format("# fit-lifetime\ninput: {}\nbins: {} x {} ps, total counts {}\n", source,
                                   trace.size(), trace.bin_width_ps, trace.total());
    if (trace.dropped_partial_bin)
    {
        body += fmt::format("warning: trailing partial bin dropped ({} counts)\n", trace.dropped_counts);
    }
    body += fit_result_text(r);
    body += fmt::format("lifetime_ns: {}\nrate_per_ns: {}\nfourier_limit_mhz: {:.6g}\n", pm(tau, sigma_tau),
                        pm(1.0 / tau, sigma_tau / (tau * tau)), fourier_limit_linewidth_mhz(tau));
    ctx.out << fmt::format("tau = {} ns\n", pm(tau, sigma_tau));

    std::vector<double> t;
    std::vector<double> y;
    for (std::size_t i = 0; i < trace.size(); ++i)
    {
        t.push_back(trace.time_ns(i));
        y.push_back(static_cast<double>(trace.counts[i]));
    }
    std::ostringstream trace_csv;
    io::write_lifetime_csv(trace_csv, trace);
    write_file_atomic(out_dir(cfg) / "lifetime_fit.csv", fit_result_csv(r));
    write_file_atomic(out_dir(cfg) / "lifetime_trace.csv", trace_csv.str());
    write_file_atomic(out_dir(cfg) / "lifetime_fit.svg",
                      render_svg(overlay_plot("lifetime fit", "time (ns)", "counts", t, y, r, r.fit_window)));
    write_report(cfg, "fit_lifetime_report.txt", body);
    return kExitSuccess;
}

int cmd_fit_tuning(CommandContext &ctx)
{
    const Config &cfg = ctx.config;
    TuningSeries series;
    std::string source;
    std::string body = "# fit-tuning\n";
    if (cfg.has("tuning.series"))
    {
        const fs::path p = require_file(cfg, "tuning.series", "--tuning");
        series = io::read_tuning_csv(p);
        source = p.string();
    }
    else if (cfg.has("tuning.traces"))
    {
        const fs::path manifest = require_file(cfg, "tuning.traces", "--traces");
        const io::CsvTable table = io::read_csv(manifest);
        const auto col_wl = table.column("cavity_wavelength_nm");
        const auto col_file = table.column("trace_file");
        if (col_wl == std::string::npos || col_file == std::string::npos)
        {
            throw ParseError(manifest.string() + ": expected columns cavity_wavelength_nm,trace_file");
        }
        source = manifest.string();
        std::vector<std::pair<double, double>> rates;
        std::vector<double> sigmas;
        for (std::size_t r = 0; r < table.rows.size(); ++r)
        {
            const double wl = table.number(r, col_wl);
            fs::path trace_path = table.rows[r].at(col_file);
            if (trace_path.is_relative())
            {
                trace_path = manifest.parent_path() / trace_path;
            }
            try
            {
                const auto fit = fit_trace_with_config(cfg, io::read_lifetime_csv(trace_path));
                const double tau = fit.derived_value("tau_ns").value;
                series.cavity_wavelength_nm.push_back(wl);
                series.rate.push_back(1.0 / tau);
                series.rate_sigma.push_back(fit.derived_value("tau_ns").sigma / (tau * tau));
            }
            catch (const std::exception &e)
            {
                const std::string msg = fmt::format("trace {} ({}) skipped: {}", trace_path.string(),
                                                    table.location(r), e.what());
                body += "warning: " + msg + "\n";
                ctx.err << msg << '\n';
            }
        }
        std::vector<std::size_t> order(series.size());
        for (std::size_t i = 0; i < order.size(); ++i)
        {
            order[i] = i;
        }
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return series.cavity_wavelength_nm[a] < series.cavity_wavelength_nm[b];
        });
        TuningSeries sorted;
        for (const auto i : order)
        {
            sorted.cavity_wavelength_nm.push_back(series.cavity_wavelength_nm[i]);
            sorted.rate.push_back(series.rate[i]);
            sorted.rate_sigma.push_back(series.rate_sigma[i]);
        }
        series = std::move(sorted);
    }
    else
    {
        throw InputError("missing required input --tuning or --traces");
    }

    const long long n_peaks = cfg.get_int("tuning.n_peaks", 0);
    if (n_peaks < 1)
    {
        throw InputError("--n-peaks is required and must be positive");
    }
    const auto centers = cfg.get_list("tuning.centers", {});
    if (centers.size() != static_cast<std::size_t>(n_peaks))
    {
        throw InputError("--centers must list exactly n_peaks initial centres");
    }
    const fit::FitResult r = fit::fit_multi_lorentzian(series, static_cast<std::size_t>(n_peaks), centers);

    body += fmt::format("input: {}\npoints: {}\n", source, series.size());
    body += fit_result_text(r);
    std::string table = "peak,center_nm,zeta,sigma\n";
    body += "\npeak  center_nm  zeta\n";
    bool coupled = false;
    for (long long k = 1; k <= n_peaks; ++k)
    {
        const auto &z = r.derived_value("zeta_" + std::to_string(k));
        const double c = r.value("center_" + std::to_string(k) + "_nm");
        table += fmt::format("{},{},{},{}\n", k, io::format_double(c), io::format_double(z.value),
                             io::format_double(z.sigma));
        body += fmt::format("{:>4}  {:.4f}  {}\n", k, c, pm(z.value, z.sigma));
        ctx.out << fmt::format("zeta_{} = {}\n", k, pm(z.value, z.sigma));
        if (std::abs(z.value - 1.0) > std::max(0.02, 3.0 * z.sigma))
        {
            coupled = true;
        }
    }
    if (!coupled)
    {
        body += "warning: no coupling detected (all zeta consistent with 1)\n";
        ctx.err << "warning: no coupling detected\n";
    }
    std::ostringstream series_csv;
    io::write_tuning_csv(series_csv, series);
    write_file_atomic(out_dir(cfg) / "tuning_zeta.csv", table);
    write_file_atomic(out_dir(cfg) / "tuning_fit.csv", fit_result_csv(r));
    write_file_atomic(out_dir(cfg) / "tuning_series.csv", series_csv.str());
    write_file_atomic(out_dir(cfg) / "tuning_fit.svg",
                      render_svg(overlay_plot("emission rate vs cavity wavelength", "cavity wavelength (nm)",
                                              "rate (1/ns)", series.cavity_wavelength_nm, series.rate, r,
                                              r.fit_window)));
    write_report(cfg, "fit_tuning_report.txt", body);
    return kExitSuccess;
}

int cmd_solve_br(CommandContext &ctx)
{
    const Config &cfg = ctx.config;
    const SolverSettings settings = solver_settings(cfg);
    const double step = cfg.get_double("solver.curve_step", 1e-3);
    if (!(step > 0.0))
    {
        throw InputError("solver.curve_step must be positive");
    }
    const auto sections = cfg.sections_with_prefix("device.");
    if (sections.size() < 2)
    {
        throw InputError("solve-br needs at least two [device.*] sections");
    }
    std::ostringstream log;
    std::vector<EnhancementPair> pairs;
    for (const auto &s : sections)
    {
        pairs.push_back(load_device(cfg, s, log));
    }
    std::vector<PhiCurve> curves;
    for (const auto &p : pairs)
    {
        curves.emplace_back(p, settings.eta_dw);
    }

    std::string body = "# solve-br\n" + log.str();
    PurcellSolution solution;
    try
    {
        solution = solve_branching(pairs, settings);
    }
    catch (const NoIntersectionError &e)
    {
        body += fmt::format("error: {}\n", e.what());
        for (const auto &c : curves)
        {
            const auto [lo, hi] = finite_range(sample_phi_curve(c, settings, step));
            body += fmt::format("phi range of {}: [{:.6g}, {:.6g}] deg\n", c.source().label, lo, hi);
            ctx.err << fmt::format("phi range of {}: [{:.6g}, {:.6g}] deg\n", c.source().label, lo, hi);
        }
        emit_phi_curves(cfg, curves, settings, step, std::nullopt);
        write_report(cfg, "solve_br_report.txt", body);
        throw;
    }
    attach_purcell_factors(solution, pairs, settings.eta_dw);
    solution = propagate_uncertainty(solution, pairs, settings);

    body += fmt::format("method: {}\neta_dw: {}\neta_br: {}\nphi_deg: {}\nresidual_deg: {:.6g}\n",
                        pairs.size() == 2 ? "pair intersection" : "consensus minimum", settings.eta_dw,
                        pm(solution.eta_br, solution.sigma_eta_br), pm(solution.phi_deg, solution.sigma_phi_deg),
                        solution.residual);
    std::string csv = "label,pattern_angle_deg,dipole_family,zeta_c,zeta_d,theta_deg,f_total,f_c,sigma_f_c,f_d,"
                      "sigma_f_d\n";
    for (std::size_t i = 0; i < pairs.size(); ++i)
    {
        const auto &e = solution.per_emitter[i];
        body += fmt::format("{}: theta = {:.4f} deg, F = {:.4f}, F_C = {}, F_D = {}\n", e.label, e.theta_deg,
                            e.f_total, pm(e.f_c, e.sigma_f_c), pm(e.f_d, e.sigma_f_d));
        csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", e.label,
                           io::format_double(pairs[i].geometry.pattern_angle_deg),
                           family_name(pairs[i].geometry.dipole_family), io::format_double(pairs[i].zeta_c),
                           io::format_double(pairs[i].zeta_d), io::format_double(e.theta_deg),
                           io::format_double(e.f_total), io::format_double(e.f_c), opt_csv(e.sigma_f_c),
                           io::format_double(e.f_d), opt_csv(e.sigma_f_d));
    }
    for (const auto &w : solution.warnings)
    {
        body += "warning: " + w + "\n";
    }
    csv += fmt::format("\nquantity,value,sigma\neta_br,{},{}\nphi_deg,{},{}\nresidual_deg,{},\n",
                       io::format_double(solution.eta_br), opt_csv(solution.sigma_eta_br),
                       io::format_double(solution.phi_deg), opt_csv(solution.sigma_phi_deg),
                       io::format_double(solution.residual));
    ctx.out << fmt::format("eta_br = {}\nphi = {} deg\n", pm(solution.eta_br, solution.sigma_eta_br),
                           pm(solution.phi_deg, solution.sigma_phi_deg));
    for (const auto &e : solution.per_emitter)
    {
        ctx.out << fmt::format("{}: F_C = {}, F_D = {}\n", e.label, pm(e.f_c, e.sigma_f_c), pm(e.f_d, e.sigma_f_d));
    }
    emit_phi_curves(cfg, curves, settings, step, std::pair{solution.eta_br, solution.phi_deg});
    write_file_atomic(out_dir(cfg) / "solve_br_solution.csv", csv);
    write_report(cfg, "solve_br_report.txt", body);
    return kExitSuccess;
}

int cmd_purcell(CommandContext &ctx)
{
    const Config &cfg = ctx.config;
    const double eta_dw = cfg.get_double("general.eta_dw", kDefaultEtaDw);
    const auto zc = cfg.find_double("purcell.zeta_c");
    const auto zd = cfg.find_double("purcell.zeta_d");
    const auto eta_br = cfg.find_double("purcell.eta_br");
    if (!zc || !zd || !eta_br)
    {
        throw InputError("purcell needs --zeta-c, --zeta-d and --eta-br");
    }
    EnhancementPair pair;
    pair.zeta_c = *zc;
    pair.zeta_d = *zd;
    pair.label = cfg.get_string("purcell.label", "emitter");
    pair.geometry.pattern_angle_deg = cfg.get_double("purcell.pattern_angle_deg", 0.0);
    pair.geometry.dipole_family =
        parse_family("purcell.dipole_family", cfg.get_string("purcell.dipole_family", "primary"));

    const PurcellFactors f = purcell_from_zeta(pair, eta_dw, *eta_br);
    const double theta = std::atan2(f.f_d, f.f_c) * 180.0 / std::numbers::pi;
    std::string body = fmt::format("# purcell\neta_dw: {}\neta_br: {}\nzeta_c: {}\nzeta_d: {}\nF_C: {:.6g}\n"
                                   "F_D: {:.6g}\nF: {:.6g}\ntheta_deg: {:.6g}\nphi_deg: {:.6g}\n",
                                   eta_dw, *eta_br, pair.zeta_c, pair.zeta_d, f.f_c, f.f_d, std::hypot(f.f_c, f.f_d),
                                   theta, phi_from_theta(pair.geometry, fold_angle_deg(theta)));
    if (const auto tau = cfg.find_double("purcell.tau_off_ns"))
    {
        const double g0 = rate_from_lifetime(*tau);
        const auto physics = EmitterPhysics::from_fractions(g0, eta_dw, *eta_br);
        const double g_c = g0 * pair.zeta_c;
        const double g_d = g0 * pair.zeta_d;
        body += fmt::format("gamma0_per_ns: {:.6g}\ngamma_c_per_ns: {:.6g}\ngamma_d_per_ns: {:.6g}\n"
                            "gamma_psb_per_ns: {:.6g}\nrate_c_on_resonance_per_ns: {:.6g}\n"
                            "rate_d_on_resonance_per_ns: {:.6g}\nfourier_limit_mhz: {:.6g}\n",
                            g0, physics.gamma_c, physics.gamma_d, physics.gamma_psb, g_c, g_d,
                            fourier_limit_linewidth_mhz(*tau));
    }
    ctx.out << fmt::format("F_C = {:.6g}\nF_D = {:.6g}\n", f.f_c, f.f_d);
    write_file_atomic(out_dir(cfg) / "purcell.csv",
                      fmt::format("quantity,value\nf_c,{}\nf_d,{}\nf_total,{}\ntheta_deg,{}\n",
                                  io::format_double(f.f_c), io::format_double(f.f_d),
                                  io::format_double(std::hypot(f.f_c, f.f_d)), io::format_double(theta)));
    write_report(cfg, "purcell_report.txt", body);
    return kExitSuccess;
}

int cmd_synth(CommandContext &ctx)
{
    const Config &cfg = ctx.config;
    const double eta_dw = cfg.get_double("general.eta_dw", kDefaultEtaDw);
    const double eta_br = cfg.get_double("synth.eta_br", 0.7815);
    const double phi = cfg.get_double("synth.phi_deg", 1.1);
    const bool second = cfg.get_int("synth.second_emitter", 0) != 0;

    io::SynthScenario s = io::replica_scenario(eta_br, phi, second);
    const double gamma0 = 1.0 / cfg.get_double("synth.tau_off_ns", 9.412);
    if (!(gamma0 > 0.0) || !std::isfinite(gamma0) || !(eta_br > 0.0 && eta_br < 1.0) ||
        !(eta_dw > 0.0 && eta_dw < 1.0))
    {
        throw InputError("invalid scenario: tau_off_ns must be positive, eta_br and eta_dw in (0, 1)");
    }
    s.physics = EmitterPhysics::from_fractions(gamma0, eta_dw, eta_br);

    const auto device_sections = cfg.sections_with_prefix("device.");
    std::vector<std::string> labels{"parallel", "angled", "second"};
    if (!device_sections.empty())
    {
        s.geometries.clear();
        s.f_peak.clear();
        labels.clear();
        for (const auto &sec : device_sections)
        {
            DeviceGeometry g;
            g.pattern_angle_deg = cfg.get_double(sec + ".pattern_angle_deg", 0.0);
            g.fab_offset_deg = phi;
            g.dipole_family = parse_family(sec + ".dipole_family", cfg.get_string(sec + ".dipole_family", "primary"));
            s.geometries.push_back(g);
            s.f_peak.push_back(cfg.get_double(sec + ".f_peak", 10.0));
            labels.push_back(cfg.get_string(sec + ".label", label_of(sec)));
        }
    }
    labels.resize(s.geometries.size());
    s.cavity_fwhm_nm = cfg.get_double("synth.cavity_fwhm_nm", s.cavity_fwhm_nm);
    s.transition_wavelengths_nm.first = cfg.get_double("synth.lambda_c_nm", s.transition_wavelengths_nm.first);
    s.transition_wavelengths_nm.second = cfg.get_double("synth.lambda_d_nm", s.transition_wavelengths_nm.second);
    const long long counts = cfg.get_int("synth.counts_per_trace", static_cast<long long>(s.counts_per_trace));
    s.counts_per_trace = counts > 0 ? static_cast<std::uint64_t>(counts) : 0;
    s.background_fraction = cfg.get_double("synth.background_fraction", s.background_fraction);
    const long long seed = cfg.get_int("general.seed", 1);
    s.rng_seed = seed > 0 ? static_cast<std::uint64_t>(seed) : 0;
    s.pulse.period_ns = cfg.get_double("synth.period_ns", s.pulse.period_ns);
    s.pulse.pulse_width_ns = cfg.get_double("synth.pulse_width_ns", s.pulse.pulse_width_ns);
    s.pulse_delay_ns = cfg.get_double("synth.pulse_delay_ns", s.pulse_delay_ns);
    s.bin_width_ps = cfg.get_double("synth.bin_width_ps", s.bin_width_ps);
    const long long per_line = cfg.get_int("synth.points_per_line", 33);
    const auto errors = s.validation_errors();
    if (!errors.empty())
    {
        std::string msg = "invalid scenario:";
        for (const auto &e : errors)
        {
            msg += "\n  " + e;
        }
        throw InputError(msg);
    }
    if (per_line < 5)
    {
        throw InputError("invalid scenario:\n  points_per_line: must be at least 5");
    }

    const fs::path dir = out_dir(cfg);
    const auto grid = io::default_tuning_grid(s, static_cast<std::size_t>(per_line));
    const auto [lc, ld] = s.transition_wavelengths_nm;
    std::map<std::string, std::string> truth;
    std::map<std::string, std::string> solve_cfg;
    truth["scenario.eta_br"] = io::format_double(eta_br);
    truth["scenario.eta_dw"] = io::format_double(eta_dw);
    truth["scenario.phi_deg"] = io::format_double(phi);
    truth["scenario.gamma0_per_ns"] = io::format_double(s.physics.gamma0());
    truth["scenario.rng_algorithm"] = io::Rng::kAlgorithm;
    solve_cfg["general.eta_dw"] = io::format_double(eta_dw);

    for (std::size_t d = 0; d < s.geometries.size(); ++d)
    {
        const std::string &label = labels[d];
        const TuningSeries series = io::synth_tuning_series(s, d, grid);
        std::ostringstream tuning;
        io::write_tuning_csv(tuning, series);
        write_file_atomic(dir / ("tuning_" + label + ".csv"), tuning.str());

        for (const auto &[tag, wl] : std::vector<std::pair<std::string, double>>{
                 {"on_c", lc}, {"on_d", ld}, {"off", lc - 30.0 * s.cavity_fwhm_nm}})
        {
            std::ostringstream trace;
            io::write_lifetime_csv(trace, io::synth_lifetime(s, d, wl));
            write_file_atomic(dir / ("lifetime_" + label + "_" + tag + ".csv"), trace.str());
        }

        const DeviceGeometry &g = s.geometries[d];
        const PurcellFactors peak = io::cavity_purcell_factors(s, d, lc);
        const PurcellFactors peak_d = io::cavity_purcell_factors(s, d, ld);
        const std::string sec = "device." + label;
        truth[sec + ".pattern_angle_deg"] = io::format_double(g.pattern_angle_deg);
        truth[sec + ".dipole_family"] = family_name(g.dipole_family);
        truth[sec + ".f_peak"] = io::format_double(s.f_peak[d]);
        truth[sec + ".theta_deg"] = io::format_double(theta_from_geometry(g));
        truth[sec + ".f_c"] = io::format_double(peak.f_c);
        truth[sec + ".f_d"] = io::format_double(peak_d.f_d);
        truth[sec + ".zeta_c"] = io::format_double(enhancement_ratio(peak.f_c, 1.0, eta_dw, eta_br));
        truth[sec + ".zeta_d"] = io::format_double(enhancement_ratio(1.0, peak_d.f_d, eta_dw, eta_br));
        solve_cfg[sec + ".label"] = label;
        solve_cfg[sec + ".pattern_angle_deg"] = io::format_double(g.pattern_angle_deg);
        solve_cfg[sec + ".dipole_family"] = family_name(g.dipole_family);
        solve_cfg[sec + ".tuning_csv"] = "tuning_" + label + ".csv";
        solve_cfg[sec + ".centers"] = io::format_double(lc) + "," + io::format_double(ld);

        if (g.quality_factor)
        {
            io::SpectrumParams sp;
            sp.center_nm = g.resonance_wavelength_nm.value_or(lc);
            sp.fwhm_nm = sp.center_nm / *g.quality_factor;
            sp.lo_nm = sp.center_nm - 1.0;
            sp.hi_nm = sp.center_nm + 1.0;
            sp.amplitude = 0.5;
            sp.offset = 0.2;
            sp.lamp = io::LampShape{sp.center_nm + 0.5, 3.0, 0.5};
            sp.count_scale = 1e4;
            const auto spectrum = io::synth_spectrum(io::SpectrumKind::fano, sp, {io::NoiseKind::poisson, 0.0},
                                                     io::derive_seed(s.rng_seed, 1000 + d));
            std::ostringstream out;
            io::write_spectrum_csv(out, spectrum);
            write_file_atomic(dir / ("spectrum_" + label + ".csv"), out.str());
            truth[sec + ".quality_factor"] = io::format_double(*g.quality_factor);
        }
    }
    std::string manifest = "# synthetic dataset ground truth\n" + to_ini(truth);
    manifest += "\n# resolved configuration\n" + cfg.resolved_ini();
    write_file_atomic(dir / "ground_truth.ini", manifest);
    write_file_atomic(dir / "solve_br.ini", to_ini(solve_cfg));
    ctx.out << fmt::format("wrote {} devices to {}\n", s.geometries.size(), dir.string());
    return kExitSuccess;
}

int cmd_survey(CommandContext &ctx)
{
    const Config &cfg = ctx.config;
    const fs::path input = require_file(cfg, "survey.input", "--input");
    const auto rows = read_survey_csv(input);
    const SurveyStats stats = survey_statistics(rows);
    const double wl_bin = cfg.get_double("survey.wavelength_bin_nm", 2.0);
    const double q_bin = cfg.get_double("survey.q_bin", 500.0);

    std::string body = fmt::format("# survey\ninput: {}\ndevices: {}\n", input.string(), rows.size());
    body += survey_stats_line("resonance_wavelength_nm", stats.overall.wavelength);
    body += survey_stats_line("quality_factor", stats.overall.quality);
    std::string csv = "group,lattice_constant_nm,n_devices,quantity,n,mean,std,note\n";
    auto add_rows = [&](const std::string &group, const std::string &a, const SurveyGroup &g) {
        for (const auto &[name, st] : {std::pair{"resonance_wavelength_nm", g.wavelength},
                                       std::pair{"quality_factor", g.quality}})
        {
            csv += fmt::format("{},{},{},{},{},{},{},{}\n", group, a, g.n_devices, name, st.n, opt_csv(st.mean),
                               opt_csv(st.stddev), st.mean ? "" : "no resonances found");
        }
    };
    add_rows("overall", "", stats.overall);
    body += "\nby lattice constant:\n";
    for (const auto &[a, g] : stats.by_lattice_constant)
    {
        add_rows("lattice", io::format_double(a), g);
        body += fmt::format("  a = {:g} nm ({} devices)\n    ", a, g.n_devices);
        body += survey_stats_line("resonance_wavelength_nm", g.wavelength) + "    ";
        body += survey_stats_line("quality_factor", g.quality);
    }
    ctx.out << survey_stats_line("resonance_wavelength_nm", stats.overall.wavelength)
            << survey_stats_line("quality_factor", stats.overall.quality);

    std::vector<double> wl;
    std::vector<double> q;
    for (const auto &r : rows)
    {
        if (r.resonance_wavelength_nm)
        {
            wl.push_back(*r.resonance_wavelength_nm);
        }
        if (r.quality_factor)
        {
            q.push_back(*r.quality_factor);
        }
    }
    std::string hist_csv = "quantity,bin_lo,bin_hi,count\n";
    for (const auto &[name, values, width, label] :
         {std::tuple{std::string("resonance_wavelength_nm"), wl, wl_bin, std::string("resonance wavelength (nm)")},
          std::tuple{std::string("quality_factor"), q, q_bin, std::string("quality factor")}})
    {
        const Histogram h = histogram(values, width);
        Series bars{name, h.left_edges, {}, SeriesStyle::bars, kDataColor};
        for (std::size_t i = 0; i < h.counts.size(); ++i)
        {
            bars.y.push_back(static_cast<double>(h.counts[i]));
            hist_csv += fmt::format("{},{},{},{}\n", name, io::format_double(h.left_edges[i]),
                                    io::format_double(h.left_edges[i] + width), h.counts[i]);
        }
        write_file_atomic(out_dir(cfg) / ("survey_" + name + "_histogram.svg"),
                          render_svg(Plot{"device survey", label, "devices", {bars}, {}, {}}));
    }
    write_file_atomic(out_dir(cfg) / "survey_stats.csv", csv);
    write_file_atomic(out_dir(cfg) / "survey_histogram.csv", hist_csv);
    write_report(cfg, "survey_report.txt", body);
    return kExitSuccess;
}

int run_guarded(CommandContext &ctx, int (*command)(CommandContext &))
{
    try
    {
        return command(ctx);
    }
    catch (const InputError &e)
    {
        ctx.err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const ParseError &e)
    {
        ctx.err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const NoIntersectionError &e)
    {
        ctx.err << "analysis failed: " << e.what() << '\n';
        return kExitAnalysisFailure;
    }
    catch (const std::exception &e)
    {
        ctx.err << "analysis failed: " << e.what() << '\n';
        return kExitAnalysisFailure;
    }
}

} // namespace purcell::report
