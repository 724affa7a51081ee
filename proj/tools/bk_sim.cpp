// Command-line front end: single runs, alpha sweeps, magnitude statistics
// of existing catalogs and the block-doubling scaling suite.

#include "bk/io.hpp"
#include "bk/scaling.hpp"
#include "bk/simulation.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <iostream>
#include <optional>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 1,
    exit_config = 2,
    exit_invalid = 3,
    exit_io = 4,
    exit_runtime = 5,
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> t_end;
    std::optional<double> step;
    std::optional<int> workers;
    std::string out{"."};
};

void add_overrides(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--seed", o.seed, "RNG seed for the initial perturbation");
    cmd->add_option("--t-end", o.t_end, "Observation horizon");
    cmd->add_option("--step", o.step, "Fixed step size (default 0.001)");
    cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
}

bk::RunConfig configure(const std::string& path, const Overrides& o)
{
    bk::RunConfig cfg = path.empty() ? bk::RunConfig{} : bk::load_config(path);
    if (o.seed)
        cfg.integrator.seed = *o.seed;
    if (o.t_end)
        cfg.integrator.t_end = *o.t_end;
    if (o.step)
        cfg.integrator.step_size = *o.step;
    return cfg;
}

fs::path prepare_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw bk::IoError("cannot create output directory '" + dir.string() + "'");
    return dir;
}

std::string alpha_label(double alpha)
{
    std::string s = bk::format_double(alpha);
    std::replace(s.begin(), s.end(), '.', 'p');
    return "alpha_" + s;
}

struct Summary {
    std::size_t events{0};
    double min_m{0};
    double max_m{0};
    double wall{0};
    std::optional<bk::GrFit> fit;
};

std::optional<bk::GrFit> write_statistics(const bk::EventCatalog& catalog,
                                          const fs::path& dir,
                                          const std::string& stem,
                                          double dm,
                                          bk::FitWindow window,
                                          bk::LogBase base,
                                          const std::string& comment,
                                          std::ostream& log)
{
    const auto p_dist = bk::build_distribution(catalog, dm, base);
    const auto r_dist = bk::build_distribution(catalog, dm, bk::LogBase::natural);
    bk::write_cumulative_csv(dir / (stem + "_cumulative.csv"), p_dist, comment);
    bk::write_rate_csv(dir / (stem + "_rate.csv"), r_dist, comment);
    try {
        const auto fit = bk::fit_gr_slope(p_dist, window);
        bk::write_json(dir / (stem + "_fit.json"), bk::fit_to_json(fit));
        return fit;
    } catch (const std::invalid_argument& e) {
        bk::write_json(dir / (stem + "_fit.json"), json{{"error", e.what()}});
        log << "warning: " << stem << ": " << e.what() << '\n';
        return std::nullopt;
    }
}

Summary run_one(const bk::RunConfig& cfg, const fs::path& dir, std::ostream& log)
{
    for (const auto& w : bk::validate(cfg))
        log << "warning: " << w << '\n';
    prepare_dir(dir);
    const std::string comment = bk::provenance_comment(cfg);

    std::optional<bk::TrajectoryWriter> trajectory;
    std::vector<bk::StepObserver<double>*> extra;
    if (cfg.outputs.trajectory) {
        trajectory.emplace(dir / "trajectory.csv", comment, cfg.model.n_blocks, cfg.outputs.trajectory_stride);
        extra.push_back(&*trajectory);
    }

    const auto result = bk::simulate(cfg.model, cfg.integrator, 0, extra);
    if (trajectory)
        trajectory->close();

    const auto& catalog = result.catalog;
    if (cfg.outputs.catalog) {
        bk::write_catalog_csv(dir / "catalog.csv", catalog, comment);
        bk::write_catalog_json(dir / "catalog.json", catalog, bk::to_json(cfg), cfg.outputs.per_block_slip);
    }

    Summary s;
    s.events = catalog.total_events();
    s.wall = result.wall_seconds;
    if (!catalog.empty()) {
        const auto [lo, hi] = std::minmax_element(catalog.events.begin(), catalog.events.end(), [](const auto& a, const auto& b) {
            return a.magnitude_log10 < b.magnitude_log10;
        });
        s.min_m = lo->magnitude_log10;
        s.max_m = hi->magnitude_log10;
        if (cfg.outputs.distributions)
            s.fit = write_statistics(catalog, dir, "gr", cfg.outputs.bin_width, cfg.outputs.fit_window, bk::LogBase::ten,
                                     comment, log);
    }

    json summary = {{"events", s.events},
                    {"discarded_open", catalog.discarded_open},
                    {"discarded_empty", catalog.discarded_empty},
                    {"min_M", s.min_m},
                    {"max_M", s.max_m},
                    {"wall_seconds", s.wall},
                    {"center_of_mass_displacement", result.center_of_mass_displacement()},
                    {"config", bk::to_json(cfg)}};
    if (s.fit)
        summary["fit"] = bk::fit_to_json(*s.fit);
    bk::write_json(dir / "summary.json", summary);
    return s;
}

void print_summary(std::ostream& os, const std::string& label, const Summary& s)
{
    os << label << "events=" << s.events;
    if (s.events > 0)
        os << " min_M=" << bk::format_double(s.min_m) << " max_M=" << bk::format_double(s.max_m);
    if (s.fit)
        os << " B=" << bk::format_double(s.fit->slope_B) << " b=" << bk::format_double(s.fit->b_value);
    os << " wall=" << s.wall << "s\n";
}

/// Runs `jobs` on up to `workers` threads, in index order per thread.
template <typename Job>
void run_parallel(std::size_t jobs, unsigned workers, Job&& job)
{
    std::vector<std::exception_ptr> errors(jobs);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < jobs; k = next++) {
            try {
                job(k);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(jobs)));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t)
            pool.emplace_back(work);
        work();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

int cmd_run(const std::string& config, const Overrides& o, const std::vector<double>& alpha)
{
    auto cfg = configure(config, o);
    if (!alpha.empty())
        cfg.model.friction.alpha = alpha.front();
    const auto s = run_one(cfg, o.out, std::cerr);
    print_summary(std::cout, "", s);
    return exit_ok;
}

int cmd_sweep(const std::string& config, const Overrides& o, const std::vector<double>& alpha)
{
    auto cfg = configure(config, o);
    const std::vector<double> values = alpha.empty() ? cfg.sweep_alpha : alpha;
    if (values.empty())
        throw bk::ValidationError("sweep needs alpha values (--alpha or sweep.alpha in the config)");
    cfg.sweep_alpha = values;
    bk::validate(cfg);

    const fs::path root = prepare_dir(o.out);
    std::vector<Summary> summaries(values.size());
    run_parallel(values.size(), static_cast<unsigned>(o.workers.value_or(1)), [&](std::size_t k) {
        auto job = cfg;
        job.sweep_alpha.clear();
        job.model.friction.alpha = values[k];
        std::ostringstream log;
        summaries[k] = run_one(job, root / alpha_label(values[k]), log);
        if (!log.str().empty())
            std::cerr << log.str();
    });

    bk::CsvWriter table(root / "sweep.csv", bk::provenance_comment(cfg), {"alpha", "events", "min_M", "max_M", "B", "b"});
    for (std::size_t k = 0; k < values.size(); ++k) {
        const auto& s = summaries[k];
        const double nan = std::numeric_limits<double>::quiet_NaN();
        table.row({values[k], static_cast<double>(s.events), s.min_m, s.max_m, s.fit ? s.fit->slope_B : nan,
                   s.fit ? s.fit->b_value : nan});
        print_summary(std::cout, "alpha=" + bk::format_double(values[k]) + " ", s);
    }
    table.close();
    return exit_ok;
}

int cmd_gr_stats(const std::vector<std::string>& catalogs,
                 double dm,
                 const std::vector<double>& window,
                 const std::string& base_name,
                 const std::string& out)
{
    const bk::FitWindow fw{window.at(0), window.at(1)};
    if (!(dm > 0.0) || !(fw.lo < fw.hi))
        throw bk::ValidationError("--dm must be positive and --window increasing");
    const auto base = base_name == "natural" ? bk::LogBase::natural : bk::LogBase::ten;
    const fs::path dir = prepare_dir(out);

    for (const auto& file : catalogs) {
        const fs::path path(file);
        auto catalog = bk::read_catalog(path);
        if (catalog.empty())
            throw bk::ValidationError("catalog '" + file + "' contains no events");
        std::string comment = "# " + std::string(bk::tool_name) + ' ' + bk::tool_version + " source=" + path.filename().string();
        if (path.extension() == ".csv") {
            const auto meta = bk::read_csv(path).metadata();
            if (auto it = meta.find("alpha"); it != meta.end())
                comment += " alpha=" + it->second;
        }
        const auto fit = write_statistics(catalog, dir, path.stem().string(), dm, fw, base, comment, std::cerr);
        Summary s;
        s.events = catalog.total_events();
        s.fit = fit;
        std::cout << path.stem().string() << ": events=" << s.events;
        if (fit)
            std::cout << " B=" << bk::format_double(fit->slope_B) << " b=" << bk::format_double(fit->b_value);
        std::cout << '\n';
    }
    return exit_ok;
}

int cmd_scaling(const std::string& config, const Overrides& o, int n_max, double dm, const std::vector<double>& alpha)
{
    auto cfg = configure(config, o);
    if (config.empty())
        cfg.model = bk::ModelParams<double>::chain(32, 2.0);
    if (!alpha.empty())
        cfg.model.friction.alpha = alpha.front();
    for (const auto& w : bk::validate(cfg))
        std::cerr << "warning: " << w << '\n';
    if (n_max < 1)
        throw bk::ValidationError("--n-max must be at least 1");

    const fs::path dir = prepare_dir(o.out);
    const auto report =
        bk::run_scaling_suite(cfg.model, n_max, cfg.integrator, dm, static_cast<unsigned>(o.workers.value_or(1)));

    const std::string comment = bk::provenance_comment(cfg);
    bk::write_scaling_levels_csv(dir / "levels.csv", report, comment);
    bk::write_distance_csv(dir / "distances.csv", report.distances, comment);
    for (std::size_t k = 0; k < report.levels.size(); ++k) {
        bk::RunConfig level_cfg = cfg;
        level_cfg.model = report.levels[k].params;
        level_cfg.integrator.seed = bk::derive_seed(cfg.integrator.seed, k);
        const std::string level_comment = bk::provenance_comment(level_cfg) + " level=" + std::to_string(k);
        const std::string stem = "level_" + std::to_string(k);
        bk::write_catalog_csv(dir / (stem + "_catalog.csv"), report.catalogs[k], level_comment);
        bk::write_rate_csv(dir / (stem + "_rate.csv"), report.distributions[k], level_comment);
        std::cout << "level " << k << " N=" << report.levels[k].n_blocks()
                  << " events=" << report.catalogs[k].total_events() << '\n';
    }
    for (const auto& r : report.distances)
        std::cout << "f" << r.from << "-f" << r.to << " euclidean=" << bk::format_double(r.euclidean)
                  << " max=" << bk::format_double(r.max) << '\n';
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spring-block earthquake simulator with a predictor-corrector integrator"};
    app.set_version_flag("--version", std::string(bk::tool_version));
    app.require_subcommand(1);

    std::string config;
    Overrides o;
    std::vector<double> alpha;
    int n_max = 5;
    double dm = 0.2;
    std::vector<double> window{-3.7, 1.7};
    std::string log_base = "ten";
    std::vector<std::string> catalogs;

    auto* run = app.add_subcommand("run", "Warm up, integrate and write the event catalog");
    run->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    run->add_option("--alpha", alpha, "Override the friction weakening rate")->expected(1);
    add_overrides(run, o);

    auto* sweep = app.add_subcommand("sweep", "Run one simulation per alpha value");
    sweep->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sweep->add_option("--alpha", alpha, "Alpha values, e.g. --alpha 1 1.5 2 3 4");
    sweep->add_option("--workers", o.workers, "Parallel jobs");
    add_overrides(sweep, o);

    auto* stats = app.add_subcommand("gr-stats", "Magnitude distributions and Gutenberg-Richter fit of catalogs");
    stats->add_option("catalogs", catalogs, "Catalog files (.csv or .json)")->required()->check(CLI::ExistingFile);
    stats->add_option("--dm", dm, "Bin width")->capture_default_str();
    stats->add_option("--window", window, "Fit window M_lo M_hi")->expected(2)->capture_default_str();
    stats->add_option("--log-base", log_base, "Magnitude for the cumulative curve and fit")
        ->check(CLI::IsMember({"ten", "natural"}))
        ->capture_default_str();
    stats->add_option("--out", o.out, "Output directory")->capture_default_str();

    auto* scaling = app.add_subcommand("scaling", "Block-doubling suite and distance table");
    scaling->add_option("--config", config, "Base configuration at the smallest N")->check(CLI::ExistingFile);
    scaling->add_option("--n-max", n_max, "Number of doublings")->capture_default_str();
    scaling->add_option("--dm", dm, "Bin width for M1")->capture_default_str();
    scaling->add_option("--alpha", alpha, "Override the friction weakening rate")->expected(1);
    scaling->add_option("--workers", o.workers, "Parallel levels");
    add_overrides(scaling, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*run)
            return cmd_run(config, o, alpha);
        if (*sweep)
            return cmd_sweep(config, o, alpha);
        if (*stats)
            return cmd_gr_stats(catalogs, dm, window, log_base, o.out);
        if (*scaling)
            return cmd_scaling(config, o, n_max, dm, alpha);
    } catch (const bk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const bk::ValidationError& e) {
        std::cerr << "invalid parameters: " << e.what() << '\n';
        return exit_invalid;
    } catch (const bk::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return exit_io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_usage;
}
