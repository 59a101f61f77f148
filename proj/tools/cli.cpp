#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <variant>

#include "qwalk/qwalk.hpp"

namespace qwalk::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- output helpers ----

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

std::string fmt_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string to_csv(const Table& t) {
    std::ostringstream os;
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) os << fmt_double(v);
                    else os << v;
                },
                row[i]);
        }
        os << '\n';
    }
    return os.str();
}

json to_json(const Table& t) {
    json arr = json::array();
    for (const auto& row : t.rows) {
        json obj = json::object();
        for (std::size_t i = 0; i < row.size(); ++i)
            std::visit([&](const auto& v) { obj[t.columns[i]] = v; }, row[i]);
        arr.push_back(std::move(obj));
    }
    return arr;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Collects the files of one command run and writes its manifest last.
class OutputSet {
public:
    OutputSet(std::string command, const std::string& dir, std::string format)
        : command_(std::move(command)), dir_(dir), format_(std::move(format)), started_(utc_now()) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw io_error("cannot create output directory " + dir_.string() + ": " + ec.message());
    }

    void table(const std::string& stem, const Table& t) {
        if (format_ == "json") write(stem + ".json", to_json(t).dump(2) + "\n");
        else write(stem + ".csv", to_csv(t));
    }
    void document(const std::string& stem, const json& j) { write(stem + ".json", j.dump(2) + "\n"); }

    void manifest(json config, std::uint64_t seed, std::size_t threads) {
        json m;
        m["command"] = command_;
        m["version"] = kVersion;
        m["config"] = std::move(config);
        m["seed"] = seed;
        m["rng_algorithm"] = kRngAlgorithm;
        m["threads"] = threads;
        m["started_utc"] = started_;
        m["finished_utc"] = utc_now();
        m["outputs"] = outputs_;
        write(command_ + "_manifest.json", m.dump(2) + "\n", false);
    }

private:
    void write(const std::string& name, const std::string& body, bool record = true) {
        const fs::path target = dir_ / name;
        const fs::path tmp = dir_ / (name + ".tmp");
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            if (!f) throw io_error("cannot open " + tmp.string());
            f << body;
            if (!f.flush()) throw io_error("write failed for " + tmp.string());
        }
        std::error_code ec;
        fs::rename(tmp, target, ec);
        if (ec) throw io_error("cannot rename " + tmp.string() + ": " + ec.message());
        if (record) outputs_.push_back(fs::absolute(target).string());
    }

    std::string command_;
    fs::path dir_;
    std::string format_;
    std::string started_;
    std::vector<std::string> outputs_;
};

// ---- shared options ----

struct CommonOpts {
    std::string out_dir = ".";
    std::string format = "csv";
};

struct WalkOpts {
    std::int64_t steps = 10;
    double theta = 22.5;
    double phi = 180.0;
    std::int64_t defect_site = 0;
    bool no_defect = false;
    std::string init = "antisym";
    std::vector<double> init_amps;
    std::int64_t initial_site = 0;
};

struct GridOpts {
    std::string values;
    std::string grid;
};

void add_common(CLI::App* app, CommonOpts& c) {
    app->add_option("--out-dir", c.out_dir, "Directory for output files")->capture_default_str();
    app->add_option("--format", c.format, "Tabular output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
}

void add_coin(CLI::App* app, WalkOpts& w) {
    app->add_option("--theta", w.theta, "Coin angle in degrees, [0, 45]")->capture_default_str();
}

void add_defect(CLI::App* app, WalkOpts& w, bool allow_off) {
    auto* phi = app->add_option("--phi", w.phi, "Defect phase in degrees")->capture_default_str();
    auto* site = app->add_option("--defect-site", w.defect_site, "Defect site")->capture_default_str();
    if (allow_off) app->add_flag("--no-defect", w.no_defect, "Run without a defect")->excludes(phi)->excludes(site);
}

void add_initial(CLI::App* app, WalkOpts& w) {
    auto* init = app->add_option("--init", w.init, "Named coin state")
                     ->check(CLI::IsMember({"antisym", "minus", "h", "v", "H", "V"}))
                     ->capture_default_str();
    app->add_option("--init-amps", w.init_amps, "Coin amplitudes re,im,re,im (normalized on input)")
        ->expected(4)
        ->delimiter(',')
        ->excludes(init);
    app->add_option("--initial-site", w.initial_site, "Starting site")->capture_default_str();
}

void add_walk(CLI::App* app, WalkOpts& w) {
    app->add_option("--steps", w.steps, "Number of steps")->capture_default_str();
    add_coin(app, w);
    add_defect(app, w, true);
    add_initial(app, w);
}

void add_grid(CLI::App* app, GridOpts& g) {
    auto* values = app->add_option("--values", g.values, "Comma-separated parameter values (degrees)");
    app->add_option("--grid", g.grid, "Inclusive range start:stop:step (degrees)")->excludes(values);
}

CoinState resolve_coin(const WalkOpts& w) {
    if (!w.init_amps.empty()) {
        if (w.init_amps.size() != 4) throw config_error("--init-amps needs four numbers");
        return CoinState::normalized({w.init_amps[0], w.init_amps[1]}, {w.init_amps[2], w.init_amps[3]});
    }
    return named_coin_state(w.init);
}

WalkConfig resolve_walk(const WalkOpts& w) {
    WalkConfig cfg;
    cfg.steps = w.steps;
    cfg.coin = CoinAngle::degrees(w.theta);
    if (!w.no_defect) cfg.defect = DefectSpec(w.defect_site, w.phi);
    cfg.initial_site = w.initial_site;
    cfg.initial_coin = resolve_coin(w);
    cfg.validate();
    return cfg;
}

std::vector<double> resolve_grid(const GridOpts& g) {
    if (g.values.empty() && g.grid.empty()) throw config_error("give --values or --grid");
    const auto vals = parse_grid(g.grid.empty() ? g.values : g.grid);
    if (vals.empty()) throw config_error("empty parameter grid");
    return vals;
}

json angle_json(double deg) { return json{{"deg", deg}, {"rad", deg_to_rad(deg)}}; }

json coin_state_json(const CoinState& c) {
    return json{{"amp_h", {c.amp_h().real(), c.amp_h().imag()}}, {"amp_v", {c.amp_v().real(), c.amp_v().imag()}}};
}

json walk_json(const WalkConfig& cfg, const WalkOpts& w) {
    json j;
    j["steps"] = cfg.steps;
    j["theta"] = angle_json(cfg.coin.deg());
    if (cfg.defect) j["defect"] = json{{"site", cfg.defect->site()}, {"phi", angle_json(cfg.defect->phase_deg())}};
    else j["defect"] = nullptr;
    j["initial_site"] = cfg.initial_site;
    j["initial_coin"] = coin_state_json(cfg.initial_coin);
    j["initial_coin_name"] = w.init_amps.empty() ? json(w.init) : json("custom");
    j["recurrence_site"] = cfg.recurrence_site();
    return j;
}

void warn_coin(const CoinAngle& a, std::ostream& err) {
    if (a.degenerate())
        err << "warning: coin angle " << a.deg() << " deg is degenerate; the walk is deterministic transport\n";
}

// ---- commands ----

void cmd_walk(const CommonOpts& c, const WalkOpts& w, std::ostream& err) {
    const WalkConfig cfg = resolve_walk(w);
    warn_coin(cfg.coin, err);
    const auto rec = evolve(cfg);

    Table dist{{"step", "x", "p"}, {}};
    for (std::size_t s = 0; s < rec.distributions.size(); ++s) {
        const auto& d = rec.distributions[s];
        for (std::int64_t x = d.first_site(); x <= d.last_site(); ++x)
            dist.rows.push_back({static_cast<std::int64_t>(s), x, d.at(x)});
    }

    json summary;
    summary["steps"] = cfg.steps;
    summary["recurrence_site"] = rec.recurrence_site;
    summary["final_variance"] = rec.final_variance();
    summary["final_recurrence"] = rec.final_recurrence();
    summary["random_walk_variance"] = static_cast<double>(cfg.steps);
    summary["variance"] = rec.variances;
    summary["recurrence"] = rec.recurrences;

    OutputSet out("walk", c.out_dir, c.format);
    out.table("walk_distribution", dist);
    out.document("walk_summary", summary);
    out.manifest(json{{"walk", walk_json(cfg, w)}, {"format", c.format}}, 0, 1);
}

void cmd_sweep(const CommonOpts& c, const WalkOpts& w, const GridOpts& g, const std::string& param,
               std::ostream& err) {
    const WalkConfig base = resolve_walk(w);
    const auto grid = resolve_grid(g);
    const std::size_t threads = detail::env_threads();
    std::vector<SweepRow> rows;
    if (param == "phi") {
        if (!base.defect) throw config_error("a phase sweep needs a defect; drop --no-defect");
        rows = sweep_phase(base, grid, threads);
    } else {
        for (double a : grid) warn_coin(CoinAngle::degrees(a), err);
        rows = sweep_coin(base, grid, threads);
    }

    Table t{{"parameter", "variance", "recurrence"}, {}};
    for (const auto& r : rows) t.rows.push_back({r.param_deg, r.variance, r.recurrence});

    OutputSet out("sweep", c.out_dir, c.format);
    out.table("sweep_table", t);
    json cfg{{"walk", walk_json(base, w)}, {"param", param}, {"grid_deg", grid}, {"format", c.format}};
    out.manifest(std::move(cfg), 0, threads);
}

struct SpectrumOpts {
    std::int64_t sites = LatticeSpec::kDefaultSites;
    std::int64_t radius = 10;
    double threshold = 0.99;
    std::string sweep;
};

void cmd_spectrum(const CommonOpts& c, const WalkOpts& w, const SpectrumOpts& s, const GridOpts& g,
                  std::ostream& err) {
    LatticeSpec spec;
    spec.num_sites = s.sites;
    spec.coin = CoinAngle::degrees(w.theta);
    spec.defect = DefectSpec(w.defect_site, w.phi);
    spec.validate();
    if (s.radius < 0) throw config_error("--radius must be nonnegative");
    if (!(s.threshold > 0.0 && s.threshold <= 1.0)) throw config_error("--threshold must lie in (0, 1]");
    warn_coin(spec.coin, err);
    const ClassifyOptions opts{s.radius, s.threshold};
    const PureState initial = make_initial(w.initial_site, resolve_coin(w));

    json cfg;
    cfg["L"] = spec.num_sites;
    cfg["theta"] = angle_json(spec.coin.deg());
    cfg["defect"] = json{{"site", spec.defect.site()}, {"phi", angle_json(spec.defect.phase_deg())}};
    cfg["initial_site"] = w.initial_site;
    cfg["initial_coin"] = coin_state_json(resolve_coin(w));
    cfg["initial_coin_name"] = w.init_amps.empty() ? json(w.init) : json("custom");
    cfg["radius"] = s.radius;
    cfg["threshold"] = s.threshold;
    cfg["format"] = c.format;

    OutputSet out("spectrum", c.out_dir, c.format);
    if (!s.sweep.empty()) {
        const auto grid = resolve_grid(g);
        const std::size_t threads = detail::env_threads();
        const auto rows = s.sweep == "phi" ? sweep_overlap_phase(spec, grid, initial, opts, threads)
                                           : sweep_overlap_coin(spec, grid, initial, opts, threads);
        Table t{{"parameter", "overlap", "localized_count", "near_threshold"}, {}};
        for (const auto& r : rows)
            t.rows.push_back({r.param_deg, r.overlap, static_cast<std::int64_t>(r.localized_count),
                              static_cast<std::int64_t>(r.near_threshold)});
        out.table("spectrum_overlap", t);
        cfg["sweep"] = s.sweep;
        cfg["grid_deg"] = grid;
        out.manifest(std::move(cfg), 0, threads);
        return;
    }

    const auto rep = analyze(spec, initial, opts);
    if (rep.near_threshold) err << "warning: an eigenvector mass lies near the localization threshold\n";
    if (rep.degenerate_localized) err << "warning: localized eigenvalues are degenerate\n";

    Table t{{"index", "re", "im", "arg_deg", "near_defect_mass", "ipr", "localized"}, {}};
    json localized = json::array();
    for (Eigen::Index k = 0; k < rep.eigenvalues.size(); ++k) {
        const cplx ev = rep.eigenvalues(k);
        const double arg = std::arg(ev) * 180.0 / std::numbers::pi;
        const auto i = static_cast<std::size_t>(k);
        t.rows.push_back({static_cast<std::int64_t>(k), ev.real(), ev.imag(), arg, rep.near_defect_mass[i],
                          rep.ipr[i], static_cast<std::int64_t>(rep.localized_flags[i])});
        if (rep.localized_flags[i])
            localized.push_back(json{{"index", k}, {"re", ev.real()}, {"im", ev.imag()}, {"arg_deg", arg},
                                     {"near_defect_mass", rep.near_defect_mass[i]}});
    }
    json summary;
    summary["localized_count"] = rep.localized_count;
    summary["overlap"] = rep.overlap;
    summary["max_residual"] = rep.max_residual;
    summary["degenerate_localized"] = rep.degenerate_localized;
    summary["near_threshold"] = rep.near_threshold;
    summary["boundary_phase"] = rep.boundary_phase;
    summary["localized"] = std::move(localized);

    out.table("spectrum_eigenvalues", t);
    out.document("spectrum_summary", summary);
    out.manifest(std::move(cfg), 0, 1);
}

struct EmulateOpts {
    std::int64_t counts = 18000;
    std::int64_t reps = 1000;
    double visibility = 0.998;
    std::uint64_t seed = 0;
};

void cmd_emulate(const CommonOpts& c, const WalkOpts& w, const EmulateOpts& e, std::ostream& err) {
    EmulationConfig cfg;
    cfg.walk = resolve_walk(w);
    cfg.counts_per_step = e.counts;
    cfg.mc_reps = e.reps;
    cfg.visibility = e.visibility;
    cfg.rng_seed = e.seed;
    cfg.validate();
    warn_coin(cfg.walk.coin, err);
    const std::size_t threads = detail::env_threads();
    const CountTable table = estimate_with_errors(cfg, threads);

    Table counts{{"step", "x", "count", "p_exact", "p_mean", "p_std"}, {}};
    Table summary{{"step", "variance_exact", "variance_mean", "variance_std", "recurrence_exact", "recurrence_mean",
                   "recurrence_std", "tv_mean", "tv_std", "tv_p95"},
                  {}};
    for (std::size_t s = 0; s < table.steps.size(); ++s) {
        const auto& st = table.steps[s];
        const auto step = static_cast<std::int64_t>(s);
        for (std::size_t i = 0; i < st.counts.size(); ++i)
            counts.rows.push_back({step, st.offset + static_cast<std::int64_t>(i), st.counts[i], st.p_exact[i],
                                   st.p_mean[i], st.p_std[i]});
        summary.rows.push_back({step, st.variance_exact, st.variance_mean, st.variance_std, st.recurrence_exact,
                                st.recurrence_mean, st.recurrence_std, st.tv_mean, st.tv_std, st.tv_p95});
    }

    OutputSet out("emulate", c.out_dir, c.format);
    out.table("emulate_counts", counts);
    out.table("emulate_summary", summary);
    json j;
    j["walk"] = walk_json(cfg.walk, w);
    j["counts_per_step"] = cfg.counts_per_step;
    j["mc_reps"] = cfg.mc_reps;
    j["visibility"] = cfg.visibility;
    j["std_available"] = table.std_available;
    j["format"] = c.format;
    out.manifest(std::move(j), cfg.rng_seed, threads);
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
    auto number = [](std::string tok) {
        const auto b = tok.find_first_not_of(" \t");
        const auto e = tok.find_last_not_of(" \t");
        if (b == std::string::npos) throw config_error("empty value in grid");
        tok = tok.substr(b, e - b + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw config_error("bad grid value '" + tok + "'");
        }
        if (used != tok.size() || !std::isfinite(v)) throw config_error("bad grid value '" + tok + "'");
        return v;
    };

    std::vector<double> out;
    if (spec.find_first_not_of(" \t") == std::string::npos) return out;
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw config_error("grid must be start:stop:step");
        const double a = number(parts[0]), b = number(parts[1]), h = number(parts[2]);
        if (!(h > 0.0)) throw config_error("grid step must be positive");
        // index-based so the endpoint survives rounding
        const double n = std::floor((b - a) / h + 1e-9);
        for (std::int64_t i = 0; i <= static_cast<std::int64_t>(n); ++i) out.push_back(a + static_cast<double>(i) * h);
        return out;
    }
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Coined quantum walks with a phase defect"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    CommonOpts common;
    WalkOpts walk;
    GridOpts grid;
    std::string sweep_param;
    SpectrumOpts spectrum;
    EmulateOpts emulate;

    auto* walk_cmd = app.add_subcommand("walk", "Per-step position distributions, variance and recurrence");
    add_common(walk_cmd, common);
    add_walk(walk_cmd, walk);

    auto* sweep_cmd = app.add_subcommand("sweep", "Final variance and recurrence over a phase or coin grid");
    add_common(sweep_cmd, common);
    add_walk(sweep_cmd, walk);
    add_grid(sweep_cmd, grid);
    sweep_cmd->add_option("--param", sweep_param, "Swept parameter")
        ->required()
        ->check(CLI::IsMember({"phi", "theta"}));

    auto* spec_cmd = app.add_subcommand("spectrum", "Eigenvalues, localized eigenstates and overlap on a ring");
    add_common(spec_cmd, common);
    add_coin(spec_cmd, walk);
    add_defect(spec_cmd, walk, false);
    add_initial(spec_cmd, walk);
    spec_cmd->add_option("--L", spectrum.sites, "Odd number of lattice sites")->capture_default_str();
    spec_cmd->add_option("--radius", spectrum.radius, "Localization radius around the defect")->capture_default_str();
    spec_cmd->add_option("--threshold", spectrum.threshold, "Mass within the radius to count as localized")
        ->capture_default_str();
    spec_cmd->add_option("--sweep", spectrum.sweep, "Overlap sweep over a parameter instead of one spectrum")
        ->check(CLI::IsMember({"phi", "theta"}));
    add_grid(spec_cmd, grid);

    auto* emu_cmd = app.add_subcommand("emulate", "Multinomial count emulation with Monte Carlo errors");
    add_common(emu_cmd, common);
    add_walk(emu_cmd, walk);
    emu_cmd->add_option("--counts", emulate.counts, "Counts per step")->capture_default_str();
    emu_cmd->add_option("--mc-reps", emulate.reps, "Monte Carlo repetitions")->capture_default_str();
    emu_cmd->add_option("--visibility", emulate.visibility, "Per-step coin coherence in [0, 1]")
        ->capture_default_str();
    emu_cmd->add_option("--seed", emulate.seed, "RNG seed")->capture_default_str();

    std::vector<std::string> argv_store{"qwalk"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (walk_cmd->parsed()) cmd_walk(common, walk, err);
        else if (sweep_cmd->parsed()) cmd_sweep(common, walk, grid, sweep_param, err);
        else if (spec_cmd->parsed()) cmd_spectrum(common, walk, spectrum, grid, err);
        else if (emu_cmd->parsed()) cmd_emulate(common, walk, emulate, err);
    } catch (const config_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const numerical_error& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const io_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitOk;
}

}  // namespace qwalk::cli
