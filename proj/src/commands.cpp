#include "gtraj/commands.hpp"

#include "gtraj/gta.hpp"
#include "gtraj/lindblad.hpp"
#include "gtraj/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

namespace gtraj {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void make_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw OutputError("cannot create output directory '" + dir.string() + "'" + (ec ? ": " + ec.message() : ""));
    }
    const fs::path probe = dir / ".write_probe";
    {
        std::ofstream out(probe);
        if (!out) throw OutputError("output directory '" + dir.string() + "' is not writable");
    }
    fs::remove(probe, ec);
}

void write_json(const fs::path& path, const json& doc)
{
    try {
        write_json_file(path, doc);
    } catch (const std::runtime_error& e) {
        throw OutputError(e.what());
    }
}

std::string format_fixed(double x, int digits)
{
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(digits) << x;
    return ss.str();
}

RunOutput run_exact(const RunConfig& cfg, const fs::path& dir, std::ostream& log)
{
    const Lattice lattice = cfg.lattice();
    SteadyStateOptions opts;
    opts.tol_ss = cfg.exact.tol_ss;
    opts.t_max = cfg.exact.t_max;
    opts.method = cfg.exact.solver;
    const auto t0 = std::chrono::steady_clock::now();
    const ConvergedSteadyState res = converged_steady_state(cfg.model, lattice, cfg.exact.n_max, cfg.exact.n_max_step,
                                                            cfg.exact.rel_tol, cfg.exact.max_dim, opts);
    if (res.state.truncation_warning) {
        log << "warning: population of the top Fock level is " << res.state.top_population << " at n_max "
            << res.n_max << "\n";
    }
    RunOutput out{dir, exact_summary_document(res, lattice, cfg, make_metadata(1, seconds_since(t0)))};
    write_json(dir / "summary.json", out.summary);
    log << "exact steady state: n_max " << res.n_max << ", n_0 " << res.observables.n(0) << "\n";
    return out;
}

} // namespace

RunOutput run_command(const RunConfig& cfg, std::ostream& log, const std::atomic<bool>* cancel)
{
    const fs::path dir = cfg.output.dir;
    make_dir(dir);
    write_json(dir / "config.json", to_json(cfg));
    if (cfg.method == Method::exact) return run_exact(cfg, dir, log);

    EnsembleSpec spec = cfg.ensemble_spec();
    spec.cancel = cancel;
    if (cfg.output.trajectory_csv) {
        const fs::path tdir = dir / "trajectories";
        make_dir(tdir);
        spec.on_record = [tdir](const TrajectoryRecord& rec) {
            char name[32];
            std::snprintf(name, sizeof(name), "traj_%05zu.csv", rec.index);
            std::ofstream out(tdir / name);
            if (!out) throw OutputError("cannot write trajectory file in '" + tdir.string() + "'");
            write_trajectory_csv(out, rec);
        };
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
        EnsembleResult res = ensemble_run(spec);
        RunOutput out{dir, summary_document(res.summary, cfg, make_metadata(cfg.ensemble.workers, seconds_since(t0)))};
        write_json(dir / "summary.json", out.summary);
        log << to_string(cfg.method) << " L=" << cfg.size << " G=" << cfg.model.g_target << ": "
            << res.summary.n_valid << "/" << res.summary.n_traj << " trajectories, U_L=" << res.summary.binder.value
            << " +- " << res.summary.binder.std_error << " (" << format_fixed(seconds_since(t0), 1) << " s)\n";
        return out;
    } catch (const DivergenceError& e) {
        json doc = summary_document(e.partial().summary, cfg, make_metadata(cfg.ensemble.workers, seconds_since(t0)));
        doc["status"] = "divergence-failure";
        write_json(dir / "summary_diverged.json", doc);
        throw;
    }
}

std::string sweep_point_dir(double g, std::size_t size)
{
    return "L" + std::to_string(size) + "/G" + format_fixed(g, 4);
}

std::vector<RunOutput> sweep_command(const RunConfig& cfg, std::ostream& log, const std::atomic<bool>* cancel)
{
    const fs::path base = cfg.output.dir;
    make_dir(base);
    const std::vector<std::size_t> sizes = cfg.sweep.sizes.empty() ? std::vector<std::size_t>{cfg.size} : cfg.sweep.sizes;

    json index;
    index["schema_version"] = summary_schema_version;
    index["kind"] = "sweep-index";
    index["config"] = to_json(cfg, true);
    index["points"] = json::array();

    std::vector<RunOutput> outputs;
    for (std::size_t l : sizes) {
        for (double g : cfg.sweep.g_values) {
            RunConfig point = cfg.at_point(g, l);
            point.output.dir = (base / sweep_point_dir(g, l)).string();
            outputs.push_back(run_command(point, log, cancel));
            index["points"].push_back({{"size", l}, {"g", g}, {"dir", sweep_point_dir(g, l)}});
        }
    }
    write_json(base / "sweep.json", index);
    return outputs;
}

std::vector<CumulantCurve> build_curves(const std::vector<SummaryRecord>& records, const std::string& observable)
{
    std::map<std::size_t, std::vector<CurvePoint>> by_size;
    for (const auto& r : records) {
        std::optional<CurvePoint> p;
        if (observable == "binder" || observable == "binder_final") {
            const auto& b = observable == "binder" ? r.binder : r.binder_final;
            if (b && b->defined) p = CurvePoint{r.g, b->value, b->std_error};
        } else if (observable == "parity") {
            if (r.parity) p = CurvePoint{r.g, r.parity->value, r.parity->std_error};
        } else if (observable == "k0") {
            if (r.k0_normalized) p = CurvePoint{r.g, r.k0_normalized->value, r.k0_normalized->std_error};
        } else {
            throw AnalysisInputError("unknown observable '" + observable + "' (expected binder, binder_final, parity or k0)");
        }
        if (!p) throw AnalysisInputError(r.source + ": no '" + observable + "' value in summary");
        by_size[r.lattice_size].push_back(*p);
    }
    std::vector<CumulantCurve> curves;
    for (auto& [size, pts] : by_size) {
        std::sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.g < b.g; });
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (pts[i].g == pts[i - 1].g) {
                throw AnalysisInputError("two summaries for L=" + std::to_string(size) + " at G=" + std::to_string(pts[i].g));
            }
        }
        curves.push_back(CumulantCurve{static_cast<double>(size), std::move(pts)});
    }
    return curves;
}

json analyze_command(const AnalyzeOptions& opts, std::ostream& log)
{
    if (opts.inputs.empty()) throw AnalysisInputError("no analysis inputs given");
    std::vector<SummaryRecord> records;
    for (const auto& in : opts.inputs) {
        for (const auto& path : find_summaries(in)) records.push_back(read_summary(read_json_file(path), path.string()));
    }
    if (records.empty()) throw AnalysisInputError("no summary.json found in the given inputs");
    for (const auto& r : records) {
        if (r.method != records.front().method) {
            throw AnalysisInputError("inputs mix methods '" + records.front().method + "' and '" + r.method + "'");
        }
    }

    const std::vector<CumulantCurve> curves = build_curves(records, opts.observable);
    for (const auto& c : curves) {
        try {
            c.validate();
        } catch (const std::invalid_argument& e) {
            throw AnalysisInputError(e.what());
        }
    }

    json doc;
    doc["schema_version"] = summary_schema_version;
    doc["kind"] = "analysis";
    doc["method"] = records.front().method;
    doc["observable"] = opts.observable;
    doc["inputs"] = json::array();
    for (const auto& r : records) doc["inputs"].push_back(r.source);
    doc["curves"] = json::array();
    for (const auto& c : curves) {
        json jc{{"size", c.size}, {"points", json::array()}};
        for (const auto& p : c.points) jc["points"].push_back({{"g", p.g}, {"value", p.value}, {"std_error", p.std_error}});
        doc["curves"].push_back(jc);
    }
    doc["warnings"] = json::array();

    std::optional<double> g_c = opts.g_c;
    doc["crossing"] = nullptr;
    if (curves.size() >= 2) {
        try {
            const CrossingResult cr = find_crossing(curves, opts.n_bootstrap, opts.seed);
            json jc{{"g_c", cr.g_c}, {"uncertainty", cr.uncertainty}, {"spread", cr.spread},
                    {"bootstrap_stderr", cr.bootstrap_stderr}, {"pairs", json::array()}};
            for (const auto& p : cr.pairs) {
                jc["pairs"].push_back({{"size_a", p.size_a}, {"size_b", p.size_b},
                                       {"g", p.g ? json(*p.g) : json(nullptr)}, {"sign_changes", p.sign_changes}});
            }
            for (const auto& w : cr.warnings) doc["warnings"].push_back(w);
            doc["crossing"] = jc;
            if (!g_c) g_c = cr.g_c;
            log << "crossing: G_c = " << cr.g_c << " +- " << cr.uncertainty << "\n";
        } catch (const std::runtime_error& e) {
            doc["warnings"].push_back(std::string("crossing: ") + e.what());
            log << "warning: " << e.what() << "\n";
        }
    } else {
        doc["warnings"].push_back("fewer than two lattice sizes: no crossing");
    }

    const fs::path out_dir = opts.out_dir;
    make_dir(out_dir);

    doc["collapse"] = json::array();
    std::ofstream collapse_csv(out_dir / "collapse.csv");
    collapse_csv << std::setprecision(17) << "nu,size,x,y\n";
    if (g_c && curves.size() >= 2) {
        doc["g_c_used"] = *g_c;
        for (double nu : opts.nu_values) {
            ScalingSpec spec{*g_c, nu, opts.beta};
            json jr{{"nu", nu}, {"beta", opts.beta ? json(*opts.beta) : json(nullptr)}};
            try {
                jr["residual"] = collapse_residual(curves, spec, opts.grid_points);
                log << "collapse residual at nu=" << nu << ": " << jr["residual"].get<double>() << "\n";
            } catch (const std::exception& e) {
                jr["residual"] = nullptr;
                jr["error"] = e.what();
            }
            doc["collapse"].push_back(jr);
            for (const auto& c : curves) {
                for (const auto& p : rescale(c, spec).points) collapse_csv << nu << ',' << c.size << ',' << p.g << ',' << p.value << '\n';
            }
        }
    } else {
        doc["g_c_used"] = nullptr;
    }

    std::ofstream curves_csv(out_dir / "curves.csv");
    curves_csv << std::setprecision(17) << "size,g,value,std_error\n";
    for (const auto& c : curves) {
        for (const auto& p : c.points) curves_csv << c.size << ',' << p.g << ',' << p.value << ',' << p.std_error << '\n';
    }

    std::ofstream hist_csv(out_dir / "histograms.csv");
    hist_csv << std::setprecision(17) << "size,g,bin_center,count,density\n";
    doc["histograms"] = json::array();
    for (const auto& r : records) {
        if (!r.histogram) continue;
        const Histogram& h = *r.histogram;
        const double norm = static_cast<double>(h.total()) * h.bin_width();
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            hist_csv << r.lattice_size << ',' << r.g << ',' << h.center(i) << ',' << h.counts[i] << ','
                     << (norm > 0.0 ? static_cast<double>(h.counts[i]) / norm : 0.0) << '\n';
        }
        doc["histograms"].push_back({{"size", r.lattice_size}, {"g", r.g}, {"modes", r.modes}});
    }
    if (!collapse_csv || !curves_csv || !hist_csv) throw OutputError("cannot write analysis files in '" + out_dir.string() + "'");

    write_json(out_dir / "analysis.json", doc);
    return doc;
}

Lattice bench_lattice(std::size_t n_sites)
{
    const auto l = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n_sites))));
    if (l * l == n_sites && l >= 2) return build_lattice(l >= 3 ? Geometry::square_periodic : Geometry::square_open, l);
    if (n_sites == 1) return build_lattice(Geometry::single_site, 1);
    return build_lattice(Geometry::open_chain, n_sites);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope needs at least two points");
    double mx = 0.0, my = 0.0;
    const auto n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope needs positive data");
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) throw std::invalid_argument("loglog_slope needs distinct x values");
    return sxy / sxx;
}

BenchReport bench_command(const BenchOptions& opts, std::ostream& log)
{
    if (opts.n_sites.empty() || opts.eta_values.empty()) throw std::invalid_argument("bench needs sizes and eta values");
    BenchReport report;
    for (double eta : opts.eta_values) {
        for (std::size_t n : opts.n_sites) {
            const Lattice lattice = bench_lattice(n);
            ModelParams p;
            p.gamma = 1.0;
            p.eta = eta;
            p.u_kerr = 1.0;
            p.j_hop = 1.0;
            p.delta = -1.0;
            p.g_target = 1.0;
            StepConfig cfg;
            cfg.dt = opts.dt;
            GtaStepper stepper(p, lattice, cfg);
            NoiseSource noise(trajectory_seed(opts.seed, n));
            GaussianState s = vacuum(n);
            for (std::size_t k = 0; k < opts.warmup_steps; ++k) stepper.step(s, p.g_target, noise);

            std::vector<double> samples;
            for (std::size_t r = 0; r < opts.repeats; ++r) {
                std::size_t steps = 0;
                const auto t0 = std::chrono::steady_clock::now();
                double elapsed = 0.0;
                do {
                    for (int k = 0; k < 50; ++k) {
                        if (stepper.step(s, p.g_target, noise).diverged) s = vacuum(n);
                    }
                    steps += 50;
                    elapsed = seconds_since(t0);
                } while (elapsed < opts.min_seconds);
                samples.push_back(elapsed / static_cast<double>(steps));
            }
            // the fastest repeat is the least disturbed by other load
            const double per_step = *std::min_element(samples.begin(), samples.end());
            report.points.push_back({n, eta, per_step});
            log << "bench N=" << n << " eta=" << eta << ": " << per_step * 1e6 << " us/step\n";
        }
    }

    for (double eta : opts.eta_values) {
        std::vector<double> xs, ys;
        for (const auto& pt : report.points) {
            if (pt.eta == eta) {
                xs.push_back(static_cast<double>(pt.n_sites));
                ys.push_back(pt.seconds_per_step);
            }
        }
        if (xs.size() >= 2) {
            report.exponents.emplace_back(eta, loglog_slope(xs, ys));
            log << "fitted exponent (eta=" << eta << "): " << report.exponents.back().second << "\n";
        }
    }

    const std::size_t n_max = *std::max_element(opts.n_sites.begin(), opts.n_sites.end());
    std::optional<double> t_zero, t_loss;
    double eta_loss = 0.0;
    for (const auto& pt : report.points) {
        if (pt.n_sites != n_max) continue;
        if (pt.eta == 0.0) t_zero = pt.seconds_per_step;
        else if (pt.eta > eta_loss) {
            eta_loss = pt.eta;
            t_loss = pt.seconds_per_step;
        }
    }
    if (t_zero && t_loss) {
        report.speedup = *t_loss / *t_zero;
        log << "speedup eta=0 vs eta=" << eta_loss << " at N=" << n_max << ": " << *report.speedup << "\n";
    }

    if (!opts.out_dir.empty()) {
        make_dir(opts.out_dir);
        json doc = to_json(report);
        doc["metadata"] = {{"timestamp", utc_timestamp()}};
        write_json(opts.out_dir / "bench.json", doc);
    }
    return report;
}

json to_json(const BenchReport& report)
{
    json doc;
    doc["schema_version"] = summary_schema_version;
    doc["kind"] = "bench";
    doc["points"] = json::array();
    for (const auto& p : report.points) {
        doc["points"].push_back({{"n_sites", p.n_sites}, {"eta", p.eta}, {"seconds_per_step", p.seconds_per_step}});
    }
    doc["exponents"] = json::array();
    for (const auto& [eta, slope] : report.exponents) doc["exponents"].push_back({{"eta", eta}, {"exponent", slope}});
    doc["speedup_eta0"] = report.speedup ? json(*report.speedup) : json(nullptr);
    return doc;
}

} // namespace gtraj
