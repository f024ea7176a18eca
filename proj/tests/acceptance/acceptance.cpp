// Acceptance checks. Prints one PASS/FAIL line per criterion; criteria can be
// selected by number on the command line (all by default).
#include "gtraj/commands.hpp"
#include "gtraj/gaussian_state.hpp"
#include "gtraj/gta.hpp"
#include "oracles/fock_oracle.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace gtraj;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
namespace tol {
constexpr double ac1_error = 1e-3;        // | |alpha(1)| - e^{-1/2} | at dt = 1e-4
constexpr double ac1_ratio_lo = 8.0;      // error(1e-3) / error(1e-4) for first-order convergence
constexpr double ac1_ratio_hi = 12.0;
constexpr std::size_t ac2_trajectories = 2000;
constexpr double ac2_sigmas = 3.0;
constexpr double ac2_analytic = 1e-6;     // exact solver against the closed form
constexpr double ac3_g1_rel = 0.05;
constexpr double ac3_g1_sigmas = 3.0;
constexpr double ac3_local_rel = 0.10;
constexpr double ac4_lo = 0.78;
constexpr double ac4_hi = 0.94;
constexpr double ac4_max_step = 0.04;
constexpr std::size_t ac4_trajectories = 200;
constexpr double ac5_sigmas = 3.0;
constexpr double ac6_k0_min = 0.9;
constexpr double ac7_tol = 1e-8;
constexpr double ac9_lo = 1.8;
constexpr double ac9_hi = 3.2;
constexpr double ac9_speedup = 1.5;
} // namespace tol

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x, int digits = 4)
{
    std::ostringstream os;
    os << std::setprecision(digits) << x;
    return os.str();
}

std::string pm(double value, double err)
{
    return fmt(value) + " +- " + fmt(err, 2);
}

class Workspace {
public:
    explicit Workspace(fs::path root) : root_(std::move(root)), log_(open_log(root_)) {}

    const fs::path& root() const { return root_; }
    std::ostream& log() { return log_; }

    static void progress(const std::string& msg) { std::cerr << "  " << msg << std::endl; }

    /// Runs (or reuses within this process) one configuration and returns its result block.
    json run(const json& doc, const std::string& name)
    {
        if (auto it = cache_.find(name); it != cache_.end()) return it->second;
        RunConfig cfg = parse_config(doc);
        cfg.output.dir = (root_ / name).string();
        const auto t0 = std::chrono::steady_clock::now();
        const json result = run_command(cfg, log_).summary.at("result");
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        progress(name + " (" + fmt(sec, 3) + " s)");
        cache_[name] = result;
        return result;
    }

    void remember(const std::string& name, const json& result) { cache_[name] = result; }

private:
    static std::ofstream open_log(const fs::path& root)
    {
        fs::create_directories(root);
        return std::ofstream(root / "acceptance.log");
    }

    fs::path root_;
    std::ofstream log_;
    std::map<std::string, json> cache_;
};

double value(const json& est) { return est.at("value").get<double>(); }
double error(const json& est) { return est.at("std_error").get<double>(); }

// ---------------------------------------------------------------------------

Outcome ac1(Workspace&)
{
    const ModelParams p; // gamma = 1, everything else 0
    const Lattice site = build_lattice(Geometry::single_site, 1);
    const double want = std::exp(-0.5);
    auto error_at = [&](double dt) {
        GaussianState s = vacuum(1);
        s.alpha(0) = 1.0;
        StepConfig cfg;
        cfg.dt = dt;
        GtaStepper stepper(p, site, cfg);
        NoiseSource noise(1);
        const std::size_t n = steps_for(1.0, dt, "t");
        for (std::size_t k = 0; k < n; ++k) stepper.step(s, 0.0, noise);
        return std::abs(std::abs(s.alpha(0)) - want);
    };
    const double e3 = error_at(1e-3);
    const double e4 = error_at(1e-4);
    const double ratio = e3 / e4;
    Outcome o;
    o.pass = e4 < tol::ac1_error && ratio >= tol::ac1_ratio_lo && ratio <= tol::ac1_ratio_hi;
    o.detail = "|alpha(1)| error " + fmt(e4) + " at dt=1e-4 (< " + fmt(tol::ac1_error) + "), " + fmt(e3) +
               " at dt=1e-3; ratio " + fmt(ratio) + " in [" + fmt(tol::ac1_ratio_lo) + ", " + fmt(tol::ac1_ratio_hi) + "]";
    return o;
}

json linear_mode_config(const std::string& method)
{
    return json{{"method", method},
                {"model", {{"u_kerr", 0.0}, {"j_hop", 0.0}, {"delta", 0.0}, {"g_target", 0.3}}},
                {"lattice", {{"geometry", "single-site"}, {"size", 1}}},
                {"drive", {{"shape", "instant"}}},
                {"step", {{"dt", 1e-3}}},
                {"ensemble", {{"n_traj", tol::ac2_trajectories}, {"t_fin", 80.0}, {"t_relax", 30.0}, {"master_seed", 2}}}};
}

Outcome ac2(Workspace& ws)
{
    const json exact = ws.run(linear_mode_config("exact"), "ac2/exact");
    const json gta = ws.run(linear_mode_config("gta"), "ac2/gta");
    const double n_exact = exact.at("n").at(0).get<double>();
    const double analytic = oracle::linear_mode_occupation(1.0, 0.3);
    const json& n = gta.at("k0").at("total_n");
    const double dev = std::abs(value(n) - n_exact);
    Outcome o;
    o.pass = dev <= tol::ac2_sigmas * error(n) && std::abs(n_exact - analytic) < tol::ac2_analytic &&
             gta.at("n_valid").get<std::size_t>() >= tol::ac2_trajectories;
    o.detail = "GTA <n> = " + pm(value(n), error(n)) + " over " + std::to_string(gta.at("n_valid").get<std::size_t>()) +
               " trajectories, exact " + fmt(n_exact, 8) + " (closed form " + fmt(analytic, 8) + "); deviation " +
               fmt(dev / error(n), 3) + " stderr";
    return o;
}

json dimer_config(const std::string& method, double g)
{
    json doc{{"method", method},
             {"model", {{"u_kerr", 1.0}, {"j_hop", 1.0}, {"delta", -1.0}, {"g_target", g}}},
             {"lattice", {{"geometry", "open-chain"}, {"size", 2}}},
             {"step", {{"dt", 1e-3}}},
             {"ensemble", {{"n_traj", 400}, {"t_fin", 100.0}, {"t_relax", 20.0}, {"master_seed", 3}}},
             {"observables", {{"local", true}}}};
    return doc;
}

cplx complex_of(const json& j) { return {j.at("re").get<double>(), j.at("im").get<double>()}; }

Outcome ac3(Workspace& ws)
{
    const std::vector<double> grid{0.25, 0.5, 1.0, 2.0, 4.0};
    bool g1_ok = true, local_ok = true;
    double gta_dev_at_1 = 0.0, twa_dev_at_1 = 0.0;
    std::ostringstream detail;
    for (double g : grid) {
        const std::string tag = "G" + fmt(g);
        const json ex = ws.run(dimer_config("exact", g), "ac3/exact_" + tag);
        const json gta = ws.run(dimer_config("gta", g), "ac3/gta_" + tag);
        const json twa = ws.run(dimer_config("twa", g), "ac3/twa_" + tag);

        const cplx g1_ex = complex_of(ex.at("g1_01"));
        auto g1_dev = [&](const json& r, double* sigma) {
            const json& g1 = r.at("local").at("g1_01");
            const cplx v{value(g1.at("re")), value(g1.at("im"))};
            if (sigma) *sigma = std::hypot(error(g1.at("re")), error(g1.at("im")));
            return std::abs(v - g1_ex);
        };
        double sigma = 0.0;
        const double dev = g1_dev(gta, &sigma);
        const double allowed = std::max(tol::ac3_g1_rel * std::abs(g1_ex), tol::ac3_g1_sigmas * sigma);
        const bool point_ok = dev <= allowed;
        g1_ok = g1_ok && point_ok;
        const double twa_dev = g1_dev(twa, nullptr);
        if (g == 1.0) {
            gta_dev_at_1 = dev;
            twa_dev_at_1 = twa_dev;
        }

        const double n_ex = ex.at("n").at(0).get<double>();
        const double g2_ex = ex.at("g2").at(0).get<double>();
        const double n_gta = value(gta.at("local").at("n").at(0));
        const double g2_gta = value(gta.at("local").at("g2").at(0));
        const double n_rel = std::abs(n_gta - n_ex) / n_ex;
        const double g2_rel = std::abs(g2_gta - g2_ex) / g2_ex;
        const bool checked = g <= 0.5 || g >= 2.0;
        if (checked) local_ok = local_ok && n_rel <= tol::ac3_local_rel && g2_rel <= tol::ac3_local_rel;
        ws.log() << "ac3 G=" << g << ": exact n=" << n_ex << " g2=" << g2_ex << " g1=" << g1_ex << " | gta n=" << n_gta
                 << " g2=" << g2_gta << " |dg1|=" << dev << " (allowed " << allowed << ") | twa |dg1|=" << twa_dev << "\n";
        detail << " G=" << fmt(g) << ": |dg1| " << fmt(dev, 2) << (point_ok ? "" : "!") << ", dn " << fmt(100 * n_rel, 2)
               << "%, dg2 " << fmt(100 * g2_rel, 2) << "%" << (checked ? "" : " (not required)") << ";";
    }
    const bool twa_worse = twa_dev_at_1 > gta_dev_at_1;
    Outcome o;
    o.pass = g1_ok && local_ok && twa_worse;
    o.detail = std::string("g1 ") + (g1_ok ? "ok" : "FAILED") + ", n/g2 " + (local_ok ? "ok" : "FAILED") +
               ", TWA |dg1| at G=1 " + fmt(twa_dev_at_1, 3) + (twa_worse ? " > " : " <= ") + "GTA " +
               fmt(gta_dev_at_1, 3) + ";" + detail.str();
    return o;
}

// Classical-regime lattice points shared by criteria 4 to 6. Near G_c a 6x6
// lattice keeps domain walls for about 100 time units after a 50-unit ramp, so
// sampling starts at t = 120.
json classical_config(double g, std::size_t size, std::size_t n_traj, std::uint64_t seed)
{
    return json{{"method", "gta"},
                {"model", {{"u_kerr", 1.0}, {"j_hop", 1.0}, {"delta", -1.0}, {"g_target", g}}},
                {"lattice", {{"geometry", "square-periodic"}, {"size", size}}},
                {"drive", {{"t_ramp", 50.0}}},
                {"step", {{"dt", 5e-3}}},
                {"ensemble", {{"n_traj", n_traj}, {"t_fin", 200.0}, {"t_relax", 120.0}, {"master_seed", seed}}}};
}

constexpr std::uint64_t fss_seed = 4;

std::vector<double> fss_grid()
{
    std::vector<double> g;
    for (int k = 0; k <= 10; ++k) g.push_back(std::round((0.70 + 0.03 * k) * 1e6) / 1e6);
    return g;
}

std::string fss_name(double g, std::size_t size) { return "ac4/" + sweep_point_dir(g, size); }

Outcome ac4(Workspace& ws)
{
    const auto grid = fss_grid();
    double max_step = 0.0;
    for (std::size_t k = 1; k < grid.size(); ++k) max_step = std::max(max_step, grid[k] - grid[k - 1]);

    RunConfig cfg = parse_config(classical_config(grid.front(), 4, tol::ac4_trajectories, fss_seed));
    cfg.sweep.g_values = grid;
    cfg.sweep.sizes = {4, 6};
    cfg.output.dir = (ws.root() / "ac4").string();
    validate(cfg, true);
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& out : sweep_command(cfg, ws.log())) {
        const json& r = out.summary.at("result");
        ws.remember(fss_name(r.at("g").get<double>(), r.at("lattice_size").get<std::size_t>()), r);
    }
    Workspace::progress("ac4 sweep (" + fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 4) + " s)");

    AnalyzeOptions a;
    a.inputs = {ws.root() / "ac4"};
    a.out_dir = ws.root() / "ac4_analysis";
    a.nu_values = {1.0, 0.63};
    const json an = analyze_command(a, ws.log());
    Outcome o;
    if (an.at("crossing").is_null()) {
        o.detail = "no Binder crossing found";
        return o;
    }
    const double g_c = an.at("crossing").at("g_c").get<double>();
    const double unc = an.at("crossing").at("uncertainty").get<double>();
    const json& col = an.at("collapse");
    const json& r1 = col.at(0).at("residual");
    const json& r063 = col.at(1).at("residual");
    const bool have_res = r1.is_number() && r063.is_number();
    const bool collapse_ok = have_res && r1.get<double>() < r063.get<double>();
    o.pass = max_step <= tol::ac4_max_step + 1e-12 && g_c >= tol::ac4_lo && g_c <= tol::ac4_hi && collapse_ok;
    o.detail = "G_c = " + pm(g_c, unc) + " in [" + fmt(tol::ac4_lo) + ", " + fmt(tol::ac4_hi) + "]; collapse residual nu=1 " +
               (have_res ? fmt(r1.get<double>(), 3) : std::string("n/a")) + (collapse_ok ? " < " : " >= ") + "nu=0.63 " +
               (have_res ? fmt(r063.get<double>(), 3) : std::string("n/a")) + "; L=4,6, " +
               std::to_string(tol::ac4_trajectories) + " trajectories/point, G step " + fmt(max_step, 3);
    return o;
}

json fss_point(Workspace& ws, double g, std::size_t size)
{
    RunConfig base = parse_config(classical_config(0.7, 4, tol::ac4_trajectories, fss_seed));
    return ws.run(to_json(base.at_point(g, size)), fss_name(g, size));
}

Outcome ac5(Workspace& ws)
{
    const json lo = fss_point(ws, 0.7, 6);
    const json hi = fss_point(ws, 1.0, 6);
    const int m_lo = lo.at("modes").get<int>();
    const int m_hi = hi.at("modes").get<int>();
    auto centred = [](const json& r) { return std::abs(value(r.at("alpha_bar"))) <= tol::ac5_sigmas * error(r.at("alpha_bar")); };
    Outcome o;
    o.pass = m_lo == 1 && m_hi == 2 && centred(lo) && centred(hi);
    o.detail = "6x6 modes: " + std::to_string(m_lo) + " at G=0.7, " + std::to_string(m_hi) + " at G=1.0; mean alpha_bar " +
               pm(value(lo.at("alpha_bar")), error(lo.at("alpha_bar"))) + " and " +
               pm(value(hi.at("alpha_bar")), error(hi.at("alpha_bar")));
    return o;
}

Outcome ac6(Workspace& ws)
{
    auto k0 = [&](double g, std::size_t size) {
        const json r = ws.run(classical_config(g, size, 100, 6), "ac6/" + sweep_point_dir(g, size));
        return r.at("k0").at("normalized");
    };
    const json hi4 = k0(2.0, 4), hi6 = k0(2.0, 6), lo4 = k0(0.6, 4), lo6 = k0(0.6, 6);
    Outcome o;
    o.pass = value(hi4) > tol::ac6_k0_min && value(hi6) > tol::ac6_k0_min && value(lo6) < value(lo4);
    o.detail = "n_k0 at G=2: " + pm(value(hi4), error(hi4)) + " (4x4), " + pm(value(hi6), error(hi6)) +
               " (6x6); at G=0.6: " + pm(value(lo4), error(lo4)) + " (4x4) vs " + pm(value(lo6), error(lo6)) + " (6x6)";
    return o;
}

Outcome ac7(Workspace&)
{
    const double p_vac = parity(vacuum(1));

    const cplx alpha = std::sqrt(0.5);
    const double ref_coh = oracle::fock_parity(oracle::displaced_squeezed(alpha, 0.0, 60));
    GaussianState coh = vacuum(1);
    coh.alpha(0) = alpha;
    const double p_coh = parity(coh);

    const auto psi = oracle::displaced_squeezed(0.0, 0.5, 120);
    const auto m = oracle::fock_moments(psi, 120);
    const double ref_sq = oracle::fock_parity(psi);
    GaussianState sq = vacuum(1);
    sq.alpha(0) = m.alpha;
    sq.u(0, 0) = m.u;
    sq.v(0, 0) = m.v;
    const double p_sq = parity(sq);

    Outcome o;
    o.pass = p_vac == 1.0 && std::abs(p_coh - ref_coh) < tol::ac7_tol && std::abs(p_coh - std::exp(-1.0)) < tol::ac7_tol &&
             std::abs(p_sq - 1.0) < tol::ac7_tol && std::abs(p_sq - ref_sq) < tol::ac7_tol;
    std::ostringstream d;
    d << std::setprecision(17) << "vacuum " << p_vac << "; coherent " << p_coh << " (Fock sum " << ref_coh
      << "); squeezed r=0.5 " << p_sq << " (Fock sum " << ref_sq << ")";
    o.detail = d.str();
    return o;
}

json quantum_config(double g, Geometry geometry, std::size_t size)
{
    return json{{"method", "gta"},
                {"model", {{"u_kerr", 40.0}, {"j_hop", 20.0}, {"delta", -20.0}, {"g_target", g}}},
                {"lattice", {{"geometry", std::string(to_string(geometry))}, {"size", size}}},
                // 2.5e-4 meets the 0.01 / max rate rule but lets about 8% of trajectories blow up
                {"step", {{"dt", 1e-4}}},
                {"ensemble", {{"n_traj", 100}, {"t_fin", 30.0}, {"t_relax", 15.0}, {"master_seed", 8}}},
                {"observables", {{"parity", true}}}};
}

Outcome ac8(Workspace& ws)
{
    const std::vector<double> grid{0.8, 1.0, 1.2, 1.4, 1.6};
    struct Series {
        std::string name;
        std::vector<double> v, e;
    };
    Series s2{"2x2", {}, {}}, s3{"3x3", {}, {}};
    for (double g : grid) {
        const json a = ws.run(quantum_config(g, Geometry::square_open, 2), "ac8/2x2_G" + fmt(g));
        const json b = ws.run(quantum_config(g, Geometry::square_periodic, 3), "ac8/3x3_G" + fmt(g));
        s2.v.push_back(value(a.at("parity")));
        s2.e.push_back(error(a.at("parity")));
        s3.v.push_back(value(b.at("parity")));
        s3.e.push_back(error(b.at("parity")));
    }
    // monotone within error bars: no rise larger than the two error bars combined
    auto monotone = [](const Series& s) {
        for (std::size_t k = 1; k < s.v.size(); ++k)
            if (s.v[k] - s.v[k - 1] > s.e[k] + s.e[k - 1]) return false;
        return true;
    };
    bool below = true;
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (grid[k] > 1.2 + 1e-12) below = below && s3.v[k] < s2.v[k];
    std::ostringstream d;
    for (const Series* s : {&s2, &s3}) {
        d << s->name << ":";
        for (std::size_t k = 0; k < grid.size(); ++k) d << " " << pm(s->v[k], s->e[k]);
        d << (monotone(*s) ? " (decreasing)" : " (NOT decreasing)") << "; ";
    }
    d << "3x3 below 2x2 for G > 1.2: " << (below ? "yes" : "no");
    Outcome o;
    o.pass = monotone(s2) && monotone(s3) && below;
    o.detail = d.str();
    return o;
}

Outcome ac9(Workspace& ws)
{
    BenchOptions opts;
    opts.out_dir = ws.root() / "ac9";
    const BenchReport r = bench_command(opts, ws.log());
    double slope = std::nan("");
    for (const auto& [eta, s] : r.exponents)
        if (eta == 1.0) slope = s;
    const double speedup = r.speedup.value_or(0.0);
    Outcome o;
    o.pass = slope >= tol::ac9_lo && slope <= tol::ac9_hi && speedup >= tol::ac9_speedup;
    std::ostringstream d;
    d << "per-step cost exponent (eta=1) " << fmt(slope, 3) << " in [" << tol::ac9_lo << ", " << tol::ac9_hi
      << "]; eta=0 speedup at N=36 " << fmt(speedup, 3) << " (>= " << tol::ac9_speedup << "); us/step:";
    for (const auto& p : r.points) d << " N=" << p.n_sites << "/eta=" << p.eta << ":" << fmt(1e6 * p.seconds_per_step, 3);
    o.detail = d.str();
    return o;
}

Outcome ac10(Workspace& ws)
{
    json doc = classical_config(0.9, 4, 16, 10);
    doc["drive"]["t_ramp"] = 5.0;
    doc["ensemble"]["t_fin"] = 20.0;
    doc["ensemble"]["t_relax"] = 5.0;
    doc["observables"] = {{"parity", true}, {"local", true}};
    std::vector<std::string> dumps;
    for (std::size_t workers : {1, 4, 8}) {
        RunConfig cfg = parse_config(doc);
        cfg.ensemble.workers = workers;
        cfg.output.dir = (ws.root() / ("ac10/w" + std::to_string(workers))).string();
        json part = reproducible_part(run_command(cfg, ws.log()).summary);
        part["config"]["output"].erase("dir"); // each run writes to its own directory
        dumps.push_back(part.dump());
    }
    Outcome o;
    o.pass = dumps[0] == dumps[1] && dumps[0] == dumps[2];
    o.detail = std::string("summaries at 1, 4 and 8 workers are ") + (o.pass ? "bit-identical" : "DIFFERENT") + " (" +
               std::to_string(dumps[0].size()) + " bytes)";
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance checks"};
    std::vector<int> selected;
    std::string work = "acceptance_work";
    app.add_option("criteria", selected, "criterion numbers to run (default: all)")->check(CLI::Range(1, 10));
    app.add_option("-w,--work", work, "working directory for run outputs");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<Outcome(Workspace&)>> checks{ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9, ac10};
    std::set<int> chosen(selected.begin(), selected.end());
    if (chosen.empty())
        for (int k = 1; k <= 10; ++k) chosen.insert(k);

    Workspace ws(work);
    json report = json::object();
    int failures = 0;
    for (int k : chosen) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = checks[static_cast<std::size_t>(k - 1)](ws);
        } catch (const std::exception& e) {
            o = Outcome{false, std::string("error: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << "AC" << k << (o.pass ? " PASS: " : " FAIL: ") << o.detail << " [" << fmt(sec, 3) << " s]" << std::endl;
        report["AC" + std::to_string(k)] = {{"pass", o.pass}, {"detail", o.detail}, {"seconds", sec}};
        failures += o.pass ? 0 : 1;
    }
    std::ofstream(fs::path(work) / "acceptance_report.json") << report.dump(2) << "\n";
    return failures == 0 ? 0 : 1;
}
