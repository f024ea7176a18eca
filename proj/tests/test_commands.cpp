#include <doctest.h>

#include <stdexcept>

#include "gtraj/commands.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gtraj;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("gtraj_test_" + name);
    fs::remove_all(p);
    return p;
}

RunConfig small_config(const fs::path& dir)
{
    return parse_config_text(R"({
      "method": "gta",
      "model": {"u_kerr": 1.0, "j_hop": 1.0, "delta": -1.0, "g_target": 0.9},
      "lattice": {"geometry": "square-periodic", "size": 3},
      "drive": {"t_ramp": 1.0},
      "step": {"dt": 0.005},
      "ensemble": {"n_traj": 6, "t_fin": 3.0, "t_relax": 1.0, "master_seed": 5}
    })", {{"output.dir", "\"" + dir.string() + "\""}});
}

} // namespace

TEST_CASE("run writes config echo, summary and optional trajectory files")
{
    const fs::path dir = scratch("run");
    RunConfig cfg = small_config(dir);
    cfg.output.trajectory_csv = true;
    std::ostringstream log;
    const RunOutput out = run_command(cfg, log);
    CHECK(fs::exists(dir / "config.json"));
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "trajectories" / "traj_00005.csv"));
    const nlohmann::json doc = read_json_file(dir / "summary.json");
    CHECK(doc["schema_version"] == summary_schema_version);
    CHECK(doc["method"] == "gta");
    CHECK(doc["seeds"].size() == 6);
    CHECK(doc["config"]["model"]["g_target"] == 0.9);
    CHECK(doc["metadata"].contains("timestamp"));
    CHECK(reproducible_part(doc) == reproducible_part(out.summary));

    // a rerun differs only in the metadata
    const RunOutput again = run_command(cfg, log);
    CHECK(reproducible_part(again.summary).dump() == reproducible_part(out.summary).dump());

    const SummaryRecord rec = read_summary(doc, "summary.json");
    CHECK(rec.lattice_size == 3);
    CHECK(rec.binder.has_value());
    CHECK(rec.histogram.has_value());
    fs::remove_all(dir);
}

TEST_CASE("sweep followed by analyze equals individual runs followed by analyze")
{
    const fs::path base = scratch("sweep");
    RunConfig cfg = small_config(base / "sweep");
    cfg.sweep.g_values = {0.6, 1.0, 1.4};
    cfg.sweep.sizes = {3, 4};
    validate(cfg, true);
    std::ostringstream log;
    const auto outputs = sweep_command(cfg, log);
    CHECK(outputs.size() == 6);
    CHECK(fs::exists(base / "sweep" / "sweep.json"));

    for (std::size_t l : cfg.sweep.sizes) {
        for (double g : cfg.sweep.g_values) {
            RunConfig point = cfg.at_point(g, l);
            point.output.dir = (base / "single" / sweep_point_dir(g, l)).string();
            run_command(point, log);
        }
    }

    AnalyzeOptions a;
    a.inputs = {base / "sweep"};
    a.out_dir = base / "analysis_sweep";
    AnalyzeOptions b = a;
    b.inputs = {base / "single"};
    b.out_dir = base / "analysis_single";
    nlohmann::json ja = analyze_command(a, log);
    nlohmann::json jb = analyze_command(b, log);
    CHECK(ja["curves"] == jb["curves"]);
    CHECK(ja["crossing"] == jb["crossing"]);
    CHECK(ja["collapse"] == jb["collapse"]);
    CHECK(ja["curves"].size() == 2);
    CHECK(fs::exists(base / "analysis_sweep" / "curves.csv"));
    CHECK(fs::exists(base / "analysis_sweep" / "histograms.csv"));
    CHECK(fs::exists(base / "analysis_sweep" / "analysis.json"));
    fs::remove_all(base);
}

TEST_CASE("analyze input errors")
{
    const fs::path empty = scratch("empty");
    fs::create_directories(empty);
    std::ostringstream log;
    AnalyzeOptions opts;
    opts.inputs = {empty};
    opts.out_dir = empty / "out";
    CHECK_THROWS_AS(analyze_command(opts, log), AnalysisInputError);
    opts.inputs = {empty / "missing"};
    CHECK_THROWS_AS(analyze_command(opts, log), AnalysisInputError);
    opts.inputs = {};
    CHECK_THROWS_AS(analyze_command(opts, log), AnalysisInputError);

    fs::create_directories(empty / "bad");
    std::ofstream(empty / "bad" / "summary.json") << "{\"schema_version\": 99}";
    opts.inputs = {empty};
    CHECK_THROWS_AS(analyze_command(opts, log), AnalysisInputError);
    fs::remove_all(empty);
}

TEST_CASE("unwritable output directory")
{
    const fs::path file = scratch("file");
    std::ofstream(file) << "x";
    RunConfig cfg = small_config(file / "sub");
    std::ostringstream log;
    CHECK_THROWS_AS(run_command(cfg, log), OutputError);
    fs::remove(file);
}

TEST_CASE("exact runs write the same layout tagged exact")
{
    const fs::path dir = scratch("exact");
    RunConfig cfg = small_config(dir);
    cfg.method = Method::exact;
    cfg.geometry = Geometry::open_chain;
    cfg.size = 2;
    cfg.model.g_target = 0.5;
    validate(cfg);
    std::ostringstream log;
    const RunOutput out = run_command(cfg, log);
    CHECK(out.summary["method"] == "exact");
    CHECK(out.summary["result"]["n"].size() == 2);
    CHECK(out.summary["result"]["g1_01"].contains("re"));
    const SummaryRecord rec = read_summary(out.summary, "exact");
    CHECK(rec.parity.has_value());
    CHECK_FALSE(rec.binder.has_value());
    fs::remove_all(dir);
}

TEST_CASE("bench lattices, slope fit and report")
{
    CHECK(bench_lattice(4).geometry == Geometry::square_open);
    CHECK(bench_lattice(9).geometry == Geometry::square_periodic);
    CHECK(bench_lattice(5).geometry == Geometry::open_chain);
    CHECK(loglog_slope({1, 2, 4, 8}, {3, 12, 48, 192}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(loglog_slope({1}, {1}), std::invalid_argument);

    BenchOptions opts;
    opts.n_sites = {4, 9};
    opts.min_seconds = 0.02;
    opts.repeats = 1;
    opts.warmup_steps = 10;
    std::ostringstream log;
    const BenchReport r = bench_command(opts, log);
    CHECK(r.points.size() == 4);
    CHECK(r.exponents.size() == 2);
    CHECK(r.speedup.has_value());
    const nlohmann::json j = to_json(r);
    CHECK(j["points"].size() == 4);
}
