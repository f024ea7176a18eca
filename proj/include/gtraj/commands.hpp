// commands.hpp - The run / sweep / analyze / bench workflows behind the CLI.
#pragma once

#include "gtraj/config.hpp"
#include "gtraj/summary_io.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gtraj {

/// Failure to create or write the output directory.
class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunOutput {
    std::filesystem::path dir;
    nlohmann::json summary;
};

/// Executes one run and writes config.json, summary.json and (optionally)
/// trajectories/traj_NNNNN.csv into cfg.output.dir. On divergence the
/// partial summary is written to summary_diverged.json before DivergenceError
/// propagates.
RunOutput run_command(const RunConfig& cfg, std::ostream& log, const std::atomic<bool>* cancel = nullptr);

/// Runs every (size, g) point of cfg.sweep, each in <dir>/L<size>/G<g>, and
/// writes <dir>/sweep.json listing the points. Each point is exactly the run
/// obtained from cfg.at_point(g, size).
std::vector<RunOutput> sweep_command(const RunConfig& cfg, std::ostream& log, const std::atomic<bool>* cancel = nullptr);

/// Directory name of one sweep point.
std::string sweep_point_dir(double g, std::size_t size);

struct AnalyzeOptions {
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path out_dir = "analysis";
    std::string observable = "binder"; // binder | binder_final | parity
    std::vector<double> nu_values{1.0, 0.63};
    std::optional<double> beta;        // y rescaling exponent for the collapse
    std::optional<double> g_c;         // fixes G_c instead of using the crossing
    std::size_t n_bootstrap = 200;
    std::uint64_t seed = 12345;
    std::size_t grid_points = 64;
};

/// Reads summaries, builds one curve per lattice size, locates the crossing,
/// evaluates the collapse for every nu and writes analysis.json, curves.csv,
/// collapse.csv and histograms.csv. Throws AnalysisInputError on bad inputs.
nlohmann::json analyze_command(const AnalyzeOptions& opts, std::ostream& log);

/// Curves of the chosen observable per lattice size from summary records.
std::vector<CumulantCurve> build_curves(const std::vector<SummaryRecord>& records, const std::string& observable);

struct BenchOptions {
    std::vector<std::size_t> n_sites{4, 9, 16, 25, 36};
    std::vector<double> eta_values{1.0, 0.0};
    double min_seconds = 0.3;   // timed wall time per measurement
    std::size_t repeats = 5;    // fastest of this many measurements
    std::size_t warmup_steps = 200;
    double dt = 1e-3;
    std::uint64_t seed = 7;
    std::filesystem::path out_dir;  // bench.json is written when non-empty
};

struct BenchPoint {
    std::size_t n_sites = 0;
    double eta = 0.0;
    double seconds_per_step = 0.0;
};

struct BenchReport {
    std::vector<BenchPoint> points;
    std::vector<std::pair<double, double>> exponents; // (eta, fitted log-log slope)
    std::optional<double> speedup;                   // t(eta>0) / t(eta=0) at the largest N
};

/// Lattice used for N sites: L x L square (open for L = 2, periodic above),
/// or an open chain when N is not a perfect square.
Lattice bench_lattice(std::size_t n_sites);

BenchReport bench_command(const BenchOptions& opts, std::ostream& log);
nlohmann::json to_json(const BenchReport& report);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace gtraj
