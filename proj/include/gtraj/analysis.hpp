// analysis.hpp - Moments, Binder cumulant, histogramming, crossing finder and
// finite-size scaling collapse of order-parameter data.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gtraj {

/// Samples grouped by trajectory: group g spans values[offsets[g], offsets[g+1]).
struct PooledSamples {
    std::vector<double> values;
    std::vector<std::size_t> offsets{0};

    void add_group(std::span<const double> group);
    std::size_t groups() const { return offsets.size() - 1; }
};

/// Raw m-th sample moment. Throws std::invalid_argument for fewer than 2 samples.
double moment(std::span<const double> samples, int m);

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Delete-one-group jackknife of f(means of q), where block_sums[g][q] holds
/// the sum of quantity q over group g and counts[g] its sample count. With a
/// single group the standard error is reported as 0.
Estimate jackknife(const std::vector<std::vector<double>>& block_sums, const std::vector<double>& counts,
                   const std::function<double(std::span<const double>)>& f);

struct BinderResult {
    bool defined = false; // false when mu2 == 0
    double value = 0.0;
    double std_error = 0.0;
    double mu2 = 0.0;
    double mu4 = 0.0;
};

/// U_L = 1 - mu4 / (3 mu2^2), jackknife over groups (trajectories).
BinderResult binder(const PooledSamples& samples);
/// Ungrouped variant: every sample is its own group.
BinderResult binder(std::span<const double> samples);

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;

    double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
    double center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * bin_width(); }
    std::size_t total() const;
};

/// Histogram over [lo, hi]; values outside are clamped into the edge bins so
/// the mass equals the sample count. Without a range the window is symmetric
/// about zero, [-max|x|, max|x|] (or [-1, 1] when every sample is 0).
Histogram histogram(std::span<const double> samples, std::size_t bin_count,
                    std::optional<std::pair<double, double>> range = std::nullopt);

/// Number of modes of a smoothed density estimate of the samples. Gaussian
/// kernel density with 0.5x the Silverman bandwidth computed for
/// `effective_count` independent samples; maxima below 5% of the highest
/// peak are dropped and neighbouring maxima separated by a valley deeper than
/// 10% of the lower peak count as distinct.
int mode_count(std::span<const double> samples, double effective_count);

struct CurvePoint {
    double g = 0.0;
    double value = 0.0;
    double std_error = 0.0;
};

/// A curve (Binder cumulant or other observable) versus drive for one size.
struct CumulantCurve {
    double size = 0.0; // linear size L
    std::vector<CurvePoint> points; // g strictly increasing

    void validate() const;
};

struct PairCrossing {
    double size_a = 0.0;
    double size_b = 0.0;
    std::optional<double> g; // nullopt when the pair has no sign change
    std::size_t sign_changes = 0;
};

struct CrossingResult {
    double g_c = 0.0;
    double uncertainty = 0.0;
    double spread = 0.0;         // std. deviation of the pairwise crossings
    double bootstrap_stderr = 0.0;
    std::vector<PairCrossing> pairs;
    std::vector<std::string> warnings;
};

/// Crossing of one pair of curves by piecewise-linear interpolation on the
/// union of their drive grids. With several sign changes the one with the
/// steepest difference across its bracketing segment is taken.
std::optional<double> pair_crossing(const CumulantCurve& a, const CumulantCurve& b, std::size_t* sign_changes = nullptr);

/// Mean of the pairwise crossings; uncertainty combines their spread with a
/// parametric bootstrap of the points within their standard errors.
/// Throws std::runtime_error when no pair crosses.
CrossingResult find_crossing(std::span<const CumulantCurve> curves, std::size_t n_bootstrap = 200,
                             std::uint64_t seed = 12345);

struct ScalingSpec {
    double g_c = 0.0;
    double nu = 1.0;
    std::optional<double> beta; // rescales y by L^(beta/nu) when set

    void validate() const;
};

/// Curve after rescaling x -> (g - g_c) L^(1/nu), y -> y L^(beta/nu).
CumulantCurve rescale(const CumulantCurve& curve, const ScalingSpec& spec);

/// Mean squared deviation of each rescaled curve from the pointwise mean on a
/// common grid over the overlap of the rescaled ranges, divided by the
/// variance of all interpolated values. `grid` maps [0, 1] onto the overlap
/// (identity when empty). Throws std::runtime_error when there is no overlap.
double collapse_residual(std::span<const CumulantCurve> curves, const ScalingSpec& spec,
                         std::size_t grid_points = 64,
                         const std::function<double(double)>& grid = {});

/// Linear interpolation of a curve at x (x within its range).
double interpolate(const CumulantCurve& curve, double x);

} // namespace gtraj
