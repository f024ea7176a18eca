#include "gtraj/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace gtraj {

void PooledSamples::add_group(std::span<const double> group)
{
    values.insert(values.end(), group.begin(), group.end());
    offsets.push_back(values.size());
}

double moment(std::span<const double> samples, int m)
{
    if (samples.size() < 2) throw std::invalid_argument("moment: need at least 2 samples");
    double acc = 0.0;
    for (double x : samples) acc += std::pow(x, m);
    return acc / static_cast<double>(samples.size());
}

Estimate jackknife(const std::vector<std::vector<double>>& block_sums, const std::vector<double>& counts,
                   const std::function<double(std::span<const double>)>& f)
{
    const std::size_t g = block_sums.size();
    if (g == 0 || counts.size() != g) throw std::invalid_argument("jackknife: empty or mismatched blocks");
    const std::size_t q = block_sums.front().size();
    std::vector<double> total(q, 0.0);
    double total_count = 0.0;
    for (std::size_t b = 0; b < g; ++b) {
        for (std::size_t k = 0; k < q; ++k) total[k] += block_sums[b][k];
        total_count += counts[b];
    }
    std::vector<double> mean(q);
    for (std::size_t k = 0; k < q; ++k) mean[k] = total[k] / total_count;

    Estimate est;
    est.value = f(mean);
    if (g < 2) return est;

    std::vector<double> loo(g);
    for (std::size_t b = 0; b < g; ++b) {
        const double c = total_count - counts[b];
        for (std::size_t k = 0; k < q; ++k) mean[k] = (total[k] - block_sums[b][k]) / c;
        loo[b] = f(mean);
    }
    const double avg = std::accumulate(loo.begin(), loo.end(), 0.0) / static_cast<double>(g);
    double ss = 0.0;
    for (double x : loo) ss += (x - avg) * (x - avg);
    est.std_error = std::sqrt(static_cast<double>(g - 1) / static_cast<double>(g) * ss);
    return est;
}

BinderResult binder(const PooledSamples& samples)
{
    if (samples.values.size() < 2) throw std::invalid_argument("binder: need at least 2 samples");
    const std::size_t g = samples.groups();
    std::vector<std::vector<double>> sums(g, std::vector<double>(2, 0.0));
    std::vector<double> counts(g, 0.0);
    for (std::size_t b = 0; b < g; ++b) {
        for (std::size_t i = samples.offsets[b]; i < samples.offsets[b + 1]; ++i) {
            const double x2 = samples.values[i] * samples.values[i];
            sums[b][0] += x2;
            sums[b][1] += x2 * x2;
        }
        counts[b] = static_cast<double>(samples.offsets[b + 1] - samples.offsets[b]);
    }
    // empty groups carry no information and break the delete-one means
    std::vector<std::vector<double>> used_sums;
    std::vector<double> used_counts;
    for (std::size_t b = 0; b < g; ++b) {
        if (counts[b] > 0.0) {
            used_sums.push_back(sums[b]);
            used_counts.push_back(counts[b]);
        }
    }

    BinderResult r;
    double total2 = 0.0, total4 = 0.0;
    for (const auto& s : used_sums) {
        total2 += s[0];
        total4 += s[1];
    }
    const double n = static_cast<double>(samples.values.size());
    r.mu2 = total2 / n;
    r.mu4 = total4 / n;
    if (!(r.mu2 > 0.0)) return r;
    r.defined = true;
    const auto est = jackknife(used_sums, used_counts, [](std::span<const double> m) {
        return m[0] > 0.0 ? 1.0 - m[1] / (3.0 * m[0] * m[0]) : 0.0;
    });
    r.value = est.value;
    r.std_error = est.std_error;
    return r;
}

BinderResult binder(std::span<const double> samples)
{
    PooledSamples p;
    p.values.assign(samples.begin(), samples.end());
    p.offsets.resize(samples.size() + 1);
    std::iota(p.offsets.begin(), p.offsets.end(), std::size_t{0});
    return binder(p);
}

std::size_t Histogram::total() const
{
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

Histogram histogram(std::span<const double> samples, std::size_t bin_count,
                    std::optional<std::pair<double, double>> range)
{
    if (samples.empty()) throw std::invalid_argument("histogram: empty input");
    if (bin_count == 0) throw std::invalid_argument("histogram: bin_count must be > 0");
    Histogram h;
    if (range) {
        h.lo = range->first;
        h.hi = range->second;
        if (!(h.hi > h.lo)) throw std::invalid_argument("histogram: empty range");
    } else {
        double r = 0.0;
        for (double x : samples) r = std::max(r, std::abs(x));
        if (r == 0.0) r = 1.0;
        h.lo = -r;
        h.hi = r;
    }
    h.counts.assign(bin_count, 0);
    const double w = h.bin_width();
    for (double x : samples) {
        auto idx = static_cast<long long>(std::floor((x - h.lo) / w));
        idx = std::clamp<long long>(idx, 0, static_cast<long long>(bin_count) - 1);
        ++h.counts[static_cast<std::size_t>(idx)];
    }
    return h;
}

int mode_count(std::span<const double> samples, double effective_count)
{
    if (samples.size() < 2) throw std::invalid_argument("mode_count: need at least 2 samples");
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / n);
    if (sd == 0.0) return 1;
    const double n_eff = std::clamp(effective_count, 2.0, n);
    const double bw = 0.5 * 1.06 * sd * std::pow(n_eff, -0.2);

    // binned kernel density estimate
    const double lo = *std::min_element(samples.begin(), samples.end()) - 3.0 * bw;
    const double hi = *std::max_element(samples.begin(), samples.end()) + 3.0 * bw;
    constexpr std::size_t fine = 512;
    const Histogram h = histogram(samples, fine, std::pair{lo, hi});
    const double dx = h.bin_width();
    std::vector<double> dens(fine, 0.0);
    const auto reach = static_cast<long long>(std::ceil(4.0 * bw / dx));
    for (std::size_t i = 0; i < fine; ++i) {
        if (h.counts[i] == 0) continue;
        for (long long k = -reach; k <= reach; ++k) {
            const long long j = static_cast<long long>(i) + k;
            if (j < 0 || j >= static_cast<long long>(fine)) continue;
            const double d = static_cast<double>(k) * dx / bw;
            dens[static_cast<std::size_t>(j)] += static_cast<double>(h.counts[i]) * std::exp(-0.5 * d * d);
        }
    }

    const double peak = *std::max_element(dens.begin(), dens.end());
    struct Mode { std::size_t at; double height; };
    std::vector<Mode> modes;
    for (std::size_t i = 0; i < fine; ++i) {
        const double left = i == 0 ? -1.0 : dens[i - 1];
        const double right = i + 1 == fine ? -1.0 : dens[i + 1];
        if (dens[i] > left && dens[i] >= right && dens[i] >= 0.05 * peak) modes.push_back({i, dens[i]});
    }
    // merge maxima whose separating valley is shallow
    bool merged = true;
    while (merged && modes.size() > 1) {
        merged = false;
        for (std::size_t m = 0; m + 1 < modes.size(); ++m) {
            const double valley = *std::min_element(dens.begin() + static_cast<long>(modes[m].at),
                                                    dens.begin() + static_cast<long>(modes[m + 1].at) + 1);
            const double lower = std::min(modes[m].height, modes[m + 1].height);
            if (valley > 0.9 * lower) {
                if (modes[m].height >= modes[m + 1].height) modes.erase(modes.begin() + static_cast<long>(m) + 1);
                else modes.erase(modes.begin() + static_cast<long>(m));
                merged = true;
                break;
            }
        }
    }
    return static_cast<int>(modes.size());
}

void CumulantCurve::validate() const
{
    if (points.size() < 2) throw std::invalid_argument("curve needs at least 2 points");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].std_error < 0.0) throw std::invalid_argument("curve standard errors must be >= 0");
        if (i > 0 && !(points[i].g > points[i - 1].g)) throw std::invalid_argument("curve drive values must be strictly increasing");
    }
}

double interpolate(const CumulantCurve& curve, double x)
{
    const auto& p = curve.points;
    if (x <= p.front().g) return p.front().value;
    if (x >= p.back().g) return p.back().value;
    const auto it = std::upper_bound(p.begin(), p.end(), x, [](double v, const CurvePoint& c) { return v < c.g; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    const double t = (x - a.g) / (b.g - a.g);
    return a.value + t * (b.value - a.value);
}

std::optional<double> pair_crossing(const CumulantCurve& a, const CumulantCurve& b, std::size_t* sign_changes)
{
    const double lo = std::max(a.points.front().g, b.points.front().g);
    const double hi = std::min(a.points.back().g, b.points.back().g);
    std::vector<double> grid;
    for (const auto* c : {&a, &b})
        for (const auto& p : c->points)
            if (p.g >= lo && p.g <= hi) grid.push_back(p.g);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<double> diff(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) diff[i] = interpolate(a, grid[i]) - interpolate(b, grid[i]);

    std::optional<double> best;
    double best_jump = -1.0;
    std::size_t changes = 0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double d0 = diff[i], d1 = diff[i + 1];
        if (!((d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0))) continue;
        ++changes;
        const double x = grid[i] + (grid[i + 1] - grid[i]) * d0 / (d0 - d1);
        const double jump = std::abs(d1 - d0);
        if (jump > best_jump) {
            best_jump = jump;
            best = x;
        }
    }
    // a difference that is exactly zero at an interior grid point between
    // opposite signs is a crossing too
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        if (diff[i] == 0.0 && diff[i - 1] * diff[i + 1] < 0.0) {
            ++changes;
            const double jump = std::abs(diff[i + 1] - diff[i - 1]);
            if (jump > best_jump) {
                best_jump = jump;
                best = grid[i];
            }
        }
    }
    if (sign_changes) *sign_changes = changes;
    return best;
}

CrossingResult find_crossing(std::span<const CumulantCurve> curves, std::size_t n_bootstrap, std::uint64_t seed)
{
    if (curves.size() < 2) throw std::invalid_argument("find_crossing: need curves for at least 2 sizes");
    for (const auto& c : curves) c.validate();

    CrossingResult r;
    std::vector<double> found;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        for (std::size_t j = i + 1; j < curves.size(); ++j) {
            PairCrossing pc{curves[i].size, curves[j].size, std::nullopt, 0};
            pc.g = pair_crossing(curves[i], curves[j], &pc.sign_changes);
            std::ostringstream w;
            if (!pc.g) {
                w << "no crossing between L=" << pc.size_a << " and L=" << pc.size_b << "; pair excluded";
                r.warnings.push_back(w.str());
            } else {
                if (pc.sign_changes > 1) {
                    w << "L=" << pc.size_a << " and L=" << pc.size_b << " cross " << pc.sign_changes
                      << " times; steepest crossing kept";
                    r.warnings.push_back(w.str());
                }
                found.push_back(*pc.g);
            }
            r.pairs.push_back(pc);
        }
    }
    if (found.empty()) throw std::runtime_error("find_crossing: no pair of curves has an isolated crossing");

    const double n = static_cast<double>(found.size());
    r.g_c = std::accumulate(found.begin(), found.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : found) ss += (x - r.g_c) * (x - r.g_c);
    r.spread = found.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;

    // parametric bootstrap within the per-point standard errors
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> boot;
    std::vector<CumulantCurve> resampled(curves.begin(), curves.end());
    for (std::size_t b = 0; b < n_bootstrap; ++b) {
        for (std::size_t c = 0; c < curves.size(); ++c)
            for (std::size_t k = 0; k < curves[c].points.size(); ++k)
                resampled[c].points[k].value = curves[c].points[k].value + curves[c].points[k].std_error * normal(rng);
        double acc = 0.0;
        std::size_t cnt = 0;
        for (std::size_t i = 0; i < resampled.size(); ++i)
            for (std::size_t j = i + 1; j < resampled.size(); ++j)
                if (auto g = pair_crossing(resampled[i], resampled[j])) {
                    acc += *g;
                    ++cnt;
                }
        if (cnt > 0) boot.push_back(acc / static_cast<double>(cnt));
    }
    if (boot.size() > 1) {
        const double m = std::accumulate(boot.begin(), boot.end(), 0.0) / static_cast<double>(boot.size());
        double bs = 0.0;
        for (double x : boot) bs += (x - m) * (x - m);
        r.bootstrap_stderr = std::sqrt(bs / static_cast<double>(boot.size() - 1));
    }
    r.uncertainty = std::sqrt(r.spread * r.spread + r.bootstrap_stderr * r.bootstrap_stderr);
    return r;
}

void ScalingSpec::validate() const
{
    if (!(nu > 0.0)) throw std::invalid_argument("scaling: nu must be > 0");
    if (!std::isfinite(g_c)) throw std::invalid_argument("scaling: g_c must be finite");
}

CumulantCurve rescale(const CumulantCurve& curve, const ScalingSpec& spec)
{
    spec.validate();
    CumulantCurve out{curve.size, {}};
    const double xs = std::pow(curve.size, 1.0 / spec.nu);
    const double ys = spec.beta ? std::pow(curve.size, *spec.beta / spec.nu) : 1.0;
    for (const auto& p : curve.points) out.points.push_back({(p.g - spec.g_c) * xs, p.value * ys, p.std_error * ys});
    return out;
}

double collapse_residual(std::span<const CumulantCurve> curves, const ScalingSpec& spec, std::size_t grid_points,
                         const std::function<double(double)>& grid)
{
    if (curves.size() < 2) throw std::invalid_argument("collapse_residual: need at least 2 curves");
    if (grid_points < 2) throw std::invalid_argument("collapse_residual: need at least 2 grid points");
    std::vector<CumulantCurve> scaled;
    for (const auto& c : curves) {
        c.validate();
        scaled.push_back(rescale(c, spec));
    }
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    for (const auto& c : scaled) {
        lo = std::max(lo, c.points.front().g);
        hi = std::min(hi, c.points.back().g);
    }
    if (!(hi > lo)) throw std::runtime_error("collapse_residual: rescaled curves do not overlap");

    const std::size_t nc = scaled.size();
    std::vector<std::vector<double>> y(grid_points, std::vector<double>(nc));
    double sum = 0.0;
    for (std::size_t k = 0; k < grid_points; ++k) {
        double s = static_cast<double>(k) / static_cast<double>(grid_points - 1);
        if (grid) s = std::clamp(grid(s), 0.0, 1.0);
        const double x = lo + s * (hi - lo);
        for (std::size_t c = 0; c < nc; ++c) {
            y[k][c] = interpolate(scaled[c], x);
            sum += y[k][c];
        }
    }
    const double total = static_cast<double>(grid_points * nc);
    const double mean_all = sum / total;
    double var_all = 0.0, dev = 0.0;
    for (const auto& row : y) {
        const double m = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(nc);
        for (double v : row) {
            dev += (v - m) * (v - m);
            var_all += (v - mean_all) * (v - mean_all);
        }
    }
    if (var_all == 0.0) return 0.0;
    return (dev / total) / (var_all / total);
}

} // namespace gtraj
