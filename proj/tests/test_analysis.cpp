#include <doctest.h>

#include <stdexcept>

#include "gtraj/analysis.hpp"

#include <cmath>
#include <random>

using namespace gtraj;

namespace {

CumulantCurve line(double size, double slope, double g_cross, double y_cross, std::vector<double> gs)
{
    CumulantCurve c{size, {}};
    for (double g : gs) c.points.push_back({g, y_cross + slope * (g - g_cross), 0.0});
    return c;
}

CumulantCurve master_curve(double size, double g_c, double nu, std::vector<double> gs)
{
    CumulantCurve c{size, {}};
    for (double g : gs) c.points.push_back({g, std::tanh((g - g_c) * std::pow(size, 1.0 / nu)), 0.01});
    return c;
}

std::vector<double> grid(double lo, double hi, int n)
{
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * i / (n - 1));
    return g;
}

} // namespace

TEST_CASE("raw moments")
{
    const std::vector<double> pm{-1.0, 1.0};
    CHECK(moment(pm, 2) == 1.0);
    CHECK(moment(pm, 4) == 1.0);
    const std::vector<double> zeros{0.0, 0.0, 0.0};
    CHECK(moment(zeros, 2) == 0.0);
    CHECK(moment(zeros, 4) == 0.0);
    CHECK_THROWS_AS(moment(std::vector<double>{1.0}, 2), std::invalid_argument);
    CHECK_THROWS_AS(moment(std::vector<double>{}, 2), std::invalid_argument);
}

TEST_CASE("Gaussian fourth-moment ratio approaches three")
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    std::vector<double> x(1000000);
    for (auto& v : x) v = nd(rng);
    const double m2 = moment(x, 2);
    CHECK(moment(x, 4) / (m2 * m2) == doctest::Approx(3.0).epsilon(0.02));
    const BinderResult b = binder(x);
    CHECK(std::abs(b.value) < 0.01);
}

TEST_CASE("Binder cumulant of a symmetric two-point distribution is two thirds")
{
    for (double a : {0.3, 1.0, 17.0}) {
        std::vector<double> x;
        for (int i = 0; i < 50; ++i) x.push_back(i % 2 ? a : -a);
        const BinderResult b = binder(x);
        CHECK(b.defined);
        CHECK(b.value == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    }
}

TEST_CASE("Binder cumulant is scale invariant and undefined without variance")
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ud(-1.0, 2.0);
    std::vector<double> x(500), y(500);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = ud(rng);
        y[i] = -3.5 * x[i];
    }
    CHECK(binder(x).value == doctest::Approx(binder(y).value).epsilon(1e-12));
    const BinderResult z = binder(std::vector<double>(10, 0.0));
    CHECK_FALSE(z.defined);
}

TEST_CASE("jackknife of a mean gives the usual standard error for equal blocks")
{
    std::vector<std::vector<double>> sums;
    std::vector<double> counts;
    std::vector<double> means{1.0, 2.0, 4.0, 7.0};
    for (double m : means) {
        sums.push_back({m * 10.0});
        counts.push_back(10.0);
    }
    const Estimate e = jackknife(sums, counts, [](std::span<const double> m) { return m[0]; });
    CHECK(e.value == doctest::Approx(3.5));
    double ss = 0.0;
    for (double m : means) ss += (m - 3.5) * (m - 3.5);
    CHECK(e.std_error == doctest::Approx(std::sqrt(ss / 3.0 / 4.0)));
}

TEST_CASE("grouped Binder error uses trajectories as the independent unit")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    PooledSamples p;
    for (int g = 0; g < 40; ++g) {
        // strongly correlated group: one level repeated with small jitter
        const double level = nd(rng);
        std::vector<double> grp(100);
        for (auto& v : grp) v = level + 0.01 * nd(rng);
        p.add_group(grp);
    }
    const BinderResult grouped = binder(p);
    const BinderResult flat = binder(std::span<const double>(p.values));
    CHECK(grouped.value == doctest::Approx(flat.value));
    CHECK(grouped.std_error > 3.0 * flat.std_error);
}

TEST_CASE("histogram conserves mass")
{
    const std::vector<double> x{-2.0, -1.0, 0.0, 0.5, 2.0, 5.0};
    const Histogram h = histogram(x, 10, std::pair{-2.0, 2.0});
    CHECK(h.total() == x.size());
    CHECK(h.counts.back() == 2);
    const Histogram sym = histogram(x, 11);
    CHECK(sym.lo == -5.0);
    CHECK(sym.hi == 5.0);
    CHECK(sym.total() == x.size());
}

TEST_CASE("mode counting")
{
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    std::vector<double> uni(20000), bi(20000);
    for (auto& v : uni) v = 0.3 * nd(rng);
    for (std::size_t i = 0; i < bi.size(); ++i) bi[i] = (i % 2 ? 1.0 : -1.0) + 0.3 * nd(rng);
    CHECK(mode_count(uni, 200) == 1);
    CHECK(mode_count(bi, 200) == 2);
}

TEST_CASE("crossing of straight lines is exact")
{
    const auto gs = grid(0.6, 1.2, 13);
    const std::vector<CumulantCurve> curves{line(4, 0.5, 0.86, 0.4, gs), line(6, 1.2, 0.86, 0.4, gs),
                                            line(8, 2.0, 0.86, 0.4, gs)};
    const CrossingResult r = find_crossing(curves);
    CHECK(r.g_c == doctest::Approx(0.86).epsilon(1e-12));
    CHECK(r.spread < 1e-12);
    CHECK(r.pairs.size() == 3);
    CHECK(r.warnings.empty());
}

TEST_CASE("crossing on mismatched grids and identical curves")
{
    const CumulantCurve a = line(4, 0.5, 0.9, 0.0, grid(0.6, 1.2, 7));
    const CumulantCurve b = line(6, -0.5, 0.9, 0.0, grid(0.65, 1.25, 5));
    const auto g = pair_crossing(a, b);
    REQUIRE(g);
    CHECK(*g == doctest::Approx(0.9).epsilon(1e-12));

    const std::vector<CumulantCurve> same{a, CumulantCurve{6, a.points}};
    CHECK_THROWS_AS(find_crossing(same), std::runtime_error);
}

TEST_CASE("several sign changes keep the steepest crossing and warn")
{
    const auto gs = grid(0.0, 3.0, 31);
    CumulantCurve a{4, {}}, b{6, {}};
    for (double g : gs) {
        a.points.push_back({g, 0.0, 0.0});
        // small wiggle crossing near 0.5, steep crossing at 2
        b.points.push_back({g, g < 1.0 ? 0.01 * std::sin(2 * M_PI * g) : 2.0 * (g - 2.0), 0.0});
    }
    std::size_t changes = 0;
    const auto g = pair_crossing(a, b, &changes);
    REQUIRE(g);
    CHECK(changes >= 2);
    CHECK(*g == doctest::Approx(2.0).epsilon(1e-9));
    const std::vector<CumulantCurve> curves{a, b};
    CHECK_FALSE(find_crossing(curves).warnings.empty());
}

TEST_CASE("bootstrap uncertainty grows with point errors")
{
    const auto gs = grid(0.6, 1.2, 13);
    std::vector<CumulantCurve> curves{line(4, 0.5, 0.86, 0.4, gs), line(6, 1.2, 0.86, 0.4, gs)};
    for (auto& c : curves)
        for (auto& p : c.points) p.std_error = 0.01;
    const CrossingResult r = find_crossing(curves, 300, 7);
    CHECK(r.bootstrap_stderr > 0.0);
    CHECK(r.uncertainty >= r.bootstrap_stderr);
    CHECK(std::abs(r.g_c - 0.86) < 1e-12);
}

TEST_CASE("exact master-function data collapses")
{
    const auto gs = grid(0.5, 1.3, 41);
    const std::vector<CumulantCurve> curves{master_curve(4, 0.86, 1.0, gs), master_curve(6, 0.86, 1.0, gs),
                                            master_curve(8, 0.86, 1.0, gs)};
    const double good = collapse_residual(curves, ScalingSpec{0.86, 1.0, std::nullopt}, 200);
    const double bad = collapse_residual(curves, ScalingSpec{0.86, 0.63, std::nullopt}, 200);
    CHECK(good < 1e-3);
    CHECK(bad > 10 * good);

    const std::vector<CumulantCurve> relabeled{curves[2], curves[0], curves[1]};
    CHECK(collapse_residual(relabeled, ScalingSpec{0.86, 1.0, std::nullopt}, 200) == doctest::Approx(good));
    const double warped =
        collapse_residual(curves, ScalingSpec{0.86, 1.0, std::nullopt}, 200, [](double s) { return s * s; });
    CHECK(warped < 1e-3);
}

TEST_CASE("order-parameter collapse with beta")
{
    const auto gs = grid(0.5, 1.3, 41);
    const double nu = 0.62997, beta = 0.32642;
    std::vector<CumulantCurve> curves;
    for (double l : {3.0, 5.0, 7.0}) {
        CumulantCurve c = master_curve(l, 1.2, nu, gs);
        for (auto& p : c.points) p.value = (1.0 + p.value) * std::pow(l, -beta / nu);
        curves.push_back(c);
    }
    const double with_beta = collapse_residual(curves, ScalingSpec{1.2, nu, beta}, 200);
    const double without = collapse_residual(curves, ScalingSpec{1.2, nu, std::nullopt}, 200);
    CHECK(with_beta < 1e-3);
    CHECK(without > with_beta);
}

TEST_CASE("collapse input checks")
{
    const std::vector<CumulantCurve> apart{line(4, 1.0, 0.0, 0.0, grid(0.0, 0.1, 3)),
                                           line(6, 1.0, 0.0, 0.0, grid(5.0, 5.1, 3))};
    CHECK_THROWS_AS(collapse_residual(apart, ScalingSpec{0.0, 1.0, std::nullopt}), std::runtime_error);
    CHECK_THROWS_AS((ScalingSpec{0.0, 0.0, std::nullopt}.validate()), std::invalid_argument);
    CumulantCurve bad{4, {{1.0, 0.0, 0.0}, {0.9, 0.0, 0.0}}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
