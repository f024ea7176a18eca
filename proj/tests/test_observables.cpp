#include <doctest.h>

#include <stdexcept>

#include "gtraj/observables.hpp"
#include "oracles/fock_oracle.hpp"

#include <sstream>

using namespace gtraj;

TEST_CASE("order parameter is the mean imaginary amplitude")
{
    Eigen::VectorXcd a(4);
    a << cplx{1, 1}, cplx{0, -1}, cplx{2, 3}, cplx{-1, 1};
    CHECK(order_parameter(a) == doctest::Approx(1.0));
}

TEST_CASE("Gaussian g2 numerator matches the Fock-basis value")
{
    const std::size_t cutoff = 60;
    const auto psi = oracle::displaced_squeezed({0.6, 0.2}, std::polar(0.3, 0.5), cutoff);
    const auto m = oracle::fock_moments(psi, cutoff);
    const Eigen::MatrixXcd a = oracle::annihilation(cutoff);
    const double want = psi.dot(a.adjoint() * a.adjoint() * a * a * psi).real();
    CHECK(gaussian_g2_numerator(m.alpha, m.u, m.v) == doctest::Approx(want).epsilon(1e-10));
    CHECK(gaussian_g2_numerator(cplx{2.0, 0.0}, 0.0, 0.0) == doctest::Approx(16.0));
}

TEST_CASE("Gaussian samples: totals and k = 0 numerator")
{
    GaussianState s = vacuum(2);
    s.alpha << cplx{1.0, 0.0}, cplx{0.0, 1.0};
    s.v(0, 0) = 0.2;
    s.v(1, 1) = 0.3;
    s.v(0, 1) = cplx{0.05, 0.1};
    s.v(1, 0) = cplx{0.05, -0.1};
    TrajectoryRecord rec;
    record_gaussian_sample(rec, 0.5, s, ObservableSelection{true, true});
    CHECK(rec.total_n[0] == doctest::Approx(2.5));
    // sum_jj' <a_j^dag a_j'> = sum v + |sum alpha|^2 = 0.6 + 2
    CHECK(rec.k0_num[0] == doctest::Approx(2.6));
    CHECK(rec.alpha_bar[0] == doctest::Approx(0.5));
    CHECK(rec.site_n.size() == 2);
    CHECK(rec.site_n[1] == doctest::Approx(1.3));
    CHECK(std::abs(rec.corr01[0] - (s.v(0, 1) + std::conj(s.alpha(0)) * s.alpha(1))) < 1e-15);
    REQUIRE(rec.parity.size() == 1);
    CHECK(rec.parity[0] < 1.0);
}

TEST_CASE("singular covariance records a NaN parity instead of failing")
{
    GaussianState s = vacuum(1);
    s.v(0, 0) = -0.7;
    TrajectoryRecord rec;
    record_gaussian_sample(rec, 0.1, s, ObservableSelection{true, false});
    CHECK(std::isnan(rec.parity[0]));
}

TEST_CASE("Wigner samples subtract the symmetric-ordering offsets")
{
    Eigen::VectorXcd f(2);
    f << cplx{1.0, 0.0}, cplx{0.0, 1.0};
    TrajectoryRecord rec;
    record_wigner_sample(rec, 1.0, f, ObservableSelection{false, true});
    CHECK(rec.total_n[0] == doctest::Approx(1.0));
    CHECK(rec.k0_num[0] == doctest::Approx(1.0));
    CHECK(rec.site_n[0] == doctest::Approx(0.5));
    CHECK(rec.site_g2num[0] == doctest::Approx(-0.5));
}

TEST_CASE("trajectory CSV layout")
{
    TrajectoryRecord rec;
    record_gaussian_sample(rec, 0.1, vacuum(1), ObservableSelection{true, false});
    record_gaussian_sample(rec, 0.2, vacuum(1), ObservableSelection{true, false});
    std::ostringstream os;
    write_trajectory_csv(os, rec);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,alpha_bar,total_n,k0_num,parity,diverged");
    std::getline(is, line);
    CHECK(line == "0.10000000000000001,0,0,0,1,0");
}
