#include "gtraj/gaussian_state.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace gtraj {

GaussianState vacuum(std::size_t n_sites)
{
    const auto n = static_cast<Eigen::Index>(n_sites);
    GaussianState s;
    s.alpha = Eigen::VectorXcd::Zero(n);
    s.u = Eigen::MatrixXcd::Zero(n, n);
    s.v = Eigen::MatrixXcd::Zero(n, n);
    return s;
}

bool all_finite(const GaussianState& state)
{
    return state.alpha.allFinite() && state.u.allFinite() && state.v.allFinite();
}

QuadratureCovariance quadrature_covariance(const GaussianState& state)
{
    if (!all_finite(state)) throw std::invalid_argument("quadrature_covariance: non-finite moments");
    const Eigen::Index n = state.alpha.size();
    QuadratureCovariance q;
    q.mean.resize(2 * n);
    q.mean.head(n) = std::numbers::sqrt2 * state.alpha.real();
    q.mean.tail(n) = std::numbers::sqrt2 * state.alpha.imag();

    const Eigen::MatrixXd ur = state.u.real(), ui = state.u.imag();
    const Eigen::MatrixXd vr = state.v.real(), vi = state.v.imag();
    const Eigen::MatrixXd half = 0.5 * Eigen::MatrixXd::Identity(n, n);

    q.sigma.resize(2 * n, 2 * n);
    q.sigma.topLeftCorner(n, n) = ur + vr + half;
    q.sigma.bottomRightCorner(n, n) = -ur + vr + half;
    q.sigma.topRightCorner(n, n) = ui + vi;
    q.sigma.bottomLeftCorner(n, n) = q.sigma.topRightCorner(n, n).transpose();
    return q;
}

std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& sigma)
{
    const Eigen::Index n2 = sigma.rows();
    const Eigen::Index n = n2 / 2;
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n2, n2);
    omega.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    omega.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);

    Eigen::EigenSolver<Eigen::MatrixXd> es(omega * sigma, false);
    std::vector<double> all;
    all.reserve(static_cast<std::size_t>(n2));
    for (Eigen::Index i = 0; i < n2; ++i) all.push_back(std::abs(es.eigenvalues()(i)));
    std::sort(all.begin(), all.end());
    // eigenvalues come in pairs +-i nu
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < all.size(); i += 2) out.push_back(0.5 * (all[i] + all[i + 1]));
    return out;
}

double parity(const QuadratureCovariance& cov)
{
    const Eigen::Index n2 = cov.sigma.rows();
    // factorizing 2 sigma keeps the vacuum (2 sigma = 1) exact
    Eigen::LLT<Eigen::MatrixXd> llt(2.0 * cov.sigma);
    if (llt.info() != Eigen::Success) {
        auto spectrum = symplectic_eigenvalues(cov.sigma);
        std::ostringstream msg;
        msg << "parity: covariance is not positive definite; symplectic spectrum:";
        for (double x : spectrum) msg << ' ' << x;
        throw SingularCovarianceError(msg.str(), std::move(spectrum));
    }
    const Eigen::MatrixXd l = llt.matrixL();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n2; ++i) log_det += 2.0 * std::log(l(i, i));
    const double quad = 2.0 * cov.mean.dot(llt.solve(cov.mean));
    return std::exp(-0.5 * quad - 0.5 * log_det);
}

double parity(const GaussianState& state)
{
    return parity(quadrature_covariance(state));
}

double enforce_structure(GaussianState& state)
{
    double asym2 = 0.0; // squared, to avoid a hypot per entry
    const Eigen::Index n = state.u.rows();
    for (Eigen::Index m = 0; m < n; ++m) {
        for (Eigen::Index k = m + 1; k < n; ++k) {
            const cplx u_km = state.u(k, m), u_mk = state.u(m, k);
            const cplx v_km = state.v(k, m), v_mk = std::conj(state.v(m, k));
            asym2 = std::max({asym2, std::norm(u_km - u_mk), std::norm(v_km - v_mk)});
            const cplx us = 0.5 * (u_km + u_mk);
            state.u(k, m) = us;
            state.u(m, k) = us;
            const cplx vs = 0.5 * (v_km + v_mk);
            state.v(k, m) = vs;
            state.v(m, k) = std::conj(vs);
        }
        asym2 = std::max(asym2, 4.0 * state.v(m, m).imag() * state.v(m, m).imag());
        state.v(m, m) = state.v(m, m).real();
    }
    return std::sqrt(asym2);
}

PhysicalityReport physicality_check(const GaussianState& state, double tol_phys)
{
    PhysicalityReport r;
    r.finite = all_finite(state);
    if (!r.finite) {
        r.physical = false;
        r.min_symplectic = std::numeric_limits<double>::quiet_NaN();
        r.min_occupation = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    r.u_symmetry_residual = (state.u - state.u.transpose()).cwiseAbs().maxCoeff();
    r.v_hermiticity_residual = (state.v - state.v.adjoint()).cwiseAbs().maxCoeff();
    r.min_occupation = state.v.diagonal().real().minCoeff();
    const auto spectrum = symplectic_eigenvalues(quadrature_covariance(state).sigma);
    r.min_symplectic = spectrum.empty() ? 0.5 : spectrum.front();
    r.physical = r.min_occupation >= -tol_phys && r.min_symplectic >= 0.5 - tol_phys &&
                 r.u_symmetry_residual <= tol_phys && r.v_hermiticity_residual <= tol_phys;
    return r;
}

namespace {

constexpr char kMagic[4] = {'G', 'T', 'S', 'S'};
constexpr std::uint32_t kSnapshotVersion = 1;

template <typename Fn>
void for_each_entry(GaussianState& s, Fn&& fn)
{
    const Eigen::Index n = s.alpha.size();
    for (Eigen::Index i = 0; i < n; ++i) fn(s.alpha(i));
    for (Eigen::Index m = 0; m < n; ++m)
        for (Eigen::Index k = 0; k < n; ++k) fn(s.u(k, m));
    for (Eigen::Index m = 0; m < n; ++m)
        for (Eigen::Index k = 0; k < n; ++k) fn(s.v(k, m));
}

} // namespace

void write_snapshot(std::ostream& os, const GaussianState& state, SnapshotFormat format)
{
    GaussianState copy = state;
    const std::uint64_t n = state.n_sites();
    if (format == SnapshotFormat::text) {
        os << "gaussian-state " << n << '\n';
        os.precision(17);
        for_each_entry(copy, [&](cplx& z) { os << z.real() << ' ' << z.imag() << '\n'; });
    } else {
        os.write(kMagic, 4);
        os.write(reinterpret_cast<const char*>(&kSnapshotVersion), sizeof kSnapshotVersion);
        os.write(reinterpret_cast<const char*>(&n), sizeof n);
        for_each_entry(copy, [&](cplx& z) {
            const double re = z.real(), im = z.imag();
            os.write(reinterpret_cast<const char*>(&re), sizeof re);
            os.write(reinterpret_cast<const char*>(&im), sizeof im);
        });
    }
    if (!os) throw std::runtime_error("write_snapshot: stream error");
}

GaussianState read_snapshot(std::istream& is, SnapshotFormat format)
{
    std::uint64_t n = 0;
    if (format == SnapshotFormat::text) {
        std::string tag;
        is >> tag >> n;
        if (!is || tag != "gaussian-state") throw std::runtime_error("read_snapshot: bad text header");
    } else {
        char magic[4];
        std::uint32_t version = 0;
        is.read(magic, 4);
        is.read(reinterpret_cast<char*>(&version), sizeof version);
        is.read(reinterpret_cast<char*>(&n), sizeof n);
        if (!is || std::memcmp(magic, kMagic, 4) != 0 || version != kSnapshotVersion)
            throw std::runtime_error("read_snapshot: bad binary header");
    }
    GaussianState s = vacuum(static_cast<std::size_t>(n));
    for_each_entry(s, [&](cplx& z) {
        double re = 0.0, im = 0.0;
        if (format == SnapshotFormat::text) {
            is >> re >> im;
        } else {
            is.read(reinterpret_cast<char*>(&re), sizeof re);
            is.read(reinterpret_cast<char*>(&im), sizeof im);
        }
        z = cplx(re, im);
    });
    if (!is) throw std::runtime_error("read_snapshot: truncated input");
    return s;
}

} // namespace gtraj
