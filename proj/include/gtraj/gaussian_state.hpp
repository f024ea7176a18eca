// gaussian_state.hpp - Pure multimode Gaussian state in the moment
// representation used by the trajectory integrator.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace gtraj {

using cplx = std::complex<double>;

/// First moments alpha_n = <a_n>, anomalous central moments
/// u_nm = <da_n da_m> (symmetric) and normal central moments
/// v_nm = <da_n^dag da_m> (Hermitian).
struct GaussianState {
    Eigen::VectorXcd alpha;
    Eigen::MatrixXcd u;
    Eigen::MatrixXcd v;

    std::size_t n_sites() const { return static_cast<std::size_t>(alpha.size()); }
};

/// Quadrature representation with x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2));
/// ordering x_1..x_N, p_1..p_N. The vacuum has sigma = identity / 2.
struct QuadratureCovariance {
    Eigen::VectorXd mean;
    Eigen::MatrixXd sigma;
};

GaussianState vacuum(std::size_t n_sites);

QuadratureCovariance quadrature_covariance(const GaussianState& state);

/// Symplectic eigenvalues of a 2N x 2N covariance, ascending, one per mode.
std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& sigma);

/// Thrown when the covariance is not positive definite.
class SingularCovarianceError : public std::runtime_error {
public:
    SingularCovarianceError(const std::string& what, std::vector<double> spectrum)
        : std::runtime_error(what), spectrum_(std::move(spectrum)) {}
    const std::vector<double>& symplectic_spectrum() const { return spectrum_; }

private:
    std::vector<double> spectrum_;
};

/// Expectation of (-1)^(total photon number), i.e. the Wigner function at
/// the phase-space origin scaled by pi^N.
double parity(const GaussianState& state);
double parity(const QuadratureCovariance& cov);

/// Symmetrizes u and Hermitizes v in place. Returns the largest entry of
/// |u - u^T| and |v - v^dag| before the correction.
double enforce_structure(GaussianState& state);

struct PhysicalityReport {
    double min_symplectic = 0.0;   // 1/2 for a pure state
    double min_occupation = 0.0;   // smallest real diagonal of v
    double u_symmetry_residual = 0.0;
    double v_hermiticity_residual = 0.0;
    bool finite = true;
    bool physical = true;
};

PhysicalityReport physicality_check(const GaussianState& state, double tol_phys);

bool all_finite(const GaussianState& state);

// Snapshot layout, both formats: alpha (N entries), then u and v each in
// column-major order (entry (n, m) at position m * N + n).
//   text:   header line "gaussian-state <N>", then one "re im" pair per line.
//   binary: 4-byte magic "GTSS", uint32 version (1), uint64 N, then
//           interleaved (re, im) IEEE-754 doubles in host byte order.
enum class SnapshotFormat { text, binary };

void write_snapshot(std::ostream& os, const GaussianState& state, SnapshotFormat format);
GaussianState read_snapshot(std::istream& is, SnapshotFormat format);

} // namespace gtraj
