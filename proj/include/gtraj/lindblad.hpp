// lindblad.hpp - Brute-force master-equation solver in a truncated Fock basis
// for one or two sites; serves as the reference for the trajectory methods.
#pragma once

#include "gtraj/model.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <complex>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace gtraj {

using cplx = std::complex<double>;
using SparseOp = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

struct FockConfig {
    std::size_t n_max = 12;    // per-site cutoff: Fock states 0..n_max
    std::size_t n_sites = 1;   // 1 or 2
    std::size_t max_dim = 1024; // cap on the Hilbert dimension (n_max+1)^n_sites

    std::size_t dim() const;
    void validate() const;
};

/// Operators of the master equation. Basis index of |n_0, n_1> is
/// n_0 * (n_max + 1) + n_1.
struct OperatorSet {
    FockConfig fock;
    ModelParams params;
    std::vector<SparseOp> a;     // per-site annihilation operators
    SparseOp hamiltonian;
    std::vector<SparseOp> jumps; // sqrt(gamma) a_j, then sqrt(eta) a_j^2 when eta > 0
    SparseOp heff;               // H - (i/2) sum_k L_k^dag L_k
    std::vector<std::vector<std::size_t>> site_occupation; // [site][basis index] -> n
};

/// `lattice` supplies the bonds and z; it must have fock.n_sites sites.
OperatorSet build_operators(const FockConfig& fock, const ModelParams& params, const Lattice& lattice);

/// d rho / dt = -i[H, rho] + sum_k (L rho L^dag - {L^dag L, rho}/2).
Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, const OperatorSet& ops);

enum class SteadyStateMethod {
    krylov,   // BiCGSTAB on the trace-augmented Liouvillian, polished by integration if needed
    integrate // RK4 time evolution from the vacuum
};

std::string_view to_string(SteadyStateMethod m);
SteadyStateMethod steady_state_method_from_string(std::string_view name);

struct SteadyStateOptions {
    double tol_ss = 1e-9;     // max |d rho/dt| entry at convergence
    double t_max = 5000.0;    // integration time limit
    double dt = 0.0;          // 0 selects a step from an operator-norm bound
    std::size_t check_every = 20;
    SteadyStateMethod method = SteadyStateMethod::krylov;
    std::size_t max_iterations = 2000;
};

struct SteadyState {
    Eigen::MatrixXcd rho;
    double t = 0.0;              // integration time used
    std::size_t steps = 0;       // integration steps
    std::size_t iterations = 0;  // Krylov iterations
    double residual = 0.0;
    double top_population = 0.0; // largest per-site population of |n_max>
    bool truncation_warning = false;
};

class NonConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Solves L[rho] = 0 with Tr rho = 1 until max |L[rho]| < tol_ss. The
/// Krylov solve falls back to RK4 integration from its best iterate; plain
/// integration starts from the vacuum. Throws NonConvergenceError after t_max.
SteadyState steady_state(const OperatorSet& ops, const SteadyStateOptions& opts = {});

struct ExactObservables {
    Eigen::VectorXd n;
    std::vector<std::optional<double>> g2;
    Eigen::MatrixXcd corr;   // <a_j^dag a_j'>
    Eigen::VectorXcd alpha;  // <a_j>
    double parity = 1.0;
    std::optional<double> n_k0_normalized;
    std::optional<double> n_k0_printed;

    std::optional<cplx> g1(std::size_t j, std::size_t jp) const;
};

ExactObservables exact_observables(const Eigen::MatrixXcd& rho, const OperatorSet& ops);

struct ConvergedSteadyState {
    std::size_t n_max = 0;
    SteadyState state;
    ExactObservables observables;
    double max_relative_change = 0.0; // against the n_max - step solve
};

class TruncationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Solves at n_max and n_max + step, increasing the cutoff until every
/// observable (n_j, g2_j, g1_{01}) moves by less than rel_tol. Throws
/// TruncationError when the dimension cap is reached first.
ConvergedSteadyState converged_steady_state(const ModelParams& params, const Lattice& lattice,
                                            std::size_t n_max_start, std::size_t step = 5,
                                            double rel_tol = 1e-3, std::size_t max_dim = 1024,
                                            const SteadyStateOptions& opts = {});

} // namespace gtraj
