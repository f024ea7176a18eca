// observables.hpp - Per-sample observables and the trajectory record shared by
// the Gaussian-trajectory and truncated-Wigner integrators.
#pragma once

#include "gtraj/gaussian_state.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gtraj {

struct ObservableSelection {
    bool parity = false; // Gaussian parity per sample (O(N^3) per sample)
    bool local = false;  // per-site n_j, <a_j^dag^2 a_j^2>, and <a_0^dag a_1>
};

/// Sampling window of a single trajectory.
struct RunWindow {
    double t_fin = 100.0;
    double t_sample = 0.1;
};

/// Time series of one trajectory. Every series has one entry per sample; the
/// local series are flattened sample-major (entry s * n_sites + j).
struct TrajectoryRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::size_t n_sites = 0;

    std::vector<double> times;
    std::vector<double> alpha_bar;
    std::vector<double> total_n; // sum_j <a_j^dag a_j>
    std::vector<double> k0_num;  // sum_{jj'} <a_j^dag a_j'>
    std::vector<double> parity;  // empty unless selected

    std::vector<double> site_n;
    std::vector<double> site_g2num;
    std::vector<cplx> corr01;

    bool diverged = false;
    double diverged_at = -1.0;

    double max_asymmetry = 0.0;       // largest pre-symmetrization residual
    std::optional<double> final_min_symplectic;
    bool purity_drift_flag = false;    // |nu_min - 1/2| / t_fin > tol_phys

    std::optional<GaussianState> final_state;

    std::size_t size() const { return times.size(); }
};

/// Im((1/N) sum_n alpha_n).
double order_parameter(const Eigen::VectorXcd& alpha);
inline double order_parameter(const GaussianState& s) { return order_parameter(s.alpha); }

/// <a^dag a^dag a a> of one mode from its Gaussian moments (Wick).
double gaussian_g2_numerator(cplx alpha, cplx u_nn, double v_nn);

/// Appends one sample computed from a Gaussian trajectory state.
void record_gaussian_sample(TrajectoryRecord& rec, double t, const GaussianState& state,
                            const ObservableSelection& sel);

/// Appends one sample computed from symmetric-ordered Wigner fields, mapped
/// to normal-ordered estimators (n = |a|^2 - 1/2, etc.).
void record_wigner_sample(TrajectoryRecord& rec, double t, const Eigen::VectorXcd& field,
                          const ObservableSelection& sel);

/// Writes the per-trajectory CSV: t,alpha_bar,total_n,k0_num[,parity],diverged
void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec);

} // namespace gtraj
