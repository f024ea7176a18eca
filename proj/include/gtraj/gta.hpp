// gta.hpp - Gaussian-trajectory integrator: Euler-Maruyama integration of the
// stochastic moment equations under heterodyne unraveling of the one- and
// two-photon loss channels.
#pragma once

#include "gtraj/gaussian_state.hpp"
#include "gtraj/model.hpp"
#include "gtraj/observables.hpp"
#include "gtraj/rng.hpp"

#include <cstdint>

namespace gtraj {

struct StepConfig {
    double dt = 1e-4;
    double blowup_threshold = 1e3; // cap on per-site |alpha| and on sqrt(v_nn)
    double tol_phys = 1e-6;

    void validate() const;
};

/// Largest time step recommended for the given parameters,
/// 0.01 / max(|Delta|, U, J, G, gamma).
double recommended_dt(const ModelParams& params);

/// Complex Wiener increments per site: dz1 for one-photon loss, dz2 for
/// two-photon loss (empty when eta == 0).
struct NoiseIncrements {
    Eigen::VectorXcd dz1;
    Eigen::VectorXcd dz2;
};

NoiseIncrements draw_increments(NoiseSource& noise, std::size_t n_sites, double dt, bool two_photon);

/// Increment or rate for every moment.
struct MomentDelta {
    Eigen::VectorXcd alpha;
    Eigen::MatrixXcd u;
    Eigen::MatrixXcd v;
};

/// Reusable kernel holding the workspaces of one trajectory. Not thread-safe;
/// each worker owns one.
class GtaKernel {
public:
    GtaKernel(const ModelParams& params, const Lattice& lattice);

    /// Deterministic rates (d alpha/dt, du/dt, dv/dt) at drive amplitude g.
    void drift(const GaussianState& s, double g, MomentDelta& out);
    /// Stochastic increments for the given Wiener increments.
    void noise(const GaussianState& s, const NoiseIncrements& inc, MomentDelta& out);

    const ModelParams& params() const { return params_; }
    const Lattice& lattice() const { return lattice_; }

private:
    void hop(const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) const;
    template <bool TwoPhoton>
    void second_moment_rates(const GaussianState& s, double g, MomentDelta& out);

    ModelParams params_;
    Lattice lattice_;
    double hop_scale_;
    bool two_photon_;
    std::vector<Eigen::Index> nb_start_, nb_index_; // flattened neighbor lists

    Eigen::VectorXcd hop_alpha_, an_, cn_, y_;
    Eigen::VectorXd bn_, w_;
    Eigen::MatrixXcd hu_, hv_, p_, q_, wv_, wu_, uc_, m_, factor_;
};

MomentDelta drift(const GaussianState& s, const ModelParams& params, const Lattice& lattice, double g_t);
MomentDelta noise_terms(const GaussianState& s, const ModelParams& params, const NoiseIncrements& inc);

struct StepOutcome {
    bool diverged = false;
    double asymmetry = 0.0;
};

/// One explicit Euler-Maruyama step. Drift and noise are evaluated at the
/// start state; u and v are re-symmetrized afterwards.
class GtaStepper {
public:
    GtaStepper(const ModelParams& params, const Lattice& lattice, const StepConfig& cfg);

    StepOutcome step(GaussianState& s, double g_t, NoiseSource& noise);

private:
    GtaKernel kernel_;
    StepConfig cfg_;
    MomentDelta drift_, noise_;
    NoiseIncrements inc_;
};

StepOutcome em_step(GaussianState& s, const ModelParams& params, const Lattice& lattice,
                    const DriveProtocol& protocol, double t, const StepConfig& cfg, NoiseSource& noise);

/// Integrates one trajectory from the vacuum (or `initial` when given) up to
/// window.t_fin, sampling every window.t_sample. Identical seeds give
/// bit-identical records.
TrajectoryRecord run_trajectory(const ModelParams& params, const Lattice& lattice,
                                const DriveProtocol& protocol, const RunWindow& window,
                                const StepConfig& cfg, std::uint64_t seed,
                                const ObservableSelection& sel = {},
                                const GaussianState* initial = nullptr, bool keep_final_state = false);

/// Number of integer steps covering `span`; throws when span/dt is not an
/// integer within 1e-9 relative.
std::size_t steps_for(double span, double dt, const char* what);

} // namespace gtraj
