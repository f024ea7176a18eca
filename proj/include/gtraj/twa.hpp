// twa.hpp - Truncated Wigner baseline for the same lattice model.
#pragma once

#include "gtraj/gta.hpp"
#include "gtraj/model.hpp"
#include "gtraj/observables.hpp"
#include "gtraj/rng.hpp"

#include <optional>
#include <span>
#include <vector>

namespace gtraj {

/// Symmetric-ordered fields alpha_w, one per site.
struct WignerField {
    Eigen::VectorXcd alpha_w;
};

/// Vacuum Wigner sample: complex Gaussian with <|alpha|^2> = 1/2 per site.
WignerField sample_vacuum_field(std::size_t n_sites, NoiseSource& noise);

/// Deterministic part of the Langevin equation for every site.
Eigen::VectorXcd twa_drift(const WignerField& f, const ModelParams& params, const Lattice& lattice, double g_t);

/// Euler-Maruyama step with per-site noise amplitude sqrt(gamma/2 + 2 eta |alpha|^2).
/// Returns true when the field diverged (non-finite or beyond the blow-up cap).
bool twa_step(WignerField& f, const ModelParams& params, const Lattice& lattice, double g_t,
              const StepConfig& cfg, NoiseSource& noise);

/// Normal-ordered observables reconstructed from a symmetric-ordered ensemble.
struct TwaObservables {
    Eigen::VectorXd n;                   // <|a|^2>_s - 1/2
    std::vector<std::optional<double>> g2; // undefined where n <= 0
    Eigen::MatrixXcd corr;               // <a_j^dag a_j'>, diagonal holds n_j
    /// g1_{jj'} = corr(j, j') / n_j, nullopt when n_j <= 0.
    std::optional<cplx> g1(std::size_t j, std::size_t jp) const;
};

TwaObservables twa_observables(std::span<const WignerField> ensemble);

/// TWA counterpart of run_trajectory: starts from a vacuum Wigner sample
/// drawn from the same stream.
TrajectoryRecord run_twa_trajectory(const ModelParams& params, const Lattice& lattice,
                                    const DriveProtocol& protocol, const RunWindow& window,
                                    const StepConfig& cfg, std::uint64_t seed,
                                    const ObservableSelection& sel = {});

} // namespace gtraj
