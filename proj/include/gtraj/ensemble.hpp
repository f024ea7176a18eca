// ensemble.hpp - Parallel trajectory ensembles and their pooled statistics.
#pragma once

#include "gtraj/analysis.hpp"
#include "gtraj/gta.hpp"
#include "gtraj/model.hpp"
#include "gtraj/observables.hpp"

#include <atomic>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace gtraj {

enum class Method { gta, twa, exact };

std::string_view to_string(Method m);
Method method_from_string(std::string_view name);

struct EnsembleConfig {
    std::size_t n_traj = 100;
    double t_fin = 100.0;
    double t_relax = 20.0;
    double t_sample = 0.1;
    std::uint64_t master_seed = 1;
    std::size_t workers = 1;

    void validate() const;
};

/// Default equilibration time: 20 / gamma scaled linearly with L / 6.
double default_t_relax(const Lattice& lattice, double gamma);

struct EnsembleSpec {
    Method method = Method::gta;
    ModelParams params;
    Lattice lattice;
    DriveProtocol protocol;
    StepConfig step;
    EnsembleConfig ensemble;
    ObservableSelection observables;
    std::size_t histogram_bins = 61;
    bool keep_final_states = false;

    /// Called from worker threads as each trajectory completes.
    std::function<void(const TrajectoryRecord&)> on_record;
    /// When set and raised, workers stop picking up new trajectories.
    const std::atomic<bool>* cancel = nullptr;
};

struct ComplexEstimate {
    Estimate re;
    Estimate im;
};

struct LocalSummary {
    std::vector<Estimate> n;
    std::vector<std::optional<Estimate>> g2;
    std::optional<ComplexEstimate> corr01; // <a_0^dag a_1>
    std::optional<ComplexEstimate> g1_01;  // <a_0^dag a_1> / n_0
};

struct K0Occupation {
    std::optional<Estimate> normalized; // Num / (N <sum_j n_j>)
    std::optional<Estimate> printed;    // Num / <sum_j n_j>^2
    Estimate numerator;
    Estimate total_n;
};

struct EnsembleSummary {
    Method method = Method::gta;
    std::size_t n_sites = 0;
    std::size_t lattice_size = 0;
    double g = 0.0;

    std::size_t n_traj = 0;
    std::size_t n_valid = 0;
    std::size_t n_diverged = 0;
    std::vector<std::uint64_t> seeds;
    std::size_t samples_per_trajectory = 0;
    std::size_t pooled_count = 0;

    Estimate alpha_bar;         // ensemble mean of the order parameter
    BinderResult binder;        // pooled over trajectories and time
    BinderResult binder_final;  // one late-time sample per trajectory
    Histogram histogram;
    int modes = 0;

    K0Occupation k0;
    std::optional<Estimate> parity;
    std::optional<LocalSummary> local;

    std::size_t purity_flags = 0;
    double max_asymmetry = 0.0;
    std::optional<double> min_final_symplectic;
};

struct EnsembleResult {
    EnsembleSummary summary;
    std::vector<TrajectoryRecord> records; // ordered by trajectory index
    PooledSamples pooled;                  // order parameter for t >= t_relax
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, EnsembleResult partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const EnsembleResult& partial() const { return partial_; }

private:
    EnsembleResult partial_;
};

class CancelledError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs spec.ensemble.n_traj trajectories on spec.ensemble.workers threads
/// and reduces them in index order, so the summary does not depend on the
/// worker count. Throws DivergenceError when more than 1% diverge.
EnsembleResult ensemble_run(const EnsembleSpec& spec);

/// Reduces already computed records (ordered by index).
EnsembleResult summarize(const EnsembleSpec& spec, std::vector<TrajectoryRecord> records);

/// k = 0 occupation from the samples with t >= t_relax, jackknifed over
/// trajectories.
K0Occupation k0_occupation(const std::vector<TrajectoryRecord>& records, double t_relax, std::size_t n_sites);

} // namespace gtraj
