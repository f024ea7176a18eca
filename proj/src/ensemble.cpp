#include "gtraj/ensemble.hpp"

#include "gtraj/rng.hpp"
#include "gtraj/twa.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace gtraj {

std::string_view to_string(Method m)
{
    switch (m) {
    case Method::gta: return "gta";
    case Method::twa: return "twa";
    case Method::exact: return "exact";
    }
    return "unknown";
}

Method method_from_string(std::string_view name)
{
    if (name == "gta") return Method::gta;
    if (name == "twa") return Method::twa;
    if (name == "exact") return Method::exact;
    throw std::invalid_argument("unknown method '" + std::string(name) + "' (expected gta, twa or exact)");
}

void EnsembleConfig::validate() const
{
    if (n_traj < 1) throw std::invalid_argument("ensemble.n_traj must be >= 1");
    if (!(t_fin > 0.0)) throw std::invalid_argument("ensemble.t_fin must be > 0");
    if (!(t_relax >= 0.0 && t_relax < t_fin)) throw std::invalid_argument("ensemble.t_relax must satisfy 0 <= t_relax < t_fin");
    if (!(t_sample > 0.0)) throw std::invalid_argument("ensemble.t_sample must be > 0");
    if (workers < 1) throw std::invalid_argument("ensemble.workers must be >= 1");
}

double default_t_relax(const Lattice& lattice, double gamma)
{
    const double l = lattice.geometry == Geometry::square_periodic || lattice.geometry == Geometry::square_open
                         ? static_cast<double>(lattice.linear_size)
                         : std::sqrt(static_cast<double>(lattice.n_sites));
    return 20.0 / gamma * l / 6.0;
}

namespace {

std::size_t first_pooled(const TrajectoryRecord& r, double t_relax)
{
    const auto it = std::lower_bound(r.times.begin(), r.times.end(), t_relax - 1e-9);
    return static_cast<std::size_t>(it - r.times.begin());
}

Estimate mean_estimate(const std::vector<std::vector<double>>& sums, const std::vector<double>& counts)
{
    return jackknife(sums, counts, [](std::span<const double> m) { return m[0]; });
}

} // namespace

K0Occupation k0_occupation(const std::vector<TrajectoryRecord>& records, double t_relax, std::size_t n_sites)
{
    std::vector<std::vector<double>> sums;
    std::vector<double> counts;
    for (const auto& r : records) {
        if (r.diverged) continue;
        const std::size_t start = first_pooled(r, t_relax);
        if (start >= r.size()) continue;
        std::vector<double> s(2, 0.0);
        for (std::size_t i = start; i < r.size(); ++i) {
            s[0] += r.k0_num[i];
            s[1] += r.total_n[i];
        }
        sums.push_back(std::move(s));
        counts.push_back(static_cast<double>(r.size() - start));
    }
    if (sums.empty()) throw std::invalid_argument("k0_occupation: no samples after t_relax");

    K0Occupation k0;
    k0.numerator = jackknife(sums, counts, [](std::span<const double> m) { return m[0]; });
    k0.total_n = jackknife(sums, counts, [](std::span<const double> m) { return m[1]; });
    if (k0.total_n.value > 0.0) {
        const double n = static_cast<double>(n_sites);
        k0.normalized = jackknife(sums, counts, [n](std::span<const double> m) { return m[0] / (n * m[1]); });
        k0.printed = jackknife(sums, counts, [](std::span<const double> m) { return m[0] / (m[1] * m[1]); });
    }
    return k0;
}

EnsembleResult summarize(const EnsembleSpec& spec, std::vector<TrajectoryRecord> records)
{
    const double t_relax = spec.ensemble.t_relax;
    EnsembleResult res;
    EnsembleSummary& s = res.summary;
    s.method = spec.method;
    s.n_sites = spec.lattice.n_sites;
    s.lattice_size = spec.lattice.linear_size;
    s.g = spec.params.g_target;
    s.n_traj = records.size();

    std::vector<std::vector<double>> alpha_sums;
    std::vector<double> counts;
    std::vector<double> final_samples;
    std::vector<std::vector<double>> parity_sums;
    std::vector<double> parity_counts;
    const std::size_t n = spec.lattice.n_sites;
    // per trajectory: n_j (n), g2num_j (n), corr01 re, corr01 im
    std::vector<std::vector<double>> local_sums;

    for (const auto& r : records) {
        s.seeds.push_back(r.seed);
        s.max_asymmetry = std::max(s.max_asymmetry, r.max_asymmetry);
        if (r.diverged) {
            ++s.n_diverged;
            continue;
        }
        if (r.purity_drift_flag) ++s.purity_flags;
        if (r.final_min_symplectic) {
            s.min_final_symplectic = s.min_final_symplectic ? std::min(*s.min_final_symplectic, *r.final_min_symplectic)
                                                            : *r.final_min_symplectic;
        }
        const std::size_t start = first_pooled(r, t_relax);
        if (start >= r.size()) continue;
        ++s.n_valid;
        const std::size_t cnt = r.size() - start;
        s.samples_per_trajectory = cnt;

        res.pooled.add_group(std::span<const double>(r.alpha_bar).subspan(start));
        final_samples.push_back(r.alpha_bar.back());

        double sa = 0.0;
        for (std::size_t i = start; i < r.size(); ++i) sa += r.alpha_bar[i];
        alpha_sums.push_back({sa});
        counts.push_back(static_cast<double>(cnt));

        if (spec.observables.parity && !r.parity.empty()) {
            double sp = 0.0, np = 0.0;
            for (std::size_t i = start; i < r.size(); ++i) {
                if (std::isfinite(r.parity[i])) {
                    sp += r.parity[i];
                    np += 1.0;
                }
            }
            if (np > 0.0) {
                parity_sums.push_back({sp});
                parity_counts.push_back(np);
            }
        }
        if (spec.observables.local && !r.site_n.empty()) {
            std::vector<double> ls(2 * n + 2, 0.0);
            for (std::size_t i = start; i < r.size(); ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    ls[j] += r.site_n[i * n + j];
                    ls[n + j] += r.site_g2num[i * n + j];
                }
                ls[2 * n] += r.corr01[i].real();
                ls[2 * n + 1] += r.corr01[i].imag();
            }
            local_sums.push_back(std::move(ls));
        }
    }
    s.pooled_count = res.pooled.values.size();

    if (s.n_valid > 0) {
        s.alpha_bar = mean_estimate(alpha_sums, counts);
        s.k0 = k0_occupation(records, t_relax, n);
        if (res.pooled.values.size() >= 2) {
            s.binder = binder(res.pooled);
            s.histogram = histogram(res.pooled.values, spec.histogram_bins);
            s.modes = mode_count(res.pooled.values, static_cast<double>(s.n_valid));
        }
        if (final_samples.size() >= 2) s.binder_final = binder(std::span<const double>(final_samples));
        if (!parity_sums.empty()) s.parity = mean_estimate(parity_sums, parity_counts);
        if (!local_sums.empty()) {
            LocalSummary loc;
            for (std::size_t j = 0; j < n; ++j) {
                loc.n.push_back(jackknife(local_sums, counts, [j](std::span<const double> m) { return m[j]; }));
                if (loc.n.back().value > 0.0) {
                    loc.g2.push_back(jackknife(local_sums, counts, [j, n](std::span<const double> m) {
                        return m[n + j] / (m[j] * m[j]);
                    }));
                } else {
                    loc.g2.push_back(std::nullopt);
                }
            }
            if (n >= 2) {
                ComplexEstimate c;
                c.re = jackknife(local_sums, counts, [n](std::span<const double> m) { return m[2 * n]; });
                c.im = jackknife(local_sums, counts, [n](std::span<const double> m) { return m[2 * n + 1]; });
                loc.corr01 = c;
                if (loc.n[0].value > 0.0) {
                    ComplexEstimate g1;
                    g1.re = jackknife(local_sums, counts, [n](std::span<const double> m) { return m[2 * n] / m[0]; });
                    g1.im = jackknife(local_sums, counts, [n](std::span<const double> m) { return m[2 * n + 1] / m[0]; });
                    loc.g1_01 = g1;
                }
            }
            s.local = std::move(loc);
        }
    }

    res.records = std::move(records);
    return res;
}

EnsembleResult ensemble_run(const EnsembleSpec& spec)
{
    spec.params.validate();
    spec.protocol.validate();
    spec.step.validate();
    spec.ensemble.validate();
    if (spec.method == Method::exact) throw std::invalid_argument("ensemble_run: exact method has no trajectories");

    const std::size_t n_traj = spec.ensemble.n_traj;
    const RunWindow window{spec.ensemble.t_fin, spec.ensemble.t_sample};
    std::vector<TrajectoryRecord> records(n_traj);

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            if (failed.load() || (spec.cancel && spec.cancel->load())) return;
            const std::size_t idx = next.fetch_add(1);
            if (idx >= n_traj) return;
            try {
                const std::uint64_t seed = trajectory_seed(spec.ensemble.master_seed, idx);
                TrajectoryRecord rec =
                    spec.method == Method::gta
                        ? run_trajectory(spec.params, spec.lattice, spec.protocol, window, spec.step, seed,
                                         spec.observables, nullptr, spec.keep_final_states)
                        : run_twa_trajectory(spec.params, spec.lattice, spec.protocol, window, spec.step, seed,
                                             spec.observables);
                rec.index = idx;
                if (spec.on_record) spec.on_record(rec);
                records[idx] = std::move(rec);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };

    const std::size_t n_workers = std::min(spec.ensemble.workers, n_traj);
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
    if (spec.cancel && spec.cancel->load()) throw CancelledError("ensemble run cancelled");

    EnsembleResult res = summarize(spec, std::move(records));
    if (static_cast<double>(res.summary.n_diverged) > 0.01 * static_cast<double>(n_traj)) {
        std::ostringstream msg;
        msg << res.summary.n_diverged << " of " << n_traj << " trajectories diverged (limit 1%)";
        throw DivergenceError(msg.str(), std::move(res));
    }
    return res;
}

} // namespace gtraj
