#include "gtraj/twa.hpp"

#include <cmath>
#include <stdexcept>

namespace gtraj {

namespace {
constexpr cplx I{0.0, 1.0};
}

WignerField sample_vacuum_field(std::size_t n_sites, NoiseSource& noise)
{
    WignerField f;
    f.alpha_w.resize(static_cast<Eigen::Index>(n_sites));
    for (Eigen::Index i = 0; i < f.alpha_w.size(); ++i) {
        const double x = noise.normal();
        const double p = noise.normal();
        f.alpha_w(i) = 0.5 * cplx(x, p);
    }
    return f;
}

Eigen::VectorXcd twa_drift(const WignerField& f, const ModelParams& p, const Lattice& lattice, double g_t)
{
    const Eigen::Index n = f.alpha_w.size();
    const cplx lin = -0.5 * p.gamma + I * p.delta;
    const cplx nl = p.eta + I * p.u_kerr;
    const double k = lattice.hop_scale(p.j_hop);
    Eigen::VectorXcd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const cplx a = f.alpha_w(i);
        cplx h{};
        for (std::size_t nb : lattice.neighbors[static_cast<std::size_t>(i)]) h += f.alpha_w(static_cast<Eigen::Index>(nb));
        out(i) = lin * a + I * k * h - nl * (std::norm(a) - 1.0) * a - I * g_t * std::conj(a);
    }
    return out;
}

bool twa_step(WignerField& f, const ModelParams& p, const Lattice& lattice, double g_t,
              const StepConfig& cfg, NoiseSource& noise)
{
    const Eigen::VectorXcd d = twa_drift(f, p, lattice, g_t);
    for (Eigen::Index i = 0; i < f.alpha_w.size(); ++i) {
        const double amp = std::sqrt(0.5 * p.gamma + 2.0 * p.eta * std::norm(f.alpha_w(i)));
        f.alpha_w(i) += cfg.dt * d(i) + amp * noise.wiener(cfg.dt);
    }
    return !f.alpha_w.allFinite() || f.alpha_w.cwiseAbs().maxCoeff() > cfg.blowup_threshold;
}

std::optional<cplx> TwaObservables::g1(std::size_t j, std::size_t jp) const
{
    const auto jj = static_cast<Eigen::Index>(j);
    if (!(n(jj) > 0.0)) return std::nullopt;
    return corr(jj, static_cast<Eigen::Index>(jp)) / n(jj);
}

TwaObservables twa_observables(std::span<const WignerField> ensemble)
{
    if (ensemble.size() < 2) throw std::invalid_argument("twa_observables: need at least 2 ensemble members");
    const Eigen::Index n = ensemble.front().alpha_w.size();
    const double count = static_cast<double>(ensemble.size());

    Eigen::MatrixXcd sym = Eigen::MatrixXcd::Zero(n, n); // <alpha_j^* alpha_j'>_s
    Eigen::VectorXd fourth = Eigen::VectorXd::Zero(n);   // <|alpha_j|^4>_s
    for (const auto& f : ensemble) {
        if (f.alpha_w.size() != n) throw std::invalid_argument("twa_observables: inconsistent field sizes");
        sym.noalias() += f.alpha_w.conjugate() * f.alpha_w.transpose();
        for (Eigen::Index j = 0; j < n; ++j) fourth(j) += std::norm(f.alpha_w(j)) * std::norm(f.alpha_w(j));
    }
    sym /= count;
    fourth /= count;

    TwaObservables out;
    out.corr = sym;
    out.n.resize(n);
    out.g2.resize(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        const double s2 = sym(j, j).real();
        const double nj = s2 - 0.5;
        out.n(j) = nj;
        out.corr(j, j) = nj;
        if (nj > 0.0) out.g2[static_cast<std::size_t>(j)] = (fourth(j) - 2.0 * s2 + 0.5) / (nj * nj);
    }
    return out;
}

TrajectoryRecord run_twa_trajectory(const ModelParams& params, const Lattice& lattice,
                                    const DriveProtocol& protocol, const RunWindow& window,
                                    const StepConfig& cfg, std::uint64_t seed,
                                    const ObservableSelection& sel)
{
    params.validate();
    cfg.validate();
    const std::size_t n_steps = steps_for(window.t_fin, cfg.dt, "t_fin");
    const std::size_t stride = steps_for(window.t_sample, cfg.dt, "t_sample");
    if (stride == 0) throw std::invalid_argument("t_sample must be > 0");

    TrajectoryRecord rec;
    rec.seed = seed;
    rec.n_sites = lattice.n_sites;
    ObservableSelection twa_sel = sel;
    twa_sel.parity = false; // not defined for a single Wigner sample

    NoiseSource noise(seed);
    WignerField f = sample_vacuum_field(lattice.n_sites, noise);
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        const bool div = twa_step(f, params, lattice, drive_amplitude(protocol, t), cfg, noise);
        const double t_next = static_cast<double>(k + 1) * cfg.dt;
        if (div) {
            rec.diverged = true;
            rec.diverged_at = t_next;
            break;
        }
        if ((k + 1) % stride == 0) record_wigner_sample(rec, t_next, f.alpha_w, twa_sel);
    }
    return rec;
}

} // namespace gtraj
