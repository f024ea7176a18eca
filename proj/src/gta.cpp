#include "gtraj/gta.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gtraj {

namespace {
constexpr cplx I{0.0, 1.0};
}

void StepConfig::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step.dt must be > 0");
    if (!(blowup_threshold > 0.0)) throw std::invalid_argument("step.blowup_threshold must be > 0");
    if (!(tol_phys > 0.0)) throw std::invalid_argument("step.tol_phys must be > 0");
}

double recommended_dt(const ModelParams& p)
{
    const double scale = std::max({std::abs(p.delta), std::abs(p.u_kerr), std::abs(p.j_hop),
                                   std::abs(p.g_target), p.gamma});
    return 0.01 / scale;
}

std::size_t steps_for(double span, double dt, const char* what)
{
    const double ratio = span / dt;
    const double rounded = std::round(ratio);
    if (rounded < 0.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        throw std::invalid_argument(std::string(what) + " must be an integer multiple of step.dt");
    }
    return static_cast<std::size_t>(rounded);
}

NoiseIncrements draw_increments(NoiseSource& noise, std::size_t n_sites, double dt, bool two_photon)
{
    NoiseIncrements inc;
    const auto n = static_cast<Eigen::Index>(n_sites);
    inc.dz1.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) inc.dz1(i) = noise.wiener(dt);
    if (two_photon) {
        inc.dz2.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) inc.dz2(i) = noise.wiener(dt);
    }
    return inc;
}

GtaKernel::GtaKernel(const ModelParams& params, const Lattice& lattice)
    : params_(params), lattice_(lattice), hop_scale_(lattice.hop_scale(params.j_hop)),
      two_photon_(params.eta > 0.0)
{
    params_.validate();
    const auto n = static_cast<Eigen::Index>(lattice.n_sites);
    hop_alpha_.resize(n);
    an_.resize(n);
    cn_.resize(n);
    y_.resize(n);
    bn_.resize(n);
    w_.resize(n);
    for (auto* m : {&hu_, &hv_, &p_, &q_, &wv_, &wu_, &uc_, &m_}) m->resize(n, n);
    factor_.resize(n, 2 * n);

    nb_start_.push_back(0);
    for (const auto& nbs : lattice.neighbors) {
        for (std::size_t nb : nbs) nb_index_.push_back(static_cast<Eigen::Index>(nb));
        nb_start_.push_back(static_cast<Eigen::Index>(nb_index_.size()));
    }
}

// out(n, m) = sum over neighbors n' of n of x(n', m)
void GtaKernel::hop(const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) const
{
    const Eigen::Index n = x.rows();
    for (Eigen::Index m = 0; m < n; ++m) {
        const cplx* col = x.col(m).data();
        cplx* dst = out.col(m).data();
        for (Eigen::Index k = 0; k < n; ++k) {
            cplx acc{};
            for (Eigen::Index j = nb_start_[k]; j < nb_start_[k + 1]; ++j) acc += col[nb_index_[j]];
            dst[k] = acc;
        }
    }
}

void GtaKernel::drift(const GaussianState& s, double g, MomentDelta& out)
{
    const Eigen::Index n = s.alpha.size();
    const double gamma = params_.gamma, eta = params_.eta, uk = params_.u_kerr;
    const cplx nl = eta + I * uk; // (eta + iU)
    const cplx lin_a = -0.5 * gamma + I * params_.delta;
    const double k = hop_scale_;
    const auto& a = s.alpha;
    const auto& u = s.u;
    const auto& v = s.v;

    out.alpha.resize(n);
    out.u.resize(n, n);
    out.v.resize(n, n);

    for (Eigen::Index i = 0; i < n; ++i) {
        an_(i) = a(i) * a(i) + u(i, i);
        cn_(i) = std::conj(an_(i));
        bn_(i) = std::norm(a(i)) + v(i, i).real();
        cplx h{};
        for (std::size_t nb : lattice_.neighbors[static_cast<std::size_t>(i)]) h += a(static_cast<Eigen::Index>(nb));
        hop_alpha_(i) = h;
    }

    // first moments
    for (Eigen::Index i = 0; i < n; ++i) {
        const cplx ai = a(i);
        out.alpha(i) = lin_a * ai + I * k * hop_alpha_(i) -
                       nl * (std::norm(ai) * ai + 2.0 * ai * v(i, i) + std::conj(ai) * u(i, i)) -
                       I * g * std::conj(ai);
    }

    if (two_photon_) {
        second_moment_rates<true>(s, g, out);
    } else {
        second_moment_rates<false>(s, g, out);
    }
}

template <bool TwoPhoton>
void GtaKernel::second_moment_rates(const GaussianState& s, double g, MomentDelta& out)
{
    const Eigen::Index n = s.alpha.size();
    const double gamma = params_.gamma, eta = params_.eta, uk = params_.u_kerr;
    const cplx nl = eta + I * uk;
    const cplx lin_u = -gamma + 2.0 * I * params_.delta;
    const double k = hop_scale_;
    const auto& a = s.alpha;
    const auto& u = s.u;
    const auto& v = s.v;

    // hopping
    const bool hopping = k != 0.0;
    if (hopping) {
        hop(u, hu_);
        hop(v, hv_);
    }

    // dissipative backaction: sum_i w_i (...), w_i = gamma + 4 eta |alpha_i|^2.
    // p = u W v; the Hermitian q = v W v + u^* W u is a rank update with
    // factor [v, u^*] W^(1/2), of which only the upper triangle is formed.
    if constexpr (TwoPhoton) {
        for (Eigen::Index i = 0; i < n; ++i) w_(i) = gamma + 4.0 * eta * std::norm(a(i));
        wv_.noalias() = w_.asDiagonal() * v;
        p_.noalias() = u * wv_;
        for (Eigen::Index i = 0; i < n; ++i) w_(i) = std::sqrt(w_(i));
        factor_.leftCols(n).noalias() = v * w_.asDiagonal();
        factor_.rightCols(n).noalias() = u.conjugate() * w_.asDiagonal();
        q_.setZero();
        q_.selfadjointView<Eigen::Upper>().rankUpdate(factor_);
    } else {
        p_.noalias() = u * v;
        p_ *= gamma;
        factor_.leftCols(n) = v;
        factor_.rightCols(n) = u.conjugate();
        q_.setZero();
        q_.selfadjointView<Eigen::Upper>().rankUpdate(factor_, gamma);
    }

    // du is symmetric and dv Hermitian, so only i <= m is evaluated
    for (Eigen::Index m = 0; m < n; ++m) {
        for (Eigen::Index i = 0; i <= m; ++i) {
            const cplx unm = u(i, m), vnm = v(i, m), vmn = v(m, i);
            const double delta_nm = i == m ? 1.0 : 0.0;

            cplx du = lin_u * unm - I * g * (vnm + vmn + delta_nm) -
                      nl * (vnm * an_(i) + vmn * an_(m) + 2.0 * unm * (bn_(i) + bn_(m)) + delta_nm * an_(i)) -
                      (p_(m, i) + p_(i, m));

            const cplx ucnm = std::conj(unm);
            cplx dv = I * uk * (2.0 * vnm * (bn_(i) - bn_(m)) + unm * cn_(i) - ucnm * an_(m)) +
                      I * g * (unm - ucnm) - gamma * vnm - q_(i, m);
            if constexpr (TwoPhoton) dv -= eta * (2.0 * vnm * (bn_(i) + bn_(m)) + unm * cn_(i) + ucnm * an_(m));

            if (hopping) {
                du += I * k * (hu_(i, m) + hu_(m, i));
                dv -= I * k * (hv_(i, m) - std::conj(hv_(m, i)));
            }
            out.u(i, m) = du;
            out.u(m, i) = du;
            if (i == m) {
                out.v(i, i) = dv.real();
            } else {
                out.v(i, m) = dv;
                out.v(m, i) = std::conj(dv);
            }
        }
    }
}

void GtaKernel::noise(const GaussianState& s, const NoiseIncrements& inc, MomentDelta& out)
{
    const Eigen::Index n = s.alpha.size();
    const auto& a = s.alpha;
    const auto& u = s.u;
    const auto& v = s.v;
    out.alpha.resize(n);
    out.u.resize(n, n);
    out.v.resize(n, n);

    // sqrt(gamma) sum_i (v_in dZ1_i + u_in dZ1_i^*)
    y_ = inc.dz1.conjugate();
    out.alpha.noalias() = v.transpose() * inc.dz1;
    out.alpha.noalias() += u.transpose() * y_;
    out.alpha *= std::sqrt(params_.gamma);

    if (!two_photon_) {
        out.u.setZero();
        out.v.setZero();
        return;
    }

    const double s2 = 2.0 * std::sqrt(params_.eta);
    const auto& z = inc.dz2;

    // 2 sqrt(eta) sum_i (alpha_i^* v_in dZ2_i + alpha_i u_in dZ2_i^*)
    y_ = a.conjugate().cwiseProduct(z);
    out.alpha.noalias() += s2 * (v.transpose() * y_);
    y_ = a.cwiseProduct(z.conjugate());
    out.alpha.noalias() += s2 * (u.transpose() * y_);

    // du: 2 sqrt(eta) sum_i (v_in v_im dZ2_i + u_in u_im dZ2_i^*)
    wv_.noalias() = z.asDiagonal() * v;
    wu_.noalias() = z.conjugate().asDiagonal() * u;
    out.u.noalias() = v.transpose() * wv_;
    out.u.noalias() += u.transpose() * wu_;
    out.u *= s2;

    // dv: 2 sqrt(eta) sum_i (u_ni^* v_mi^* dZ2_i + v_ni u_im dZ2_i^*).
    // With u symmetric and v Hermitian the second sum is the adjoint of the first.
    uc_ = u.conjugate();
    m_.noalias() = uc_ * wv_;
    out.v = m_ + m_.adjoint();
    out.v *= s2;
}

MomentDelta drift(const GaussianState& s, const ModelParams& params, const Lattice& lattice, double g_t)
{
    GtaKernel kernel(params, lattice);
    MomentDelta out;
    kernel.drift(s, g_t, out);
    return out;
}

MomentDelta noise_terms(const GaussianState& s, const ModelParams& params, const NoiseIncrements& inc)
{
    Lattice lat;
    lat.n_sites = s.n_sites();
    lat.neighbors.assign(lat.n_sites, {});
    GtaKernel kernel(params, lat);
    MomentDelta out;
    kernel.noise(s, inc, out);
    return out;
}

GtaStepper::GtaStepper(const ModelParams& params, const Lattice& lattice, const StepConfig& cfg)
    : kernel_(params, lattice), cfg_(cfg)
{
    cfg_.validate();
    const auto n = static_cast<Eigen::Index>(lattice.n_sites);
    inc_.dz1.resize(n);
    if (params.eta > 0.0) inc_.dz2.resize(n);
}

StepOutcome GtaStepper::step(GaussianState& s, double g_t, NoiseSource& noise)
{
    const double dt = cfg_.dt;
    kernel_.drift(s, g_t, drift_);

    for (Eigen::Index i = 0; i < inc_.dz1.size(); ++i) inc_.dz1(i) = noise.wiener(dt);
    for (Eigen::Index i = 0; i < inc_.dz2.size(); ++i) inc_.dz2(i) = noise.wiener(dt);
    kernel_.noise(s, inc_, noise_);

    s.alpha += dt * drift_.alpha + noise_.alpha;
    if (inc_.dz2.size() > 0) {
        s.u += dt * drift_.u + noise_.u;
        s.v += dt * drift_.v + noise_.v;
    } else {
        s.u += dt * drift_.u;
        s.v += dt * drift_.v;
    }

    StepOutcome out;
    out.asymmetry = enforce_structure(s);
    const double cap = cfg_.blowup_threshold;
    if (!all_finite(s) || s.alpha.cwiseAbs().maxCoeff() > cap || s.v.diagonal().real().maxCoeff() > cap * cap) {
        out.diverged = true;
    }
    return out;
}

StepOutcome em_step(GaussianState& s, const ModelParams& params, const Lattice& lattice,
                    const DriveProtocol& protocol, double t, const StepConfig& cfg, NoiseSource& noise)
{
    GtaStepper stepper(params, lattice, cfg);
    return stepper.step(s, drive_amplitude(protocol, t), noise);
}

TrajectoryRecord run_trajectory(const ModelParams& params, const Lattice& lattice,
                                const DriveProtocol& protocol, const RunWindow& window,
                                const StepConfig& cfg, std::uint64_t seed,
                                const ObservableSelection& sel, const GaussianState* initial,
                                bool keep_final_state)
{
    const std::size_t n_steps = steps_for(window.t_fin, cfg.dt, "t_fin");
    const std::size_t stride = steps_for(window.t_sample, cfg.dt, "t_sample");
    if (stride == 0) throw std::invalid_argument("t_sample must be > 0");

    TrajectoryRecord rec;
    rec.seed = seed;
    rec.n_sites = lattice.n_sites;
    const std::size_t n_samples = n_steps / stride;
    rec.times.reserve(n_samples);
    rec.alpha_bar.reserve(n_samples);
    rec.total_n.reserve(n_samples);
    rec.k0_num.reserve(n_samples);

    GaussianState s = initial ? *initial : vacuum(lattice.n_sites);
    if (s.n_sites() != lattice.n_sites) throw std::invalid_argument("initial state size does not match lattice");
    NoiseSource noise(seed);
    GtaStepper stepper(params, lattice, cfg);

    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        const StepOutcome o = stepper.step(s, drive_amplitude(protocol, t), noise);
        rec.max_asymmetry = std::max(rec.max_asymmetry, o.asymmetry);
        const double t_next = static_cast<double>(k + 1) * cfg.dt;
        if (o.diverged) {
            rec.diverged = true;
            rec.diverged_at = t_next;
            break;
        }
        if ((k + 1) % stride == 0) record_gaussian_sample(rec, t_next, s, sel);
    }

    if (!rec.diverged) {
        const PhysicalityReport rep = physicality_check(s, cfg.tol_phys);
        rec.final_min_symplectic = rep.min_symplectic;
        if (window.t_fin > 0.0)
            rec.purity_drift_flag = std::abs(rep.min_symplectic - 0.5) / window.t_fin > cfg.tol_phys;
    }
    if (keep_final_state) rec.final_state = std::move(s);
    return rec;
}

} // namespace gtraj
