#include "gtraj/lindblad.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace gtraj::detail {

// Approximate inverse of the Liouvillian. For up to two sites with a small
// per-site space it inverts the site-separable part (everything but the
// hopping) exactly: with the single-site superoperator S = Q T Q^* in Schur
// form, the dimer part is the Sylvester map R -> S R + R S^T on the density
// matrix regrouped by site, solved by back substitution. Otherwise the
// diagonal of the Liouvillian is used.
class LiouvillianPreconditioner {
public:
    static constexpr std::size_t max_schur_dim = 1100;
    // Inverting (S_sep - sigma) rather than S_sep keeps slow single-site
    // modes, which the hopping mixes away, from dominating the inverse.
    static constexpr double shift_per_gamma = 0.3;

    explicit LiouvillianPreconditioner(const OperatorSet& ops)
        : s_(static_cast<Eigen::Index>(ops.fock.n_max + 1)), n_sites_(ops.fock.n_sites),
          sigma_(shift_per_gamma * ops.params.gamma)
    {
        const std::size_t m = (ops.fock.n_max + 1) * (ops.fock.n_max + 1);
        separable_ = m <= max_schur_dim;
        if (separable_) {
            build_schur(ops);
        } else {
            build_diagonal(ops);
        }
    }

    Eigen::MatrixXcd apply(const Eigen::MatrixXcd& c) const
    {
        if (!separable_) return c.cwiseProduct(inv_diag_);
        const Eigen::Index m = s_ * s_;
        if (n_sites_ == 1) {
            const Eigen::VectorXcd f = q_.adjoint() * Eigen::Map<const Eigen::VectorXcd>(c.data(), m);
            const Eigen::VectorXcd x = q_ * shifted_back_substitution(f, 0.0);
            return Eigen::Map<const Eigen::MatrixXcd>(x.data(), s_, s_);
        }
        Eigen::MatrixXcd r(m, m);
        for (Eigen::Index n1 = 0; n1 < s_; ++n1)
            for (Eigen::Index m1 = 0; m1 < s_; ++m1)
                for (Eigen::Index n2 = 0; n2 < s_; ++n2)
                    for (Eigen::Index m2 = 0; m2 < s_; ++m2)
                        r(n1 + m1 * s_, n2 + m2 * s_) = c(n1 * s_ + n2, m1 * s_ + m2);
        const Eigen::MatrixXcd f = q_.adjoint() * r * q_.conjugate();
        // T Y + Y T^T = F, columns from the last: T^T is lower triangular
        Eigen::MatrixXcd y(m, m);
        for (Eigen::Index k = m - 1; k >= 0; --k) {
            Eigen::VectorXcd rhs = f.col(k);
            const Eigen::Index tail = m - 1 - k;
            if (tail > 0) rhs.noalias() -= y.rightCols(tail) * t_.row(k).tail(tail).transpose();
            y.col(k) = shifted_back_substitution(rhs, t_(k, k));
        }
        r.noalias() = q_ * y * q_.transpose();
        Eigen::MatrixXcd out(c.rows(), c.cols());
        for (Eigen::Index n1 = 0; n1 < s_; ++n1)
            for (Eigen::Index m1 = 0; m1 < s_; ++m1)
                for (Eigen::Index n2 = 0; n2 < s_; ++n2)
                    for (Eigen::Index m2 = 0; m2 < s_; ++m2)
                        out(n1 * s_ + n2, m1 * s_ + m2) = r(n1 + m1 * s_, n2 + m2 * s_);
        return out;
    }

private:
    void build_schur(const OperatorSet& ops)
    {
        const Lattice site = build_lattice(Geometry::single_site, 1);
        const OperatorSet one = build_operators(FockConfig{ops.fock.n_max, 1, ops.fock.max_dim}, ops.params, site);
        const Eigen::MatrixXcd h = Eigen::MatrixXcd(one.heff);
        const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(s_, s_);
        const Eigen::Index m = s_ * s_;
        // vec(A X B) = (B^T kron A) vec(X), column-major vec
        auto kron = [&](const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
            Eigen::MatrixXcd out(m, m);
            for (Eigen::Index i = 0; i < s_; ++i)
                for (Eigen::Index j = 0; j < s_; ++j) out.block(i * s_, j * s_, s_, s_) = x(i, j) * y;
            return out;
        };
        Eigen::MatrixXcd sup = cplx{0.0, -1.0} * kron(id, h) + cplx{0.0, 1.0} * kron(h.conjugate(), id);
        for (const auto& l : one.jumps) {
            const Eigen::MatrixXcd ld = Eigen::MatrixXcd(l);
            sup += kron(ld.conjugate(), ld);
        }
        const Eigen::ComplexSchur<Eigen::MatrixXcd> schur(sup);
        q_ = schur.matrixU();
        t_ = schur.matrixT();
        guard_ = 1e-9 * (1.0 + t_.diagonal().cwiseAbs().maxCoeff());
    }

    void build_diagonal(const OperatorSet& ops)
    {
        const auto d = static_cast<Eigen::Index>(ops.fock.dim());
        const Eigen::VectorXcd h = Eigen::VectorXcd(ops.heff.diagonal());
        inv_diag_.resize(d, d);
        for (Eigen::Index j = 0; j < d; ++j) {
            for (Eigen::Index i = 0; i < d; ++i) {
                const cplx diag = cplx{0.0, -1.0} * (h(i) - std::conj(h(j)));
                inv_diag_(i, j) = std::abs(diag) > 1e-12 ? 1.0 / diag : cplx{1.0, 0.0};
            }
        }
    }

    // solves (T + shift) x = f for the upper triangular T
    Eigen::VectorXcd shifted_back_substitution(Eigen::VectorXcd f, cplx shift) const
    {
        const Eigen::Index m = t_.rows();
        for (Eigen::Index j = m - 1; j >= 0; --j) {
            cplx denom = t_(j, j) + shift - sigma_;
            if (std::abs(denom) < guard_) denom = 1.0;
            f(j) /= denom;
            if (j > 0) f.head(j).noalias() -= f(j) * t_.col(j).head(j);
        }
        return f;
    }

    Eigen::Index s_;
    std::size_t n_sites_;
    double sigma_;
    bool separable_ = false;
    Eigen::MatrixXcd q_, t_;
    double guard_ = 0.0;
    Eigen::MatrixXcd inv_diag_;
};

// Matrix-free map y -> L[P y] + Tr(P y) |0><0| on vectorized density
// matrices, with P the preconditioner. Adding the trace term removes the
// zero mode, so the steady state solves a regular system with right-hand
// side |0><0|.
class AugmentedLiouvillian;

} // namespace gtraj::detail

namespace Eigen::internal {

template <>
struct traits<gtraj::detail::AugmentedLiouvillian> : public traits<SparseMatrix<std::complex<double>>> {};

} // namespace Eigen::internal

namespace gtraj::detail {

class AugmentedLiouvillian : public Eigen::EigenBase<AugmentedLiouvillian> {
public:
    using Scalar = cplx;
    using RealScalar = double;
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

    explicit AugmentedLiouvillian(const OperatorSet& ops)
        : ops_(ops), d_(static_cast<Eigen::Index>(ops.fock.dim())), heff_adj_(ops.heff.adjoint()), pre_(ops)
    {
        for (const auto& l : ops.jumps) jumps_adj_.emplace_back(l.adjoint());
    }

    Eigen::Index rows() const { return d_ * d_; }
    Eigen::Index cols() const { return d_ * d_; }

    template <typename Rhs>
    Eigen::Product<AugmentedLiouvillian, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const
    {
        return Eigen::Product<AugmentedLiouvillian, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
    }

    Eigen::MatrixXcd unprecondition(const Eigen::VectorXcd& y) const
    {
        return pre_.apply(Eigen::Map<const Eigen::MatrixXcd>(y.data(), d_, d_));
    }

    void apply(const Eigen::VectorXcd& y, Eigen::VectorXcd& out) const
    {
        const Eigen::MatrixXcd x = unprecondition(y);
        out.resize(d_ * d_);
        Eigen::Map<Eigen::MatrixXcd> o(out.data(), d_, d_);
        Eigen::MatrixXcd work = ops_.heff * x;
        o.noalias() = cplx{0.0, -1.0} * work;
        work.noalias() = x * heff_adj_;
        o.noalias() += cplx{0.0, 1.0} * work;
        for (std::size_t k = 0; k < ops_.jumps.size(); ++k) {
            work.noalias() = ops_.jumps[k] * x;
            o.noalias() += work * jumps_adj_[k];
        }
        o(0, 0) += x.trace();
    }

private:
    const OperatorSet& ops_;
    Eigen::Index d_;
    SparseOp heff_adj_;
    std::vector<SparseOp> jumps_adj_;
    LiouvillianPreconditioner pre_;
};

} // namespace gtraj::detail

namespace Eigen::internal {

template <typename Rhs>
struct generic_product_impl<gtraj::detail::AugmentedLiouvillian, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<gtraj::detail::AugmentedLiouvillian, Rhs,
                                generic_product_impl<gtraj::detail::AugmentedLiouvillian, Rhs>> {
    using Scalar = typename Product<gtraj::detail::AugmentedLiouvillian, Rhs>::Scalar;

    template <typename Dest>
    static void scaleAndAddTo(Dest& dst, const gtraj::detail::AugmentedLiouvillian& lhs, const Rhs& rhs,
                              const Scalar& alpha)
    {
        const Eigen::VectorXcd y = rhs;
        Eigen::VectorXcd out;
        lhs.apply(y, out);
        dst.noalias() += alpha * out;
    }
};

} // namespace Eigen::internal

namespace gtraj {

std::string_view to_string(SteadyStateMethod m)
{
    return m == SteadyStateMethod::krylov ? "krylov" : "integrate";
}

SteadyStateMethod steady_state_method_from_string(std::string_view name)
{
    if (name == "krylov") return SteadyStateMethod::krylov;
    if (name == "integrate") return SteadyStateMethod::integrate;
    throw std::invalid_argument("unknown steady-state solver '" + std::string(name) + "' (expected krylov or integrate)");
}

namespace {

constexpr cplx I{0.0, 1.0};

SparseOp identity_op(std::size_t d)
{
    SparseOp id(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    id.setIdentity();
    return id;
}

SparseOp single_mode_annihilation(std::size_t n_max)
{
    const auto d = static_cast<Eigen::Index>(n_max + 1);
    std::vector<Eigen::Triplet<cplx>> t;
    for (Eigen::Index n = 1; n < d; ++n) t.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
    SparseOp a(d, d);
    a.setFromTriplets(t.begin(), t.end());
    return a;
}

SparseOp kron(const SparseOp& x, const SparseOp& y)
{
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(static_cast<std::size_t>(x.nonZeros() * y.nonZeros()));
    for (Eigen::Index i = 0; i < x.outerSize(); ++i) {
        for (SparseOp::InnerIterator ix(x, i); ix; ++ix) {
            for (Eigen::Index k = 0; k < y.outerSize(); ++k) {
                for (SparseOp::InnerIterator iy(y, k); iy; ++iy) {
                    t.emplace_back(ix.row() * y.rows() + iy.row(), ix.col() * y.cols() + iy.col(),
                                   ix.value() * iy.value());
                }
            }
        }
    }
    SparseOp out(x.rows() * y.rows(), x.cols() * y.cols());
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

double norm_inf(const SparseOp& m)
{
    double best = 0.0;
    for (Eigen::Index i = 0; i < m.outerSize(); ++i) {
        double row = 0.0;
        for (SparseOp::InnerIterator it(m, i); it; ++it) row += std::abs(it.value());
        best = std::max(best, row);
    }
    return best;
}

double norm_1(const SparseOp& m)
{
    return norm_inf(SparseOp(m.adjoint()));
}

} // namespace

std::size_t FockConfig::dim() const
{
    std::size_t d = 1;
    for (std::size_t i = 0; i < n_sites; ++i) d *= n_max + 1;
    return d;
}

void FockConfig::validate() const
{
    if (n_sites < 1 || n_sites > 2) throw std::invalid_argument("exact solver supports 1 or 2 sites only");
    if (n_max < 2) throw std::invalid_argument("exact.n_max must be >= 2");
    if (dim() > max_dim) {
        std::ostringstream msg;
        msg << "Hilbert dimension " << dim() << " exceeds the cap " << max_dim;
        throw std::invalid_argument(msg.str());
    }
}

OperatorSet build_operators(const FockConfig& fock, const ModelParams& params, const Lattice& lattice)
{
    fock.validate();
    params.validate();
    if (lattice.n_sites != fock.n_sites) throw std::invalid_argument("lattice size does not match exact.n_sites");

    OperatorSet ops;
    ops.fock = fock;
    ops.params = params;
    const std::size_t d1 = fock.n_max + 1;
    const SparseOp a1 = single_mode_annihilation(fock.n_max);
    if (fock.n_sites == 1) {
        ops.a.push_back(a1);
    } else {
        ops.a.push_back(kron(a1, identity_op(d1)));
        ops.a.push_back(kron(identity_op(d1), a1));
    }

    const auto d = static_cast<Eigen::Index>(fock.dim());
    SparseOp h(d, d);
    for (const auto& a : ops.a) {
        const SparseOp ad = a.adjoint();
        const SparseOp ad2 = ad * ad;
        const SparseOp a2 = a * a;
        h += (-params.delta) * SparseOp(ad * a);
        h += (0.5 * params.u_kerr) * SparseOp(ad2 * a2);
        h += (0.5 * params.g_target) * SparseOp(ad2 + a2);
    }
    const double k = lattice.hop_scale(params.j_hop);
    for (auto [i, j] : lattice.bonds()) {
        const SparseOp hop_ij = SparseOp(ops.a[i].adjoint()) * ops.a[j];
        h -= k * SparseOp(hop_ij + SparseOp(hop_ij.adjoint()));
    }
    h.prune(cplx{0.0, 0.0});
    ops.hamiltonian = h;

    for (const auto& a : ops.a) ops.jumps.push_back(std::sqrt(params.gamma) * a);
    if (params.eta > 0.0) {
        for (const auto& a : ops.a) ops.jumps.push_back(std::sqrt(params.eta) * SparseOp(a * a));
    }

    SparseOp damp(d, d);
    for (const auto& l : ops.jumps) damp += SparseOp(SparseOp(l.adjoint()) * l);
    ops.heff = h - (0.5 * I) * damp;
    ops.heff.prune(cplx{0.0, 0.0});

    ops.site_occupation.assign(fock.n_sites, std::vector<std::size_t>(fock.dim()));
    for (std::size_t idx = 0; idx < fock.dim(); ++idx) {
        if (fock.n_sites == 1) {
            ops.site_occupation[0][idx] = idx;
        } else {
            ops.site_occupation[0][idx] = idx / d1;
            ops.site_occupation[1][idx] = idx % d1;
        }
    }
    return ops;
}

namespace {

// out = L[rho], using rho = rho^dag.
void rhs_into(const Eigen::MatrixXcd& rho, const OperatorSet& ops, Eigen::MatrixXcd& out,
              Eigen::MatrixXcd& work)
{
    work.noalias() = ops.heff * rho;
    work *= -I;
    out = work + work.adjoint();
    for (const auto& l : ops.jumps) {
        work.noalias() = l * rho;
        out.noalias() += l * work.adjoint();
    }
}

} // namespace

Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, const OperatorSet& ops)
{
    Eigen::MatrixXcd out, work;
    rhs_into(rho, ops, out, work);
    return out;
}

namespace {

double rk4_step_size(const OperatorSet& ops, const SteadyStateOptions& opts)
{
    if (opts.dt > 0.0) return opts.dt;
    double bound = 2.0 * norm_inf(ops.heff);
    for (const auto& l : ops.jumps) bound += norm_1(l) * norm_inf(l);
    return 2.0 / bound;
}

double residual_of(const Eigen::MatrixXcd& rho, const OperatorSet& ops)
{
    Eigen::MatrixXcd out, work;
    rhs_into(rho, ops, out, work);
    return out.cwiseAbs().maxCoeff();
}

void hermitize_normalize(Eigen::MatrixXcd& rho)
{
    Eigen::MatrixXcd h = 0.5 * (rho + rho.adjoint());
    rho = h / h.trace().real();
}

// Advances ss.rho until the residual drops below tol_ss.
void integrate_to_steady(SteadyState& ss, const OperatorSet& ops, const SteadyStateOptions& opts)
{
    const double dt = rk4_step_size(ops, opts);
    Eigen::MatrixXcd k1, k2, k3, k4, tmp, work;
    const auto max_steps = static_cast<std::size_t>(std::ceil(opts.t_max / dt));
    for (std::size_t step = 0;; ++step) {
        rhs_into(ss.rho, ops, k1, work);
        if (step % opts.check_every == 0) {
            ss.residual = k1.cwiseAbs().maxCoeff();
            if (ss.residual < opts.tol_ss) break;
            if (step >= max_steps) {
                std::ostringstream msg;
                msg << "steady state not reached by t = " << ss.t << " (residual " << ss.residual << ")";
                throw NonConvergenceError(msg.str());
            }
        }
        tmp = ss.rho + (0.5 * dt) * k1;
        rhs_into(tmp, ops, k2, work);
        tmp = ss.rho + (0.5 * dt) * k2;
        rhs_into(tmp, ops, k3, work);
        tmp = ss.rho + dt * k3;
        rhs_into(tmp, ops, k4, work);
        ss.rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        tmp = 0.5 * (ss.rho + ss.rho.adjoint());
        ss.rho = tmp;
        ss.t += dt;
        ++ss.steps;
    }
}

} // namespace

SteadyState steady_state(const OperatorSet& ops, const SteadyStateOptions& opts)
{
    const auto d = static_cast<Eigen::Index>(ops.fock.dim());
    SteadyState ss;
    ss.rho = Eigen::MatrixXcd::Zero(d, d);
    ss.rho(0, 0) = 1.0;

    bool done = false;
    if (opts.method == SteadyStateMethod::krylov) {
        const detail::AugmentedLiouvillian op(ops);
        Eigen::VectorXcd b = Eigen::VectorXcd::Zero(d * d);
        b(0) = 1.0;
        Eigen::BiCGSTAB<detail::AugmentedLiouvillian, Eigen::IdentityPreconditioner> solver;
        solver.setMaxIterations(static_cast<Eigen::Index>(opts.max_iterations));
        solver.setTolerance(0.1 * opts.tol_ss);
        solver.compute(op);
        const Eigen::VectorXcd y = solver.solve(b);
        ss.iterations = static_cast<std::size_t>(solver.iterations());
        Eigen::MatrixXcd rho = op.unprecondition(y);
        if (rho.allFinite() && std::abs(rho.trace()) > 0.0) {
            hermitize_normalize(rho);
            ss.rho = rho;
            ss.residual = residual_of(ss.rho, ops);
            done = ss.residual < opts.tol_ss;
        }
    }
    if (!done) integrate_to_steady(ss, ops, opts);

    for (std::size_t j = 0; j < ops.fock.n_sites; ++j) {
        double top = 0.0;
        for (Eigen::Index idx = 0; idx < d; ++idx) {
            if (ops.site_occupation[j][static_cast<std::size_t>(idx)] == ops.fock.n_max) top += ss.rho(idx, idx).real();
        }
        ss.top_population = std::max(ss.top_population, top);
    }
    ss.truncation_warning = ss.top_population > 1e-6;
    return ss;
}

std::optional<cplx> ExactObservables::g1(std::size_t j, std::size_t jp) const
{
    const auto jj = static_cast<Eigen::Index>(j);
    if (!(n(jj) > 0.0)) return std::nullopt;
    return corr(jj, static_cast<Eigen::Index>(jp)) / n(jj);
}

ExactObservables exact_observables(const Eigen::MatrixXcd& rho, const OperatorSet& ops)
{
    const auto ns = static_cast<Eigen::Index>(ops.fock.n_sites);
    const auto d = rho.rows();
    ExactObservables out;
    out.n.resize(ns);
    out.alpha.resize(ns);
    out.corr.resize(ns, ns);
    out.g2.resize(static_cast<std::size_t>(ns));

    auto expect = [&](const SparseOp& op) {
        // Tr(rho op) = sum_ij rho_ji op_ij
        cplx acc{};
        for (Eigen::Index i = 0; i < op.outerSize(); ++i)
            for (SparseOp::InnerIterator it(op, i); it; ++it) acc += rho(it.col(), it.row()) * it.value();
        return acc;
    };

    for (Eigen::Index j = 0; j < ns; ++j) {
        const auto& aj = ops.a[static_cast<std::size_t>(j)];
        const SparseOp ad = aj.adjoint();
        out.alpha(j) = expect(aj);
        for (Eigen::Index jp = 0; jp < ns; ++jp) out.corr(j, jp) = expect(SparseOp(ad * ops.a[static_cast<std::size_t>(jp)]));
        out.n(j) = out.corr(j, j).real();
        const double g2num = expect(SparseOp(SparseOp(ad * ad) * SparseOp(aj * aj))).real();
        if (out.n(j) > 0.0) out.g2[static_cast<std::size_t>(j)] = g2num / (out.n(j) * out.n(j));
    }

    double par = 0.0;
    for (Eigen::Index idx = 0; idx < d; ++idx) {
        std::size_t total = 0;
        for (Eigen::Index j = 0; j < ns; ++j) total += ops.site_occupation[static_cast<std::size_t>(j)][static_cast<std::size_t>(idx)];
        par += (total % 2 == 0 ? 1.0 : -1.0) * rho(idx, idx).real();
    }
    out.parity = par;

    const double total_n = out.n.sum();
    if (total_n > 0.0) {
        const double num = out.corr.sum().real();
        out.n_k0_normalized = num / (static_cast<double>(ns) * total_n);
        out.n_k0_printed = num / (total_n * total_n);
    }
    return out;
}

namespace {

double rel_change(double a, double b)
{
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

double max_rel_change(const ExactObservables& x, const ExactObservables& y)
{
    double worst = 0.0;
    for (Eigen::Index j = 0; j < x.n.size(); ++j) {
        worst = std::max(worst, rel_change(x.n(j), y.n(j)));
        const auto& gx = x.g2[static_cast<std::size_t>(j)];
        const auto& gy = y.g2[static_cast<std::size_t>(j)];
        if (gx && gy) worst = std::max(worst, rel_change(*gx, *gy));
    }
    if (x.n.size() >= 2) {
        const auto gx = x.g1(0, 1), gy = y.g1(0, 1);
        if (gx && gy) {
            const double scale = std::max(std::abs(*gx), std::abs(*gy));
            if (scale > 0.0) worst = std::max(worst, std::abs(*gx - *gy) / scale);
        }
    }
    return worst;
}

} // namespace

ConvergedSteadyState converged_steady_state(const ModelParams& params, const Lattice& lattice,
                                            std::size_t n_max_start, std::size_t step, double rel_tol,
                                            std::size_t max_dim, const SteadyStateOptions& opts)
{
    auto solve = [&](std::size_t n_max) {
        FockConfig fc{n_max, lattice.n_sites, max_dim};
        const OperatorSet ops = build_operators(fc, params, lattice);
        SteadyState ss = steady_state(ops, opts);
        ExactObservables obs = exact_observables(ss.rho, ops);
        return std::pair{std::move(ss), std::move(obs)};
    };

    std::size_t n_max = n_max_start;
    auto prev = solve(n_max);
    for (;;) {
        const std::size_t next = n_max + step;
        FockConfig probe{next, lattice.n_sites, max_dim};
        if (probe.dim() > max_dim) {
            std::ostringstream msg;
            msg << "cutoff not converged at n_max = " << n_max << " before reaching the dimension cap " << max_dim;
            throw TruncationError(msg.str());
        }
        auto cur = solve(next);
        const double change = max_rel_change(prev.second, cur.second);
        if (change < rel_tol) {
            return ConvergedSteadyState{next, std::move(cur.first), std::move(cur.second), change};
        }
        n_max = next;
        prev = std::move(cur);
    }
}

} // namespace gtraj
