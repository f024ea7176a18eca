#include "gtraj/observables.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace gtraj {

double order_parameter(const Eigen::VectorXcd& alpha)
{
    if (alpha.size() == 0) return 0.0;
    return alpha.sum().imag() / static_cast<double>(alpha.size());
}

double gaussian_g2_numerator(cplx alpha, cplx u_nn, double v_nn)
{
    const double a2 = std::norm(alpha);
    return a2 * a2 + 4.0 * a2 * v_nn + 2.0 * std::real(std::conj(alpha * alpha) * u_nn) +
           std::norm(u_nn) + 2.0 * v_nn * v_nn;
}

void record_gaussian_sample(TrajectoryRecord& rec, double t, const GaussianState& state,
                            const ObservableSelection& sel)
{
    const auto n = static_cast<Eigen::Index>(state.n_sites());
    rec.times.push_back(t);
    rec.alpha_bar.push_back(order_parameter(state.alpha));
    rec.total_n.push_back(state.v.diagonal().real().sum() + state.alpha.squaredNorm());
    rec.k0_num.push_back(state.v.sum().real() + std::norm(state.alpha.sum()));

    if (sel.parity) {
        double p = std::numeric_limits<double>::quiet_NaN();
        try {
            p = gtraj::parity(state);
        } catch (const SingularCovarianceError&) {
        }
        rec.parity.push_back(p);
    }
    if (sel.local) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double vjj = state.v(j, j).real();
            rec.site_n.push_back(vjj + std::norm(state.alpha(j)));
            rec.site_g2num.push_back(gaussian_g2_numerator(state.alpha(j), state.u(j, j), vjj));
        }
        rec.corr01.push_back(n >= 2 ? state.v(0, 1) + std::conj(state.alpha(0)) * state.alpha(1) : cplx{});
    }
}

void record_wigner_sample(TrajectoryRecord& rec, double t, const Eigen::VectorXcd& field,
                          const ObservableSelection& sel)
{
    const Eigen::Index n = field.size();
    const double half_n = 0.5 * static_cast<double>(n);
    rec.times.push_back(t);
    rec.alpha_bar.push_back(order_parameter(field));
    rec.total_n.push_back(field.squaredNorm() - half_n);
    rec.k0_num.push_back(std::norm(field.sum()) - half_n);
    if (sel.parity) rec.parity.push_back(std::numeric_limits<double>::quiet_NaN());
    if (sel.local) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double a2 = std::norm(field(j));
            rec.site_n.push_back(a2 - 0.5);
            rec.site_g2num.push_back(a2 * a2 - 2.0 * a2 + 0.5);
        }
        rec.corr01.push_back(n >= 2 ? std::conj(field(0)) * field(1) : cplx{});
    }
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec)
{
    const bool with_parity = !rec.parity.empty();
    os << "t,alpha_bar,total_n,k0_num";
    if (with_parity) os << ",parity";
    os << ",diverged\n";
    os.precision(17);
    for (std::size_t s = 0; s < rec.size(); ++s) {
        os << rec.times[s] << ',' << rec.alpha_bar[s] << ',' << rec.total_n[s] << ',' << rec.k0_num[s];
        if (with_parity) os << ',' << rec.parity[s];
        const bool div_here = rec.diverged && s + 1 == rec.size();
        os << ',' << (div_here ? 1 : 0) << '\n';
    }
}

} // namespace gtraj
