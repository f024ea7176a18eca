#include "gtraj/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gtraj {

void ModelParams::validate() const
{
    for (double x : {gamma, eta, u_kerr, j_hop, delta, g_target}) {
        if (!std::isfinite(x)) throw std::invalid_argument("model parameters must be finite");
    }
    if (gamma <= 0.0) throw std::invalid_argument("model.gamma must be > 0");
    if (eta < 0.0) throw std::invalid_argument("model.eta must be >= 0");
}

std::string_view to_string(Geometry g)
{
    switch (g) {
    case Geometry::square_periodic: return "square-periodic";
    case Geometry::square_open: return "square-open";
    case Geometry::open_chain: return "open-chain";
    case Geometry::single_site: return "single-site";
    }
    return "unknown";
}

Geometry geometry_from_string(std::string_view name)
{
    if (name == "square-periodic") return Geometry::square_periodic;
    if (name == "square-open") return Geometry::square_open;
    if (name == "open-chain") return Geometry::open_chain;
    if (name == "single-site") return Geometry::single_site;
    throw std::invalid_argument("unknown lattice geometry '" + std::string(name) +
                                "' (expected square-periodic, square-open, open-chain or single-site)");
}

std::vector<std::pair<std::size_t, std::size_t>> Lattice::bonds() const
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < n_sites; ++i) {
        for (std::size_t j : neighbors[i]) {
            if (i < j) out.emplace_back(i, j);
        }
    }
    return out;
}

double Lattice::hop_scale(double j_hop) const
{
    return z == 0 ? 0.0 : j_hop / static_cast<double>(z);
}

namespace {

void link(std::vector<std::vector<std::size_t>>& nb, std::size_t i, std::size_t j)
{
    if (i == j) return;
    if (std::find(nb[i].begin(), nb[i].end(), j) == nb[i].end()) nb[i].push_back(j);
    if (std::find(nb[j].begin(), nb[j].end(), i) == nb[j].end()) nb[j].push_back(i);
}

} // namespace

Lattice build_lattice(Geometry geometry, std::size_t size)
{
    Lattice lat;
    lat.geometry = geometry;
    lat.linear_size = size;

    switch (geometry) {
    case Geometry::square_periodic: {
        if (size < 3) {
            throw std::invalid_argument(
                "square-periodic lattice requires L >= 3: for L < 3 the wrap-around bonds "
                "coincide with direct bonds; use square-open for 2x2");
        }
        const std::size_t L = size;
        lat.n_sites = L * L;
        lat.neighbors.assign(lat.n_sites, {});
        for (std::size_t x = 0; x < L; ++x) {
            for (std::size_t y = 0; y < L; ++y) {
                const std::size_t i = x * L + y;
                link(lat.neighbors, i, ((x + 1) % L) * L + y);
                link(lat.neighbors, i, x * L + (y + 1) % L);
            }
        }
        lat.z = 4;
        break;
    }
    case Geometry::square_open: {
        if (size < 2) throw std::invalid_argument("square-open lattice requires L >= 2");
        const std::size_t L = size;
        lat.n_sites = L * L;
        lat.neighbors.assign(lat.n_sites, {});
        for (std::size_t x = 0; x < L; ++x) {
            for (std::size_t y = 0; y < L; ++y) {
                const std::size_t i = x * L + y;
                if (x + 1 < L) link(lat.neighbors, i, (x + 1) * L + y);
                if (y + 1 < L) link(lat.neighbors, i, x * L + y + 1);
            }
        }
        lat.z = 0;
        for (const auto& nb : lat.neighbors) lat.z = std::max(lat.z, nb.size());
        break;
    }
    case Geometry::open_chain: {
        if (size < 2) throw std::invalid_argument("open-chain requires N >= 2");
        lat.n_sites = size;
        lat.neighbors.assign(size, {});
        for (std::size_t i = 0; i + 1 < size; ++i) link(lat.neighbors, i, i + 1);
        lat.z = size == 2 ? 1 : 2;
        break;
    }
    case Geometry::single_site: {
        if (size != 1) throw std::invalid_argument("single-site geometry requires N == 1");
        lat.n_sites = 1;
        lat.neighbors.assign(1, {});
        lat.z = 0;
        break;
    }
    }

    for (auto& nb : lat.neighbors) std::sort(nb.begin(), nb.end());
    return lat;
}

std::string_view to_string(RampShape s)
{
    return s == RampShape::linear ? "linear" : "instant";
}

RampShape ramp_shape_from_string(std::string_view name)
{
    if (name == "linear") return RampShape::linear;
    if (name == "instant") return RampShape::instant;
    throw std::invalid_argument("unknown drive shape '" + std::string(name) + "' (expected linear or instant)");
}

void DriveProtocol::validate() const
{
    if (!std::isfinite(g_target) || !std::isfinite(t_ramp)) throw std::invalid_argument("drive parameters must be finite");
    if (t_ramp < 0.0) throw std::invalid_argument("drive.t_ramp must be >= 0");
}

double drive_amplitude(const DriveProtocol& protocol, double t)
{
    if (protocol.shape == RampShape::instant || protocol.t_ramp <= 0.0) return protocol.g_target;
    const double frac = std::clamp(t / protocol.t_ramp, 0.0, 1.0);
    return protocol.g_target * frac;
}

} // namespace gtraj
