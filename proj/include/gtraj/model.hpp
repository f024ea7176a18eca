// model.hpp - Physical parameters, lattice topology and drive protocol of the
// two-photon driven dissipative Bose-Hubbard lattice.
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace gtraj {

/// Constants of the model. Energies and rates share one unit; gamma is
/// conventionally 1 and sets the time scale.
struct ModelParams {
    double gamma = 1.0;    // one-photon loss rate
    double eta = 0.0;      // two-photon loss rate
    double u_kerr = 0.0;   // Kerr interaction U
    double j_hop = 0.0;    // hopping J
    double delta = 0.0;    // detuning
    double g_target = 0.0; // final two-photon drive amplitude G (real)

    /// Throws std::invalid_argument unless gamma > 0, eta >= 0 and every
    /// field is finite.
    void validate() const;
};

enum class Geometry { square_periodic, square_open, open_chain, single_site };

std::string_view to_string(Geometry g);
Geometry geometry_from_string(std::string_view name);

/// Site graph. The neighbor relation is symmetric and free of duplicates.
struct Lattice {
    Geometry geometry = Geometry::single_site;
    std::size_t linear_size = 1; // L for square geometries, N otherwise
    std::size_t n_sites = 1;
    std::vector<std::vector<std::size_t>> neighbors;
    std::size_t z = 0; // coordination number used in the J/z normalization

    /// Undirected bonds (i < j), each listed once.
    std::vector<std::pair<std::size_t, std::size_t>> bonds() const;
    /// Hopping prefactor J/z, zero when the lattice has no bonds.
    double hop_scale(double j_hop) const;
};

/// Builds a lattice. `size` is L for square geometries and N for chains.
///  - square_periodic: L >= 3 (L < 3 would duplicate wrap-around bonds), z = 4
///  - square_open:     L >= 2, z = largest degree (2 for 2x2, 4 for L >= 3)
///  - open_chain:      N >= 2, z = 1 for the dimer, 2 otherwise
///  - single_site:     N == 1, no neighbors
Lattice build_lattice(Geometry geometry, std::size_t size);

enum class RampShape { linear, instant };

std::string_view to_string(RampShape s);
RampShape ramp_shape_from_string(std::string_view name);

struct DriveProtocol {
    double g_target = 0.0;
    double t_ramp = 10.0;
    RampShape shape = RampShape::linear;

    void validate() const;
};

/// G(t): linear ramps to g_target over t_ramp, instant returns g_target.
double drive_amplitude(const DriveProtocol& protocol, double t);

} // namespace gtraj
