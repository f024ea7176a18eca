// config.hpp - Run configuration: JSON ingestion with strict key checking,
// dotted-path overrides, defaults and cross-field validation.
#pragma once

#include "gtraj/ensemble.hpp"
#include "gtraj/gta.hpp"
#include "gtraj/lindblad.hpp"
#include "gtraj/model.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gtraj {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Starting cutoff of a single site when exact.n_max is not given.
inline constexpr std::size_t single_site_n_max = 30;

struct ExactConfig {
    std::size_t n_max = 12;      // starting per-site cutoff (dimer)
    std::size_t n_max_step = 5;  // cutoff increment of the convergence check
    double rel_tol = 1e-3;
    std::size_t max_dim = 1024;
    double tol_ss = 1e-9;
    double t_max = 5000.0;
    SteadyStateMethod solver = SteadyStateMethod::krylov;
};

struct OutputConfig {
    std::string dir = "out";
    bool trajectory_csv = false;
    std::size_t histogram_bins = 61;
};

struct SweepConfig {
    std::vector<double> g_values;
    std::vector<std::size_t> sizes;
};

struct RunConfig {
    Method method = Method::gta;
    ModelParams model;
    Geometry geometry = Geometry::square_periodic;
    std::size_t size = 6;
    DriveProtocol drive;
    StepConfig step;
    EnsembleConfig ensemble;
    bool t_relax_explicit = false; // otherwise derived from the lattice size
    ObservableSelection observables;
    OutputConfig output;
    ExactConfig exact;
    SweepConfig sweep;

    Lattice lattice() const;
    /// Spec for ensemble_run (method gta or twa).
    EnsembleSpec ensemble_spec() const;
    /// Copy for another drive amplitude and size, re-deriving t_relax when it
    /// was not given explicitly.
    RunConfig at_point(double g, std::size_t size) const;
};

/// A dotted-path override such as {"model.g_target", "0.9"}. Values are read
/// as JSON when they parse, otherwise as a string.
using Override = std::pair<std::string, std::string>;

/// Parses JSON text, rejecting duplicate keys anywhere in the document.
nlohmann::json parse_json_strict(const std::string& text, const std::string& origin = "config");

/// Builds a run configuration from a JSON document plus overrides. Applies
/// defaults and validates; every problem raises ConfigError naming the key.
/// When `sweep` is false any sweep.* key is rejected.
RunConfig parse_config(const nlohmann::json& doc, const std::vector<Override>& overrides = {}, bool sweep = false);
RunConfig parse_config_text(const std::string& text, const std::vector<Override>& overrides = {}, bool sweep = false);
RunConfig load_config(const std::string& path, const std::vector<Override>& overrides = {}, bool sweep = false);

/// Cross-field validation (called by parse_config).
void validate(const RunConfig& cfg, bool sweep = false);

/// Resolved configuration as JSON, every field included. The worker count is
/// left out because results do not depend on it.
nlohmann::json to_json(const RunConfig& cfg, bool include_sweep = false);

/// Every key accepted in a configuration document or as a dotted flag.
std::vector<std::string> config_keys(bool sweep = false);

} // namespace gtraj
