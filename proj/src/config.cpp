#include "gtraj/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace gtraj {

using nlohmann::json;

namespace {

double as_double(const json& v, const std::string& key)
{
    if (!v.is_number()) throw ConfigError("'" + key + "' must be a number, got " + v.dump());
    return v.get<double>();
}

std::size_t as_count(const json& v, const std::string& key)
{
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::size_t>(v.get<long long>());
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0.0 && d == std::floor(d) && d < 9.0e15) return static_cast<std::size_t>(d);
    }
    throw ConfigError("'" + key + "' must be a non-negative integer, got " + v.dump());
}

std::uint64_t as_seed(const json& v, const std::string& key)
{
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    throw ConfigError("'" + key + "' must be a non-negative integer, got " + v.dump());
}

bool as_bool(const json& v, const std::string& key)
{
    if (!v.is_boolean()) throw ConfigError("'" + key + "' must be true or false, got " + v.dump());
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& key)
{
    if (!v.is_string()) throw ConfigError("'" + key + "' must be a string, got " + v.dump());
    return v.get<std::string>();
}

template <class F>
auto translate(const std::string& key, F&& f)
{
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("'" + key + "': " + e.what());
    }
}

struct Field {
    std::string key;
    bool required;
    bool sweep_only;
    std::function<void(RunConfig&, const json&)> set;
    std::function<json(const RunConfig&)> get;
};

#define GTRAJ_DOUBLE(path, member)                                                                    \
    Field{path, false, false, [](RunConfig& c, const json& v) { c.member = as_double(v, path); },     \
          [](const RunConfig& c) { return json(c.member); }}
#define GTRAJ_REQUIRED_DOUBLE(path, member)                                                           \
    Field{path, true, false, [](RunConfig& c, const json& v) { c.member = as_double(v, path); },      \
          [](const RunConfig& c) { return json(c.member); }}
#define GTRAJ_COUNT(path, member)                                                                     \
    Field{path, false, false, [](RunConfig& c, const json& v) { c.member = as_count(v, path); },      \
          [](const RunConfig& c) { return json(c.member); }}
#define GTRAJ_BOOL(path, member)                                                                      \
    Field{path, false, false, [](RunConfig& c, const json& v) { c.member = as_bool(v, path); },       \
          [](const RunConfig& c) { return json(c.member); }}

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = {
        Field{"method", true, false,
              [](RunConfig& c, const json& v) {
                  c.method = translate("method", [&] { return method_from_string(as_string(v, "method")); });
              },
              [](const RunConfig& c) { return json(std::string(to_string(c.method))); }},
        GTRAJ_DOUBLE("model.gamma", model.gamma),
        GTRAJ_DOUBLE("model.eta", model.eta),
        GTRAJ_REQUIRED_DOUBLE("model.u_kerr", model.u_kerr),
        GTRAJ_REQUIRED_DOUBLE("model.j_hop", model.j_hop),
        GTRAJ_REQUIRED_DOUBLE("model.delta", model.delta),
        Field{"model.g_target", true, false,
              [](RunConfig& c, const json& v) { c.model.g_target = as_double(v, "model.g_target"); },
              [](const RunConfig& c) { return json(c.model.g_target); }},
        Field{"lattice.geometry", true, false,
              [](RunConfig& c, const json& v) {
                  c.geometry = translate("lattice.geometry",
                                         [&] { return geometry_from_string(as_string(v, "lattice.geometry")); });
              },
              [](const RunConfig& c) { return json(std::string(to_string(c.geometry))); }},
        Field{"lattice.size", true, false,
              [](RunConfig& c, const json& v) { c.size = as_count(v, "lattice.size"); },
              [](const RunConfig& c) { return json(c.size); }},
        GTRAJ_DOUBLE("drive.t_ramp", drive.t_ramp),
        Field{"drive.shape", false, false,
              [](RunConfig& c, const json& v) {
                  c.drive.shape = translate("drive.shape",
                                            [&] { return ramp_shape_from_string(as_string(v, "drive.shape")); });
              },
              [](const RunConfig& c) { return json(std::string(to_string(c.drive.shape))); }},
        GTRAJ_DOUBLE("step.dt", step.dt),
        GTRAJ_DOUBLE("step.blowup_threshold", step.blowup_threshold),
        GTRAJ_DOUBLE("step.tol_phys", step.tol_phys),
        GTRAJ_COUNT("ensemble.n_traj", ensemble.n_traj),
        GTRAJ_DOUBLE("ensemble.t_fin", ensemble.t_fin),
        Field{"ensemble.t_relax", false, false,
              [](RunConfig& c, const json& v) {
                  c.ensemble.t_relax = as_double(v, "ensemble.t_relax");
                  c.t_relax_explicit = true;
              },
              [](const RunConfig& c) { return json(c.ensemble.t_relax); }},
        GTRAJ_DOUBLE("ensemble.t_sample", ensemble.t_sample),
        Field{"ensemble.master_seed", false, false,
              [](RunConfig& c, const json& v) { c.ensemble.master_seed = as_seed(v, "ensemble.master_seed"); },
              [](const RunConfig& c) { return json(c.ensemble.master_seed); }},
        Field{"ensemble.workers", false, false,
              [](RunConfig& c, const json& v) { c.ensemble.workers = as_count(v, "ensemble.workers"); },
              nullptr},
        GTRAJ_BOOL("observables.parity", observables.parity),
        GTRAJ_BOOL("observables.local", observables.local),
        Field{"output.dir", false, false,
              [](RunConfig& c, const json& v) { c.output.dir = as_string(v, "output.dir"); },
              [](const RunConfig& c) { return json(c.output.dir); }},
        GTRAJ_BOOL("output.trajectory_csv", output.trajectory_csv),
        GTRAJ_COUNT("output.histogram_bins", output.histogram_bins),
        GTRAJ_COUNT("exact.n_max", exact.n_max),
        GTRAJ_COUNT("exact.n_max_step", exact.n_max_step),
        GTRAJ_DOUBLE("exact.rel_tol", exact.rel_tol),
        GTRAJ_COUNT("exact.max_dim", exact.max_dim),
        GTRAJ_DOUBLE("exact.tol_ss", exact.tol_ss),
        GTRAJ_DOUBLE("exact.t_max", exact.t_max),
        Field{"exact.solver", false, false,
              [](RunConfig& c, const json& v) {
                  c.exact.solver = translate("exact.solver", [&] {
                      return steady_state_method_from_string(as_string(v, "exact.solver"));
                  });
              },
              [](const RunConfig& c) { return json(std::string(to_string(c.exact.solver))); }},
        Field{"sweep.g_values", false, true,
              [](RunConfig& c, const json& v) {
                  if (!v.is_array()) throw ConfigError("'sweep.g_values' must be an array of numbers");
                  c.sweep.g_values.clear();
                  for (const auto& x : v) c.sweep.g_values.push_back(as_double(x, "sweep.g_values"));
              },
              [](const RunConfig& c) { return json(c.sweep.g_values); }},
        Field{"sweep.sizes", false, true,
              [](RunConfig& c, const json& v) {
                  if (!v.is_array()) throw ConfigError("'sweep.sizes' must be an array of integers");
                  c.sweep.sizes.clear();
                  for (const auto& x : v) c.sweep.sizes.push_back(as_count(x, "sweep.sizes"));
              },
              [](const RunConfig& c) { return json(c.sweep.sizes); }},
    };
    return table;
}

#undef GTRAJ_DOUBLE
#undef GTRAJ_REQUIRED_DOUBLE
#undef GTRAJ_COUNT
#undef GTRAJ_BOOL

const Field* find_field(const std::string& key)
{
    for (const auto& f : fields()) {
        if (f.key == key) return &f;
    }
    return nullptr;
}

// Leaves of nested objects keyed by dotted path. Arrays are leaves.
void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, const json*>>& out)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it.value().is_object()) {
            if (find_field(key)) throw ConfigError("'" + key + "' must be a value, not an object");
            flatten(it.value(), key, out);
        } else {
            for (const auto& f : fields()) {
                if (f.key.rfind(key + ".", 0) == 0) throw ConfigError("'" + key + "' must be an object");
            }
            out.emplace_back(key, &it.value());
        }
    }
}

json override_value(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);
    }
}

bool integral_ratio(double span, double dt)
{
    const double r = span / dt;
    return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, std::abs(r)) && std::round(r) >= 1.0;
}

} // namespace

Lattice RunConfig::lattice() const
{
    return translate("lattice", [&] { return build_lattice(geometry, size); });
}

EnsembleSpec RunConfig::ensemble_spec() const
{
    EnsembleSpec spec;
    spec.method = method;
    spec.params = model;
    spec.lattice = lattice();
    spec.protocol = drive;
    spec.protocol.g_target = model.g_target;
    spec.step = step;
    spec.ensemble = ensemble;
    spec.observables = observables;
    spec.histogram_bins = output.histogram_bins;
    return spec;
}

RunConfig RunConfig::at_point(double g, std::size_t new_size) const
{
    RunConfig c = *this;
    c.model.g_target = g;
    c.drive.g_target = g;
    c.size = new_size;
    if (!t_relax_explicit) c.ensemble.t_relax = default_t_relax(c.lattice(), c.model.gamma);
    c.sweep = {};
    return c;
}

json parse_json_strict(const std::string& text, const std::string& origin)
{
    std::vector<std::set<std::string>> seen;
    std::vector<std::string> path;
    std::string pending_key;
    auto cb = [&](int, json::parse_event_t event, json& parsed) {
        switch (event) {
        case json::parse_event_t::object_start:
            seen.emplace_back();
            path.push_back(pending_key);
            pending_key.clear();
            break;
        case json::parse_event_t::object_end:
            seen.pop_back();
            path.pop_back();
            break;
        case json::parse_event_t::key: {
            const std::string key = parsed.get<std::string>();
            if (!seen.back().insert(key).second) {
                std::string full;
                for (const auto& p : path) {
                    if (!p.empty()) full += p + ".";
                }
                throw ConfigError(origin + ": duplicate key '" + full + key + "'");
            }
            pending_key = key;
            break;
        }
        case json::parse_event_t::array_start:
            path.push_back(pending_key);
            pending_key.clear();
            seen.emplace_back();
            break;
        case json::parse_event_t::array_end:
            path.pop_back();
            seen.pop_back();
            break;
        case json::parse_event_t::value:
            pending_key.clear();
            break;
        }
        return true;
    };
    try {
        return json::parse(text, cb);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": invalid JSON: " + e.what());
    }
}

RunConfig parse_config(const json& doc, const std::vector<Override>& overrides, bool sweep)
{
    if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
    std::vector<std::pair<std::string, const json*>> leaves;
    flatten(doc, "", leaves);

    RunConfig cfg;
    std::set<std::string> given;
    auto apply = [&](const std::string& key, const json& value) {
        const Field* f = find_field(key);
        if (!f || (f->sweep_only && !sweep)) throw ConfigError("unknown configuration key '" + key + "'");
        f->set(cfg, value);
        given.insert(key);
    };
    for (const auto& [key, value] : leaves) apply(key, *value);
    std::set<std::string> overridden;
    for (const auto& [key, text] : overrides) {
        if (!overridden.insert(key).second) throw ConfigError("option '--" + key + "' given more than once");
        apply(key, override_value(text));
    }

    for (const auto& f : fields()) {
        if (f.required && !given.count(f.key)) throw ConfigError("missing required key '" + f.key + "'");
    }
    cfg.drive.g_target = cfg.model.g_target;
    if (!given.count("exact.n_max") && cfg.geometry == Geometry::single_site) cfg.exact.n_max = single_site_n_max;
    if (!cfg.t_relax_explicit) cfg.ensemble.t_relax = default_t_relax(cfg.lattice(), cfg.model.gamma);
    validate(cfg, sweep);
    return cfg;
}

RunConfig parse_config_text(const std::string& text, const std::vector<Override>& overrides, bool sweep)
{
    return parse_config(parse_json_strict(text), overrides, sweep);
}

RunConfig load_config(const std::string& path, const std::vector<Override>& overrides, bool sweep)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read configuration file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(parse_json_strict(ss.str(), path), overrides, sweep);
}

void validate(const RunConfig& cfg, bool sweep)
{
    translate("model", [&] { cfg.model.validate(); });
    translate("drive", [&] { cfg.drive.validate(); });
    translate("step", [&] { cfg.step.validate(); });
    translate("ensemble", [&] { cfg.ensemble.validate(); });
    const Lattice lat = cfg.lattice();

    if (cfg.method == Method::exact) {
        if (lat.n_sites > 2) {
            throw ConfigError("method 'exact' supports at most 2 sites, lattice has " + std::to_string(lat.n_sites));
        }
        if (cfg.exact.n_max < 1) throw ConfigError("'exact.n_max' must be >= 1");
        if (cfg.exact.n_max_step < 1) throw ConfigError("'exact.n_max_step' must be >= 1");
        if (!(cfg.exact.rel_tol > 0.0)) throw ConfigError("'exact.rel_tol' must be > 0");
        if (!(cfg.exact.tol_ss > 0.0)) throw ConfigError("'exact.tol_ss' must be > 0");
        if (!(cfg.exact.t_max > 0.0)) throw ConfigError("'exact.t_max' must be > 0");
    } else {
        if (!integral_ratio(cfg.ensemble.t_sample, cfg.step.dt)) {
            throw ConfigError("'ensemble.t_sample' must be an integer multiple of 'step.dt'");
        }
        if (!integral_ratio(cfg.ensemble.t_fin, cfg.ensemble.t_sample)) {
            throw ConfigError("'ensemble.t_fin' must be an integer multiple of 'ensemble.t_sample'");
        }
    }
    if (cfg.observables.parity && cfg.method == Method::twa) {
        throw ConfigError("'observables.parity' is only available for methods gta and exact");
    }
    if (cfg.output.histogram_bins < 3) throw ConfigError("'output.histogram_bins' must be >= 3");
    if (cfg.output.dir.empty()) throw ConfigError("'output.dir' must not be empty");

    if (sweep) {
        if (cfg.sweep.g_values.empty()) throw ConfigError("'sweep.g_values' must list at least one drive amplitude");
        for (std::size_t i = 1; i < cfg.sweep.g_values.size(); ++i) {
            if (!(cfg.sweep.g_values[i] > cfg.sweep.g_values[i - 1])) {
                throw ConfigError("'sweep.g_values' must be strictly increasing");
            }
        }
        for (std::size_t l : cfg.sweep.sizes) {
            const RunConfig point = cfg.at_point(cfg.sweep.g_values.front(), l);
            validate(point, false);
        }
    }
}

json to_json(const RunConfig& cfg, bool include_sweep)
{
    json out = json::object();
    for (const auto& f : fields()) {
        if (!f.get || (f.sweep_only && !include_sweep)) continue;
        out[json::json_pointer("/" + [&] {
            std::string p = f.key;
            for (auto& ch : p) {
                if (ch == '.') ch = '/';
            }
            return p;
        }())] = f.get(cfg);
    }
    return out;
}

std::vector<std::string> config_keys(bool sweep)
{
    std::vector<std::string> keys;
    for (const auto& f : fields()) {
        if (!f.sweep_only || sweep) keys.push_back(f.key);
    }
    return keys;
}

} // namespace gtraj
