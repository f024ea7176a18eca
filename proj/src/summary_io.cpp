#include "gtraj/summary_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

namespace gtraj {

using nlohmann::json;

namespace {

// NaN and infinities have no JSON representation.
json number(double x)
{
    return std::isfinite(x) ? json(x) : json(nullptr);
}

json complex_json(cplx z) { return json{{"re", number(z.real())}, {"im", number(z.imag())}}; }

json optional_json(const std::optional<Estimate>& e) { return e ? to_json(*e) : json(nullptr); }

json document_head(const std::string& kind, const RunConfig& cfg, const RunMetadata& meta)
{
    json doc;
    doc["schema_version"] = summary_schema_version;
    doc["kind"] = kind;
    doc["method"] = std::string(to_string(cfg.method));
    doc["config"] = to_json(cfg);
    doc["metadata"] = {{"timestamp", meta.timestamp}, {"workers", meta.workers}, {"wall_seconds", meta.wall_seconds}};
    return doc;
}

template <class T>
T field(const json& j, const char* key, const std::string& source)
{
    if (!j.contains(key)) throw AnalysisInputError(source + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw AnalysisInputError(source + ": field '" + key + "': " + e.what());
    }
}

std::optional<Estimate> read_estimate(const json& j, const char* key, const std::string& source)
{
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    const json& e = j.at(key);
    if (!e.is_object() || !e.contains("value") || e.at("value").is_null()) return std::nullopt;
    Estimate out;
    out.value = field<double>(e, "value", source);
    out.std_error = e.contains("std_error") && !e.at("std_error").is_null() ? e.at("std_error").get<double>() : 0.0;
    return out;
}

std::optional<BinderResult> read_binder(const json& j, const char* key, const std::string& source)
{
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    const json& b = j.at(key);
    BinderResult out;
    out.defined = field<bool>(b, "defined", source);
    if (out.defined) {
        out.value = field<double>(b, "value", source);
        out.std_error = field<double>(b, "std_error", source);
    }
    out.mu2 = b.value("mu2", 0.0);
    out.mu4 = b.value("mu4", 0.0);
    return out;
}

} // namespace

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

RunMetadata make_metadata(std::size_t workers, double wall_seconds)
{
    return RunMetadata{utc_timestamp(), workers, wall_seconds};
}

json to_json(const Estimate& e)
{
    return json{{"value", number(e.value)}, {"std_error", number(e.std_error)}};
}

json to_json(const BinderResult& b)
{
    json out{{"defined", b.defined}, {"mu2", number(b.mu2)}, {"mu4", number(b.mu4)}};
    out["value"] = b.defined ? number(b.value) : json(nullptr);
    out["std_error"] = b.defined ? number(b.std_error) : json(nullptr);
    return out;
}

json to_json(const Histogram& h)
{
    return json{{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}};
}

json summary_document(const EnsembleSummary& s, const RunConfig& cfg, const RunMetadata& meta)
{
    json doc = document_head("ensemble-summary", cfg, meta);
    json r;
    r["g"] = s.g;
    r["n_sites"] = s.n_sites;
    r["lattice_size"] = s.lattice_size;
    r["n_traj"] = s.n_traj;
    r["n_valid"] = s.n_valid;
    r["n_diverged"] = s.n_diverged;
    r["samples_per_trajectory"] = s.samples_per_trajectory;
    r["pooled_count"] = s.pooled_count;
    r["alpha_bar"] = to_json(s.alpha_bar);
    r["binder"] = to_json(s.binder);
    r["binder_final"] = to_json(s.binder_final);
    r["histogram"] = s.histogram.counts.empty() ? json(nullptr) : to_json(s.histogram);
    r["modes"] = s.modes;
    r["k0"] = {{"normalized", optional_json(s.k0.normalized)},
               {"printed", optional_json(s.k0.printed)},
               {"numerator", to_json(s.k0.numerator)},
               {"total_n", to_json(s.k0.total_n)}};
    r["parity"] = optional_json(s.parity);
    if (s.local) {
        json loc;
        loc["n"] = json::array();
        for (const auto& e : s.local->n) loc["n"].push_back(to_json(e));
        loc["g2"] = json::array();
        for (const auto& e : s.local->g2) loc["g2"].push_back(optional_json(e));
        auto cjson = [](const std::optional<ComplexEstimate>& c) {
            return c ? json{{"re", to_json(c->re)}, {"im", to_json(c->im)}} : json(nullptr);
        };
        loc["corr01"] = cjson(s.local->corr01);
        loc["g1_01"] = cjson(s.local->g1_01);
        r["local"] = loc;
    } else {
        r["local"] = nullptr;
    }
    r["diagnostics"] = {{"purity_drift_flags", s.purity_flags},
                        {"max_asymmetry", number(s.max_asymmetry)},
                        {"min_final_symplectic",
                         s.min_final_symplectic ? number(*s.min_final_symplectic) : json(nullptr)}};
    doc["result"] = r;
    doc["seeds"] = s.seeds;
    return doc;
}

json exact_summary_document(const ConvergedSteadyState& c, const Lattice& lattice, const RunConfig& cfg,
                            const RunMetadata& meta)
{
    json doc = document_head("exact-summary", cfg, meta);
    const ExactObservables& o = c.observables;
    json r;
    r["g"] = cfg.model.g_target;
    r["n_sites"] = lattice.n_sites;
    r["lattice_size"] = lattice.linear_size;
    r["n_max"] = c.n_max;
    r["max_relative_change"] = number(c.max_relative_change);
    r["residual"] = number(c.state.residual);
    r["solver_iterations"] = c.state.iterations;
    r["integration_time"] = c.state.t;
    r["top_population"] = number(c.state.top_population);
    r["truncation_warning"] = c.state.truncation_warning;
    r["n"] = json::array();
    r["g2"] = json::array();
    r["alpha"] = json::array();
    for (Eigen::Index j = 0; j < o.n.size(); ++j) {
        r["n"].push_back(number(o.n(j)));
        const auto& g2 = o.g2[static_cast<std::size_t>(j)];
        r["g2"].push_back(g2 ? number(*g2) : json(nullptr));
        r["alpha"].push_back(complex_json(o.alpha(j)));
    }
    r["corr01"] = o.n.size() >= 2 ? complex_json(o.corr(0, 1)) : json(nullptr);
    const auto g1 = o.n.size() >= 2 ? o.g1(0, 1) : std::nullopt;
    r["g1_01"] = g1 ? complex_json(*g1) : json(nullptr);
    r["parity"] = to_json(Estimate{o.parity, 0.0});
    r["alpha_bar"] = to_json(Estimate{[&] {
        double s = 0.0;
        for (Eigen::Index j = 0; j < o.alpha.size(); ++j) s += o.alpha(j).imag();
        return s / static_cast<double>(o.alpha.size());
    }(), 0.0});
    r["k0"] = {{"normalized", o.n_k0_normalized ? to_json(Estimate{*o.n_k0_normalized, 0.0}) : json(nullptr)},
               {"printed", o.n_k0_printed ? to_json(Estimate{*o.n_k0_printed, 0.0}) : json(nullptr)}};
    doc["result"] = r;
    return doc;
}

json reproducible_part(const json& doc)
{
    json out = doc;
    out.erase("metadata");
    return out;
}

SummaryRecord read_summary(const json& doc, const std::string& source)
{
    if (!doc.is_object()) throw AnalysisInputError(source + ": not a JSON object");
    const int version = field<int>(doc, "schema_version", source);
    if (version != summary_schema_version) {
        throw AnalysisInputError(source + ": unsupported schema_version " + std::to_string(version));
    }
    SummaryRecord rec;
    rec.source = source;
    rec.method = field<std::string>(doc, "method", source);
    if (!doc.contains("result") || !doc.contains("config")) {
        throw AnalysisInputError(source + ": missing 'result' or 'config'");
    }
    const json& cfg = doc.at("config");
    const json& r = doc.at("result");
    if (!cfg.contains("lattice") || !cfg.contains("model")) throw AnalysisInputError(source + ": incomplete config echo");
    rec.geometry = field<std::string>(cfg.at("lattice"), "geometry", source);
    rec.model = cfg.at("model");
    rec.g = field<double>(r, "g", source);
    rec.n_sites = field<std::size_t>(r, "n_sites", source);
    rec.lattice_size = field<std::size_t>(r, "lattice_size", source);
    rec.alpha_bar = read_estimate(r, "alpha_bar", source);
    rec.binder = read_binder(r, "binder", source);
    rec.binder_final = read_binder(r, "binder_final", source);
    rec.parity = read_estimate(r, "parity", source);
    if (r.contains("k0") && r.at("k0").is_object()) {
        rec.k0_normalized = read_estimate(r.at("k0"), "normalized", source);
        rec.k0_printed = read_estimate(r.at("k0"), "printed", source);
    }
    if (r.contains("histogram") && r.at("histogram").is_object()) {
        const json& h = r.at("histogram");
        Histogram hist;
        hist.lo = field<double>(h, "lo", source);
        hist.hi = field<double>(h, "hi", source);
        hist.counts = field<std::vector<std::size_t>>(h, "counts", source);
        rec.histogram = std::move(hist);
    }
    rec.modes = r.value("modes", 0);
    return rec;
}

std::vector<std::filesystem::path> find_summaries(const std::filesystem::path& root)
{
    namespace fs = std::filesystem;
    std::vector<fs::path> out;
    std::error_code ec;
    if (!fs::exists(root, ec)) throw AnalysisInputError("input '" + root.string() + "' does not exist");
    if (fs::is_regular_file(root, ec)) {
        out.push_back(root);
        return out;
    }
    for (fs::recursive_directory_iterator it(root, ec), end; it != end; it.increment(ec)) {
        if (ec) throw AnalysisInputError("cannot scan '" + root.string() + "': " + ec.message());
        if (it->is_regular_file() && it->path().filename() == "summary.json") out.push_back(it->path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void write_json_file(const std::filesystem::path& path, const json& doc)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("error while writing '" + path.string() + "'");
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw AnalysisInputError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw AnalysisInputError(path.string() + ": invalid JSON: " + e.what());
    }
}

} // namespace gtraj
