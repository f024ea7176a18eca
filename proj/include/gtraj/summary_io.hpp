// summary_io.hpp - Versioned JSON documents for run summaries and their
// read-back for analysis.
#pragma once

#include "gtraj/config.hpp"
#include "gtraj/ensemble.hpp"
#include "gtraj/lindblad.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gtraj {

inline constexpr int summary_schema_version = 1;

/// Problems with analysis inputs (missing, unreadable or malformed summaries).
class AnalysisInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Run-specific values kept out of the reproducible part of a document.
struct RunMetadata {
    std::string timestamp; // ISO 8601, UTC
    std::size_t workers = 1;
    double wall_seconds = 0.0;
};

RunMetadata make_metadata(std::size_t workers, double wall_seconds);
std::string utc_timestamp();

nlohmann::json to_json(const Estimate& e);
nlohmann::json to_json(const BinderResult& b);
nlohmann::json to_json(const Histogram& h);

/// Summary of a trajectory ensemble with the resolved config echo and seeds.
nlohmann::json summary_document(const EnsembleSummary& summary, const RunConfig& cfg, const RunMetadata& meta);

/// Summary of an exact steady-state solve, in the same layout and tagged
/// with method "exact".
nlohmann::json exact_summary_document(const ConvergedSteadyState& result, const Lattice& lattice,
                                      const RunConfig& cfg, const RunMetadata& meta);

/// The document without its "metadata" member; equal for reruns.
nlohmann::json reproducible_part(const nlohmann::json& doc);

/// Fields of a summary needed by the analysis.
struct SummaryRecord {
    std::string source;
    std::string method;
    std::string geometry;
    std::size_t lattice_size = 0;
    std::size_t n_sites = 0;
    double g = 0.0;
    nlohmann::json model;
    std::optional<Estimate> alpha_bar;
    std::optional<BinderResult> binder;
    std::optional<BinderResult> binder_final;
    std::optional<Estimate> parity;
    std::optional<Estimate> k0_normalized;
    std::optional<Estimate> k0_printed;
    std::optional<Histogram> histogram;
    int modes = 0;
};

SummaryRecord read_summary(const nlohmann::json& doc, const std::string& source);

/// Every summary.json below `root` (recursively), sorted by path.
std::vector<std::filesystem::path> find_summaries(const std::filesystem::path& root);

/// Writes pretty-printed JSON followed by a newline; throws std::runtime_error
/// when the file cannot be written.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::filesystem::path& path);

} // namespace gtraj
