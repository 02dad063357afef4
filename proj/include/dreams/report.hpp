#ifndef DREAMS_REPORT_HPP
#define DREAMS_REPORT_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dreams/dataset.hpp"
#include "dreams/dreams.hpp"
#include "dreams/metrics.hpp"

namespace dreams {

inline constexpr int report_schema_version = 1;

enum class Method { tsne, pca, mds, dreams_pca, dreams_mds, dreams_decoder };

Method parse_method(const std::string& name);
std::string method_name(Method method);
bool uses_lambda(Method method);

PenaltyNormalization parse_normalization(const std::string& name);
std::string normalization_name(PenaltyNormalization normalization);

/// Everything a CLI invocation depends on. Loaded from a JSON config file and
/// overridden by command-line flags.
struct RunConfig {
    std::filesystem::path input;
    MatrixFormat format = MatrixFormat::csv;
    /// CSV input carries a trailing integer label column.
    bool labels = false;
    /// Second matrix for the metrics command.
    std::filesystem::path embedding;
    MatrixFormat embedding_format = MatrixFormat::csv;

    Method method = Method::dreams_pca;
    double lambda = 0.1;
    std::vector<double> lambdas = {0.0, 0.05, 0.1, 0.3, 0.6, 1.0};

    /// Inputs wider than this are reduced by PCA before anything else; 0 disables.
    Index pca_dims = 50;
    DreamsConfig dreams;
    /// MDS methods subsample larger inputs.
    Index mds_max_points = 20000;

    Index knn_k = 10;
    Index cpd_sample = 1000;

    HierarchyParams gen;

    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::filesystem::path out = ".";
};

/// Echo of the configuration. Excludes `threads` and `out`, which never affect results.
nlohmann::json config_to_json(const RunConfig& cfg);
/// Overrides fields of `cfg` present in `j`; unknown keys raise ConfigError.
void apply_config_json(const nlohmann::json& j, RunConfig& cfg);
RunConfig load_config_file(const std::filesystem::path& path);

struct DatasetInfo {
    std::string name;
    Index rows = 0;
    Index cols = 0;
    /// Columns of the matrix actually embedded (after the optional PCA reduction).
    Index embedded_cols = 0;

    bool operator==(const DatasetInfo&) const = default;
};

/// Contents of report.json.
struct RunReport {
    int schema_version = report_schema_version;
    std::string artifact_version;
    std::string command;
    nlohmann::json config;
    DatasetInfo dataset;
    std::optional<MetricReport> metrics;
    std::vector<double> kl_trace;
    std::vector<double> penalty_trace;
    std::optional<double> mds_stress;
    std::vector<std::string> warnings;
    /// Wall-clock seconds per phase. The only nondeterministic field.
    std::map<std::string, double> timings;

    bool operator==(const RunReport&) const = default;
};

nlohmann::json report_to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);

/// `lambdas[i]` is the regularization strength of row i, empty for baselines.
nlohmann::json score_table_to_json(const ScoreTable& table, const std::vector<std::optional<double>>& lambdas,
                                   const MetricOptions& metrics, std::uint64_t seed);

/// Pretty-printed JSON followed by a newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Shortest decimal form that round-trips, e.g. "0.05".
std::string format_number(double v);

} // namespace dreams

#endif // DREAMS_REPORT_HPP
