#ifndef BK_IO_HPP
#define BK_IO_HPP

#include "bk/events.hpp"
#include "bk/integrator.hpp"
#include "bk/model.hpp"
#include "bk/scaling.hpp"
#include "bk/statistics.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace bk {

inline constexpr const char* tool_name = "bk-sim";
inline constexpr const char* tool_version = "0.1.0";

/// Config file missing, unreadable or malformed.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Output could not be written, or an input data file could not be read.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OutputOptions {
    bool catalog{true};
    bool per_block_slip{false};
    bool trajectory{false};
    std::size_t trajectory_stride{100};
    bool distributions{true};
    double bin_width{0.2};
    FitWindow fit_window{};
};

struct RunConfig {
    ModelParams<double> model{ModelParams<double>::chain(200)};
    IntegratorConfig<double> integrator{};
    OutputOptions outputs{};
    std::vector<double> sweep_alpha;
};

/// Parses a run configuration. Missing fields keep their defaults; unknown
/// keys are rejected.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// Validates the model, integrator and output sections.
std::vector<std::string> validate(const RunConfig& cfg);

/// Shortest text that reads back as the same double (17 significant digits).
std::string format_double(double v);

/// "# bk-sim 0.1.0 key=value ..." line recording the parameters and seed.
std::string provenance_comment(const RunConfig& cfg);

/// Parsed CSV: `#` comment lines, one header row, numeric rows.
struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;
    /// key=value tokens found in the comment lines.
    std::map<std::string, std::string> metadata() const;
};

CsvTable read_csv(const std::filesystem::path& path);

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& comment, const std::vector<std::string>& header);
    void row(std::initializer_list<double> values);
    void row(const std::vector<double>& values);
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

void write_catalog_csv(const std::filesystem::path& path, const EventCatalog& catalog, const std::string& comment);
EventCatalog read_catalog_csv(const std::filesystem::path& path);

nlohmann::json catalog_to_json(const EventCatalog& catalog, bool per_block_slip);
EventCatalog catalog_from_json(const nlohmann::json& doc);
void write_catalog_json(const std::filesystem::path& path, const EventCatalog& catalog, const nlohmann::json& meta,
                        bool per_block_slip);
EventCatalog read_catalog_json(const std::filesystem::path& path);

/// Reads a catalog in either format, chosen by extension.
EventCatalog read_catalog(const std::filesystem::path& path);

/// (M, log10 P(M)) at the lower edge of every nonempty bin.
void write_cumulative_csv(const std::filesystem::path& path, const MagnitudeDistribution& dist, const std::string& comment);
/// Bin index, center, count, R and log R for every nonempty bin.
void write_rate_csv(const std::filesystem::path& path, const MagnitudeDistribution& dist, const std::string& comment);
/// Rebuilds bin counts from a file written by write_rate_csv.
MagnitudeDistribution read_rate_csv(const std::filesystem::path& path);

nlohmann::json fit_to_json(const GrFit& fit);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

void write_scaling_levels_csv(const std::filesystem::path& path, const ScalingReport& report, const std::string& comment);
void write_distance_csv(const std::filesystem::path& path, const std::vector<DistanceRow>& rows, const std::string& comment);

/// Stride-sampled time, center of mass, positions and velocities.
class TrajectoryWriter : public StepObserver<double> {
public:
    TrajectoryWriter(const std::filesystem::path& path, const std::string& comment, Index n_blocks, std::size_t stride);
    void on_step(const TrajectorySample<double>& sample) override;
    void close() { writer_.close(); }

private:
    CsvWriter writer_;
    std::size_t stride_;
    std::size_t count_{0};
    std::vector<double> buffer_;
};

} // namespace bk

#endif // BK_IO_HPP
