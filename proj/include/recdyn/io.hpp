#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "recdyn/bench.hpp"
#include "recdyn/dynamics.hpp"
#include "recdyn/nets.hpp"
#include "recdyn/oracle.hpp"

namespace recdyn {

/// Formats a double with 17 significant digits (shortest exact-round-trip
/// width for IEEE doubles), so every CSV is bit-reproducible.
std::string format_double(double value);

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

/// Reads a numeric CSV written by any of the writers here: returns the header
/// names and the value matrix. Non-numeric cells throw ConfigError.
std::pair<std::vector<std::string>, Mat> read_csv_matrix(const std::filesystem::path& path);

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);
void write_oracle_csv(const std::filesystem::path& path, const std::string& system,
                      const std::vector<RecursionErrorReport>& reports);

/// Table-1-style diagnostics rows.
struct DiagnosticsRow {
    std::string system;
    DiagnosticsReport report;
};
void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<DiagnosticsRow>& rows);

/// Pretty-printed JSON with a trailing newline; parents created on demand.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

nlohmann::json system_to_json(const SystemSpec& spec);

/// Network checkpoints round-trip losslessly through JSON.
void save_checkpoint(const std::filesystem::path& path, const NetParams& params);
NetParams load_checkpoint(const std::filesystem::path& path);

} // namespace recdyn
