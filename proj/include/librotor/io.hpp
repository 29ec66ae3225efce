#pragma once

// Flat-file formats: PSD traces as CSV with a JSON metadata sidecar, the
// JSON printer used for every output, atomic writes and SHA-256 digests.

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "librotor/spectrum.hpp"

namespace librotor::io {

using json = nlohmann::json;

inline constexpr std::string_view kPsdHeader = "# librotor-psd v1";
inline constexpr std::string_view kPsdColumns = "freq_hz,psd";

/// 17 significant digits, "%.17g". Non-finite values have no JSON form and
/// are printed as null by dump_json.
std::string format_double(double v);

/// Two-space indented JSON with 17-digit numbers and sorted object keys.
std::string dump_json(const json& value);

std::string read_file(const std::filesystem::path& path);
/// Writes to a temporary file in the same directory, then renames it.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

std::string psd_csv(const PsdTrace& trace);
/// Parses the CSV body (metadata left default). Errors name the source and
/// the 1-based line number.
PsdTrace parse_psd_csv(std::string_view text, const std::string& source);

json meta_to_json(const TraceMeta& meta);
TraceMeta meta_from_json(const json& j, const std::string& source);

/// `dir/trace_007.csv` -> `dir/trace_007.meta.json`
std::filesystem::path meta_path_for(const std::filesystem::path& csv_path);

/// Writes the CSV and its sidecar.
void write_trace(const std::filesystem::path& csv_path, const PsdTrace& trace);
/// Reads the CSV and, when present, its sidecar (otherwise default metadata
/// with unknown averages).
PsdTrace read_trace(const std::filesystem::path& csv_path);

/// Frequency, data, fit, residual columns.
std::string plot_csv(std::span<const double> freq_hz, std::span<const double> data,
                     std::span<const double> fit, std::span<const double> residual);

}  // namespace librotor::io
