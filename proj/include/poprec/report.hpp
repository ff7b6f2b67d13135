#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "poprec/recovery.hpp"

namespace poprec {

nlohmann::json result_to_json(const RecoveryResult& r);
RecoveryResult result_from_json(const nlohmann::json& j);

/// One row per (grid point, k = 0..k_max): index, z, arg z, usable, gate
/// counts and pass rate, then estimate, fitted value and residual (blank for
/// unusable points).
std::string diagnostics_csv(const Diagnostics& d);

/// Writes the JSON result to `path` and the CSV next to it (extension .csv).
/// Throws IoError on write failure.
void emit_report(const RecoveryResult& r, const std::filesystem::path& path);

/// Path of the CSV written alongside `json_path`.
std::filesystem::path csv_path_for(const std::filesystem::path& json_path);

}  // namespace poprec
