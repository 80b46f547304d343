#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "handgen/evaluator.hpp"

namespace handgen {

/// Stable key order and explicit nulls / empty arrays, so equal reports give
/// equal bytes.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

void save_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport load_report(const std::filesystem::path& path);

/// "threshold_mm,success_rate" rows.
std::string curve_to_csv(const SuccessCurve& curve);

/// One CSV per method, criterion and curve kind, named
/// <method>_<criterion>_<frame|joint>.csv. Returns the written paths.
std::vector<std::filesystem::path> write_curve_csvs(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace handgen
