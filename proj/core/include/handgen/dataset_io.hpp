#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "handgen/skeleton.hpp"

namespace handgen {

/// Reads a frame JSON-lines file. Rejects malformed lines (ParseError with the
/// line number), duplicate frame ids, joint counts other than 21, non-finite
/// coordinates and zero-length bones. Blank lines are skipped.
std::vector<Frame> load_dataset(const std::filesystem::path& path);
std::vector<Frame> parse_dataset(std::istream& in, const std::string& source = "<stream>");

/// Reads a prediction JSON-lines file. Frame ids are not resolved here.
std::vector<Prediction> load_predictions(const std::filesystem::path& path);
std::vector<Prediction> parse_predictions(std::istream& in, const std::string& source = "<stream>");

std::string frame_to_json_line(const Frame& frame);
std::string prediction_to_json_line(const Prediction& pred);

void save_dataset(std::span<const Frame> frames, const std::filesystem::path& path);
void save_predictions(std::span<const Prediction> preds, const std::filesystem::path& path);

}  // namespace handgen
