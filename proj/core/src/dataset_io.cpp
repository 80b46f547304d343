#include "handgen/dataset_io.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "handgen/errors.hpp"
#include "handgen/file_util.hpp"

namespace handgen {

using nlohmann::json;

namespace {

// Thrown inside the per-line parser and rewrapped with the line number.
struct LineError {
  std::string what;
};

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw LineError{std::string("missing field \"") + key + "\""};
  return *it;
}

std::string require_string(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_string()) throw LineError{std::string("field \"") + key + "\" must be a string"};
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw LineError{std::string("field \"") + key + "\" must be a string or null"};
  return it->get<std::string>();
}

double require_number(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_number()) throw LineError{std::string("field \"") + key + "\" must be a number"};
  return v.get<double>();
}

JointMatrix parse_joints(const json& obj) {
  const json& arr = require(obj, "joints");
  if (!arr.is_array()) throw LineError{"field \"joints\" must be an array"};
  if (arr.size() != static_cast<std::size_t>(kNumJoints)) {
    throw LineError{"expected 21 joints, got " + std::to_string(arr.size())};
  }
  JointMatrix joints;
  for (int j = 0; j < kNumJoints; ++j) {
    const json& p = arr[static_cast<std::size_t>(j)];
    if (!p.is_array() || p.size() != 3) {
      throw LineError{"joint " + std::to_string(j) + " must be [x,y,z]"};
    }
    for (int k = 0; k < 3; ++k) {
      const json& c = p[static_cast<std::size_t>(k)];
      // nlohmann encodes NaN/Inf as null
      if (!c.is_number()) throw LineError{"joint " + std::to_string(j) + " has a non-finite coordinate"};
      double value = c.get<double>();
      if (!std::isfinite(value)) {
        throw LineError{"joint " + std::to_string(j) + " has a non-finite coordinate"};
      }
      joints(j, k) = value;
    }
  }
  return joints;
}

json joints_to_json(const JointMatrix& joints) {
  json arr = json::array();
  for (int j = 0; j < kNumJoints; ++j) arr.push_back({joints(j, 0), joints(j, 1), joints(j, 2)});
  return arr;
}

Frame parse_frame(const json& obj) {
  if (!obj.is_object()) throw LineError{"line is not a JSON object"};
  Frame f;
  f.frame_id = require_string(obj, "frame_id");
  f.skeleton.joints = parse_joints(obj);
  if (!f.skeleton.bones_nondegenerate()) throw LineError{"skeleton has a zero-length bone"};
  f.subject_id = require_string(obj, "subject_id");
  f.object_id = optional_string(obj, "object_id");
  f.sequence_id = optional_string(obj, "sequence_id");
  if (auto it = obj.find("time_index"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw LineError{"field \"time_index\" must be an integer or null"};
    f.time_index = it->get<long long>();
  }
  if (auto it = obj.find("intrinsics"); it != obj.end() && !it->is_null()) {
    if (!it->is_object()) throw LineError{"field \"intrinsics\" must be an object or null"};
    CameraIntrinsics k;
    k.fx = require_number(*it, "fx");
    k.fy = require_number(*it, "fy");
    k.cx = require_number(*it, "cx");
    k.cy = require_number(*it, "cy");
    const json& w = require(*it, "width");
    const json& h = require(*it, "height");
    if (!w.is_number_integer() || !h.is_number_integer()) throw LineError{"image size must be integers"};
    k.width = w.get<int>();
    k.height = h.get<int>();
    if (!k.valid()) throw LineError{"invalid camera intrinsics"};
    f.intrinsics = k;
  }
  return f;
}

template <typename Record, typename ParseFn>
std::vector<Record> parse_lines(std::istream& in, const std::string& source, ParseFn parse) {
  std::vector<Record> out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Record rec;
    try {
      rec = parse(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(source, line_no, e.what());
    } catch (const LineError& e) {
      throw ParseError(source, line_no, e.what);
    }
    if (!ids.insert(rec.frame_id).second) throw DuplicateFrameId(rec.frame_id);
    out.push_back(std::move(rec));
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

void check_sequences(const std::vector<Frame>& frames) {
  std::map<std::string, std::unordered_set<long long>> seen;
  for (const Frame& f : frames) {
    if (!f.sequence_id || !f.time_index) continue;
    if (!seen[*f.sequence_id].insert(*f.time_index).second) {
      throw ValidationError("sequence \"" + *f.sequence_id + "\" repeats time_index " +
                            std::to_string(*f.time_index));
    }
  }
}

}  // namespace

std::vector<Frame> parse_dataset(std::istream& in, const std::string& source) {
  auto frames = parse_lines<Frame>(in, source, parse_frame);
  check_sequences(frames);
  return frames;
}

std::vector<Frame> load_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_dataset(in, path.string());
}

std::vector<Prediction> parse_predictions(std::istream& in, const std::string& source) {
  return parse_lines<Prediction>(in, source, [](const json& obj) {
    if (!obj.is_object()) throw LineError{"line is not a JSON object"};
    Prediction p;
    p.frame_id = require_string(obj, "frame_id");
    p.joints = parse_joints(obj);
    return p;
  });
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_predictions(in, path.string());
}

std::string frame_to_json_line(const Frame& f) {
  json j;
  j["frame_id"] = f.frame_id;
  j["joints"] = joints_to_json(f.skeleton.joints);
  j["subject_id"] = f.subject_id;
  j["object_id"] = f.object_id ? json(*f.object_id) : json(nullptr);
  if (f.intrinsics) {
    const auto& k = *f.intrinsics;
    j["intrinsics"] = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx},
                       {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
  } else {
    j["intrinsics"] = nullptr;
  }
  j["sequence_id"] = f.sequence_id ? json(*f.sequence_id) : json(nullptr);
  j["time_index"] = f.time_index ? json(*f.time_index) : json(nullptr);
  return j.dump();
}

std::string prediction_to_json_line(const Prediction& p) {
  json j;
  j["frame_id"] = p.frame_id;
  j["joints"] = joints_to_json(p.joints);
  return j.dump();
}

void save_dataset(std::span<const Frame> frames, const std::filesystem::path& path) {
  std::string buf;
  for (const Frame& f : frames) {
    buf += frame_to_json_line(f);
    buf += '\n';
  }
  write_file_atomic(path, buf);
}

void save_predictions(std::span<const Prediction> preds, const std::filesystem::path& path) {
  std::string buf;
  for (const Prediction& p : preds) {
    buf += prediction_to_json_line(p);
    buf += '\n';
  }
  write_file_atomic(path, buf);
}

}  // namespace handgen
