#include "handgen/report_io.hpp"

#include <array>
#include <cstdio>

#include <json.hpp>

#include "handgen/file_util.hpp"

namespace handgen {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json curve_json(const SuccessCurve& c) { return json{{"rates", c.rates}, {"thresholds_mm", c.thresholds}}; }

SuccessCurve curve_from(const json& j) {
  return {j.at("thresholds_mm").get<std::vector<double>>(), j.at("rates").get<std::vector<double>>()};
}

json criterion_json(const CriterionReport& cr) {
  json breakdowns = json::object();
  for (const auto& [kind, rows] : cr.breakdowns) {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"count", r.count},
                     {"frames", r.frames},
                     {"label", r.label},
                     {"mje_mm", optional_number(r.mje_mm)},
                     {"seen", r.seen}});
    }
    breakdowns[kind] = arr;
  }
  const auto& s = cr.score;
  return json{{"breakdowns", breakdowns},
              {"coverage", {{"frames", s.frames}, {"matched", s.matched}, {"missing", s.missing}}},
              {"frame_curve", curve_json(s.frame_curve)},
              {"joint_curve", curve_json(s.joint_curve)},
              {"mje_mm", optional_number(s.mje_mm)}};
}

CriterionReport criterion_from(const json& j) {
  CriterionReport cr;
  for (const auto& [kind, rows] : j.at("breakdowns").items()) {
    auto& out = cr.breakdowns[kind];
    for (const auto& r : rows) {
      out.push_back({r.at("label").get<std::string>(), read_optional(r.at("mje_mm")), r.at("seen").get<bool>(),
                     r.at("frames").get<std::size_t>(), r.at("count").get<std::size_t>()});
    }
  }
  const json& cov = j.at("coverage");
  cr.score.frames = cov.at("frames").get<std::size_t>();
  cr.score.matched = cov.at("matched").get<std::size_t>();
  cr.score.missing = cov.at("missing").get<std::size_t>();
  cr.score.frame_curve = curve_from(j.at("frame_curve"));
  cr.score.joint_curve = curve_from(j.at("joint_curve"));
  cr.score.mje_mm = read_optional(j.at("mje_mm"));
  return cr;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  // nlohmann::json keeps object keys sorted, which fixes the byte layout.
  json methods = json::object();
  for (const auto& [name, rep] : report.methods) {
    json criteria = json::object();
    for (const auto& [c, cr] : rep.criteria) criteria[c] = criterion_json(cr);
    methods[name] = {{"criteria", criteria}, {"predictions", rep.predictions}};
  }
  json ranking = json::array();
  for (const auto& e : report.ranking) {
    ranking.push_back({{"extrapolation_mje_mm", e.extrapolation_mje},
                       {"interpolation_mje_mm", optional_number(e.interpolation_mje)},
                       {"method", e.method}});
  }
  const json j{{"methods", methods}, {"ranking", ranking}, {"thresholds_mm", report.thresholds}};
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    r.thresholds = j.at("thresholds_mm").get<std::vector<double>>();
    for (const auto& [name, m] : j.at("methods").items()) {
      MethodReport& mr = r.methods[name];
      mr.predictions = m.at("predictions").get<std::size_t>();
      for (const auto& [c, cr] : m.at("criteria").items()) mr.criteria[c] = criterion_from(cr);
    }
    for (const auto& e : j.at("ranking")) {
      r.ranking.push_back({e.at("method").get<std::string>(), e.at("extrapolation_mje_mm").get<double>(),
                           read_optional(e.at("interpolation_mje_mm"))});
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad report: ") + e.what());
  }
}

void save_report(const EvalReport& report, const std::filesystem::path& path) {
  write_file_atomic(path, report_to_json(report));
}

EvalReport load_report(const std::filesystem::path& path) { return report_from_json(read_file(path)); }

std::string curve_to_csv(const SuccessCurve& curve) {
  std::string out = "threshold_mm,success_rate\n";
  char buf[64];
  for (std::size_t i = 0; i < curve.rates.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g\n", curve.thresholds[i], curve.rates[i]);
    out += buf;
  }
  return out;
}

std::vector<std::filesystem::path> write_curve_csvs(const EvalReport& report, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  for (const auto& [method, rep] : report.methods) {
    for (const auto& [criterion, cr] : rep.criteria) {
      const std::array<std::pair<const char*, const SuccessCurve*>, 2> curves = {
          {{"frame", &cr.score.frame_curve}, {"joint", &cr.score.joint_curve}}};
      for (const auto& [kind, curve] : curves) {
        auto path = dir / (method + "_" + criterion + "_" + kind + ".csv");
        write_file_atomic(path, curve_to_csv(*curve));
        written.push_back(std::move(path));
      }
    }
  }
  return written;
}

}  // namespace handgen
