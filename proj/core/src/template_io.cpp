#include <json.hpp>

#include "handgen/errors.hpp"
#include "handgen/file_util.hpp"
#include "handgen/hand_model.hpp"

namespace handgen {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "handgen-template";
constexpr int kVersion = 1;

json matrix_rows(const VertexMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return rows;
}

VertexMatrix rows_matrix(const json& rows) {
  VertexMatrix m(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows.at(i);
    if (r.size() != 3) throw ValidationError("template: expected 3-vectors");
    for (std::size_t k = 0; k < 3; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = r.at(k).get<double>();
  }
  return m;
}

json sparse_rows(const SparseRowMatrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.outerSize(); ++r) {
    json row = json::array();
    for (SparseRowMatrix::InnerIterator it(m, r); it; ++it) row.push_back({it.col(), it.value()});
    rows.push_back(std::move(row));
  }
  return rows;
}

SparseRowMatrix rows_sparse(const json& rows, Eigen::Index cols) {
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& e : rows.at(r)) {
      const auto c = e.at(0).get<Eigen::Index>();
      if (c < 0 || c >= cols) throw ValidationError("template: sparse column out of range");
      trip.emplace_back(static_cast<int>(r), static_cast<int>(c), e.at(1).get<double>());
    }
  }
  SparseRowMatrix m(static_cast<Eigen::Index>(rows.size()), cols);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace

std::string template_to_json(const TemplateMesh& tpl) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["vertices"] = matrix_rows(tpl.vertices());
  json faces = json::array();
  for (Eigen::Index i = 0; i < tpl.faces().rows(); ++i) {
    faces.push_back({tpl.faces()(i, 0), tpl.faces()(i, 1), tpl.faces()(i, 2)});
  }
  j["faces"] = std::move(faces);
  json basis = json::array();
  for (const auto& b : tpl.shape_basis()) basis.push_back(matrix_rows(b));
  j["shape_basis"] = std::move(basis);
  j["skinning"] = sparse_rows(tpl.skinning());
  j["regressor"] = sparse_rows(tpl.regressor());
  return j.dump();
}

TemplateMesh template_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != kFormat || j.at("version") != kVersion) {
      throw ValidationError("not a handgen-template v1 file");
    }
    VertexMatrix v = rows_matrix(j.at("vertices"));
    const json& fj = j.at("faces");
    FaceMatrix f(static_cast<Eigen::Index>(fj.size()), 3);
    for (std::size_t i = 0; i < fj.size(); ++i) {
      for (std::size_t k = 0; k < 3; ++k) f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = fj.at(i).at(k).get<int>();
    }
    const json& bj = j.at("shape_basis");
    if (bj.size() != kShapeDim) throw ValidationError("template: shape basis must have 10 directions");
    std::array<VertexMatrix, kShapeDim> basis;
    for (std::size_t k = 0; k < kShapeDim; ++k) basis[k] = rows_matrix(bj.at(k));
    SparseRowMatrix w = rows_sparse(j.at("skinning"), kNumBones);
    SparseRowMatrix r = rows_sparse(j.at("regressor"), v.rows());
    return TemplateMesh(std::move(v), std::move(f), std::move(basis), std::move(w), std::move(r));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("template: ") + e.what());
  }
}

void save_template(const TemplateMesh& tpl, const std::filesystem::path& path) {
  write_file_atomic(path, template_to_json(tpl));
}

TemplateMesh load_template(const std::filesystem::path& path) { return template_from_json(read_file(path)); }

}  // namespace handgen
