#include "mspi/system_io.hpp"

#include <string>

#include "mspi/bench.hpp"
#include "mspi/errors.hpp"

namespace mspi {

using nlohmann::json;

Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw ConfigError(std::string(what) + ": expected a nested array");
  }
  const auto rows = j.size();
  const auto cols = j.front().size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(std::string(what) + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(std::string(what) + ": non-numeric entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

Vector vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string(what) + ": non-numeric entry");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

NoiseSpec noise_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("noise: missing \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant-plus-ellipsoid") {
    return make_ellipsoid_noise(SymMat(matrix_from_json(j.at("v_moment"), "noise.v_moment")));
  }
  if (kind == "gaussian") {
    return make_gaussian_noise(vector_from_json(j.at("mean"), "noise.mean"),
                               SymMat(matrix_from_json(j.at("cov"), "noise.cov")));
  }
  if (kind == "custom-table") {
    std::vector<Vector> values;
    for (const auto& v : j.at("values")) values.push_back(vector_from_json(v, "noise.values"));
    return make_table_noise(std::move(values), j.at("probabilities").get<std::vector<double>>());
  }
  throw ConfigError("noise: unknown kind \"" + kind + "\"");
}

json noise_to_json(const NoiseSpec& spec) {
  if (const auto* e = std::get_if<EllipsoidNoise>(&spec)) {
    return {{"kind", "constant-plus-ellipsoid"}, {"v_moment", matrix_to_json(e->v_moment.mat())}};
  }
  if (const auto* g = std::get_if<GaussianNoise>(&spec)) {
    return {{"kind", "gaussian"},
            {"mean", std::vector<double>(g->mean.data(), g->mean.data() + g->mean.size())},
            {"cov", matrix_to_json(g->cov.mat())}};
  }
  const auto& t = std::get<TableNoise>(spec);
  json values = json::array();
  for (const auto& v : t.values) values.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  return {{"kind", "custom-table"}, {"values", values}, {"probabilities", t.probabilities}};
}

}  // namespace

MsSystem system_from_json(const json& j) {
  try {
    if (j.contains("preset")) {
      const std::string name = j.at("preset").get<std::string>();
      if (name == "satellite") return satellite_system();
      throw ConfigError("system: unknown preset \"" + name + "\"");
    }
    std::vector<Mode> modes;
    for (const auto& m : j.at("modes")) {
      modes.push_back(Mode{matrix_from_json(m.at("A"), "mode.A"), matrix_from_json(m.at("B"), "mode.B")});
    }
    NoiseSpec noise = noise_from_json(j.at("noise"));
    const SymMat implied = second_moment(noise);
    if (j.contains("W")) {
      SymMat W(matrix_from_json(j.at("W"), "W"));
      if (W.dim() != implied.dim() || (W - implied).norm() > 1e-9 * std::max(1.0, implied.norm())) {
        throw ConfigError("system: W does not match the noise second moment");
      }
      return MsSystem(std::move(modes), std::move(noise), std::move(W));
    }
    return MsSystem(std::move(modes), std::move(noise), implied);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("system: ") + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
}

json system_to_json(const MsSystem& sys) {
  json modes = json::array();
  for (const Mode& m : sys.modes()) modes.push_back({{"A", matrix_to_json(m.A)}, {"B", matrix_to_json(m.B)}});
  return {{"modes", modes}, {"noise", noise_to_json(sys.noise())}, {"W", matrix_to_json(sys.W().mat())}};
}

}  // namespace mspi
