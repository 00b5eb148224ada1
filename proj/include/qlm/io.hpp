#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "qlm/functionals.hpp"

namespace qlm {

using Json = nlohmann::json;

/// On-disk surface data: grid size, sigma, |H|, alpha_H, optional tau and
/// free-form metadata. Arrays are flattened theta-major (index i * n_phi + j).
struct SurfaceDataFile {
  SurfaceData data;
  std::optional<TimeFunction> tau;
  Json metadata = Json::object();
};

namespace detail {

inline Json array_to_json(const Array& a) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.push_back(a(i, j));
  return out;
}

inline const Json& json_at(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw InputError("missing field '" + where + key + "'");
  return j.at(key);
}

inline Array array_from_json(const Json& j, const GridPtr& g, const std::string& name) {
  if (!j.is_array()) throw InputError("field '" + name + "' is not an array");
  const auto n = static_cast<std::size_t>(g->n_theta()) * g->n_phi();
  if (j.size() != n)
    throw ShapeError("field '" + name + "' has " + std::to_string(j.size()) + " entries, expected " +
                     std::to_string(n));
  Array a(g->n_theta(), g->n_phi());
  for (int i = 0; i < g->n_theta(); ++i)
    for (int k = 0; k < g->n_phi(); ++k) {
      const Json& v = j[static_cast<std::size_t>(i) * g->n_phi() + k];
      if (!v.is_number())
        throw InputError("field '" + name + "' entry " + std::to_string(i * g->n_phi() + k) + " is not a number");
      a(i, k) = v.get<double>();
    }
  return a;
}

}  // namespace detail

inline Json to_json(const SurfaceDataFile& f) {
  const auto& d = f.data;
  const auto& g = *d.grid();
  Json j;
  j["grid"] = {{"n_theta", g.n_theta()}, {"n_phi", g.n_phi()}};
  j["sigma"] = {{"tt", detail::array_to_json(d.sigma.tt())},
                {"tp", detail::array_to_json(d.sigma.tp())},
                {"pp", detail::array_to_json(d.sigma.pp())}};
  j["H_norm"] = detail::array_to_json(d.H_norm.values);
  j["alpha_H"] = {{"t", detail::array_to_json(d.alpha_H.t)}, {"p", detail::array_to_json(d.alpha_H.p)}};
  if (f.tau) j["tau"] = detail::array_to_json(f.tau->tau.values);
  j["metadata"] = f.metadata;
  return j;
}

/// Parse and validate. Invariant violations surface as ShapeError or
/// PreconditionError (with the node); structural problems as InputError.
inline SurfaceDataFile surface_from_json(const Json& j) {
  const Json& grid = detail::json_at(j, "grid", "");
  const Json& nt = detail::json_at(grid, "n_theta", "grid.");
  const Json& np = detail::json_at(grid, "n_phi", "grid.");
  if (!nt.is_number_integer() || !np.is_number_integer()) throw InputError("grid sizes must be integers");
  GridPtr g;
  try {
    g = SphereGrid::make(nt.get<int>(), np.get<int>());
  } catch (const Error& e) {
    throw InputError(std::string("invalid grid: ") + e.what());
  }
  const Json& s = detail::json_at(j, "sigma", "");
  const Json& a = detail::json_at(j, "alpha_H", "");
  SurfaceDataFile f;
  f.data = SurfaceData(Metric2(g, detail::array_from_json(detail::json_at(s, "tt", "sigma."), g, "sigma.tt"),
                               detail::array_from_json(detail::json_at(s, "tp", "sigma."), g, "sigma.tp"),
                               detail::array_from_json(detail::json_at(s, "pp", "sigma."), g, "sigma.pp")),
                       ScalarField(g, detail::array_from_json(detail::json_at(j, "H_norm", ""), g, "H_norm")),
                       OneForm(g, detail::array_from_json(detail::json_at(a, "t", "alpha_H."), g, "alpha_H.t"),
                               detail::array_from_json(detail::json_at(a, "p", "alpha_H."), g, "alpha_H.p")));
  if (j.contains("tau") && !j["tau"].is_null())
    f.tau = TimeFunction{ScalarField(g, detail::array_from_json(j["tau"], g, "tau"))};
  if (j.contains("metadata")) f.metadata = j["metadata"];
  return f;
}

inline std::string dump_json(const Json& j) { return j.dump(1) + "\n"; }

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << dump_json(j);
  if (!out) throw InputError("write to '" + path + "' failed");
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

inline void write_surface_file(const std::string& path, const SurfaceDataFile& f) { write_json_file(path, to_json(f)); }
inline SurfaceDataFile read_surface_file(const std::string& path) { return surface_from_json(read_json_file(path)); }

}  // namespace qlm
