#include "ahx/scenario.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ahx {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& ptr, const std::string& msg) {
  throw Error(ErrorCode::kSchema, (ptr.empty() ? std::string("/") : ptr) + ": " + msg);
}

void check_keys(const json& o, const std::string& ptr, const std::set<std::string>& allowed) {
  if (!o.is_object()) schema_error(ptr, "expected an object");
  for (const auto& [k, v] : o.items()) {
    (void)v;
    if (!allowed.count(k)) schema_error(ptr + "/" + k, "unknown key");
  }
}

double get_num(const json& o, const std::string& ptr, const char* key, double def, bool positive = false,
               bool nonneg = false) {
  if (!o.contains(key)) return def;
  const json& v = o.at(key);
  const std::string p = ptr + "/" + key;
  if (!v.is_number()) schema_error(p, "expected a number");
  const double d = v.get<double>();
  if (positive && !(d > 0.0)) schema_error(p, "must be positive");
  if (nonneg && !(d >= 0.0)) schema_error(p, "must be non-negative");
  return d;
}

int get_int(const json& o, const std::string& ptr, const char* key, int def, int min_value) {
  if (!o.contains(key)) return def;
  const json& v = o.at(key);
  const std::string p = ptr + "/" + key;
  if (!v.is_number_integer()) schema_error(p, "expected an integer");
  const long long d = v.get<long long>();
  if (d < min_value) schema_error(p, "must be at least " + std::to_string(min_value));
  if (d > 1000000) schema_error(p, "too large");
  return static_cast<int>(d);
}

bool get_bool(const json& o, const std::string& ptr, const char* key, bool def) {
  if (!o.contains(key)) return def;
  if (!o.at(key).is_boolean()) schema_error(ptr + "/" + key, "expected a boolean");
  return o.at(key).get<bool>();
}

std::string get_str(const json& o, const std::string& ptr, const char* key, const std::string& def) {
  if (!o.contains(key)) return def;
  if (!o.at(key).is_string()) schema_error(ptr + "/" + key, "expected a string");
  return o.at(key).get<std::string>();
}

const json& section(const json& root, const char* key) {
  static const json empty = json::object();
  return root.contains(key) ? root.at(key) : empty;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    schema_error("", std::string("invalid JSON: ") + e.what());
  }
  check_keys(root, "", {"name", "family", "connection", "operator", "quadrature", "grid", "assembly", "schur",
                        "samples", "output", "seed"});
  Scenario sc;
  sc.name = get_str(root, "", "name", "scenario");

  {
    const json& f = section(root, "family");
    const std::string p = "/family";
    check_keys(f, p, {"name", "n", "order", "amplitude", "center", "width", "extent", "collar_depth"});
    sc.family.name = get_str(f, p, "name", "hyperbolic");
    static const std::set<std::string> known{"hyperbolic", "even_quadratic", "n5_bump", "odd5_bump", "n3_bump"};
    if (!known.count(sc.family.name)) schema_error(p + "/name", "unknown family '" + sc.family.name + "'");
    sc.family.n = get_int(f, p, "n", 2, 1);
    if (sc.family.n + 1 > kMaxDim) schema_error(p + "/n", "n + 1 must not exceed " + std::to_string(kMaxDim));
    if (f.contains("order")) sc.family.order = get_int(f, p, "order", 0, 0);
    sc.family.amplitude = get_num(f, p, "amplitude", 1.0);
    sc.family.width = get_num(f, p, "width", 0.5);
    sc.family.extent = get_num(f, p, "extent", 1.0, true);
    sc.family.collar_depth = get_num(f, p, "collar_depth", 1.0, true);
    if (f.contains("center")) {
      const json& c = f.at("center");
      if (!c.is_array() || static_cast<int>(c.size()) != sc.family.n) {
        schema_error(p + "/center", "expected an array of n numbers");
      }
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (!c[i].is_number()) schema_error(p + "/center/" + std::to_string(i), "expected a number");
        sc.family.center.push_back(c[i].get<double>());
      }
    }
  }
  {
    const json& c = section(root, "connection");
    check_keys(c, "/connection", {"eps0"});
    sc.eps0 = get_num(c, "/connection", "eps0", 1.0, true);
  }
  {
    const json& o = section(root, "operator");
    const std::string p = "/operator";
    check_keys(o, p, {"sigma", "eta", "M", "q", "c0", "delta1", "delta2", "C_tilde"});
    sc.sigma = get_num(o, p, "sigma", 1.0, true);
    sc.M = get_num(o, p, "M", 1.0, true);
    sc.q = get_num(o, p, "q", 0.25, true);
    sc.loc.c0 = get_num(o, p, "c0", sc.loc.c0, true);
    sc.loc.delta1 = get_num(o, p, "delta1", sc.loc.delta1, true);
    sc.loc.delta2 = get_num(o, p, "delta2", sc.loc.delta2, true);
    sc.loc.C_tilde = get_num(o, p, "C_tilde", sc.loc.C_tilde, true);
    if (o.contains("eta")) {
      const json& e = o.at("eta");
      if (!e.is_array() || e.empty()) schema_error(p + "/eta", "expected a non-empty array");
      sc.etas.clear();
      for (std::size_t i = 0; i < e.size(); ++i) {
        const std::string pi = p + "/eta/" + std::to_string(i);
        if (!e[i].is_number()) schema_error(pi, "expected a number");
        const double v = e[i].get<double>();
        if (!(v >= 0.0)) schema_error(pi, "must be non-negative");
        if (!sc.etas.empty() && !(v < sc.etas.back())) schema_error(pi, "eta list must be sorted descending");
        sc.etas.push_back(v);
      }
    }
  }
  {
    const json& q = section(root, "quadrature");
    const std::string p = "/quadrature";
    check_keys(q, p, {"n_polar", "n_azimuth", "kernel_n_s", "kernel_n_azimuth", "nodes_per_panel", "max_panels",
                      "cells_per_panel", "exp_cutoff"});
    sc.sphere.n_polar = get_int(q, p, "n_polar", sc.sphere.n_polar, 2);
    sc.sphere.n_azimuth = get_int(q, p, "n_azimuth", sc.sphere.n_azimuth, 2);
    sc.kq.n_s = get_int(q, p, "kernel_n_s", sc.kq.n_s, 2);
    sc.kq.n_azimuth = get_int(q, p, "kernel_n_azimuth", sc.kq.n_azimuth, 2);
    sc.kq.nodes_per_panel = get_int(q, p, "nodes_per_panel", sc.kq.nodes_per_panel, 1);
    sc.kq.max_panels = get_int(q, p, "max_panels", sc.kq.max_panels, 1);
    sc.kq.cells_per_panel = get_num(q, p, "cells_per_panel", sc.kq.cells_per_panel, true);
    sc.kq.exp_cutoff = get_num(q, p, "exp_cutoff", sc.kq.exp_cutoff, true);
  }
  {
    const json& g = section(root, "grid");
    const std::string p = "/grid";
    check_keys(g, p, {"nx", "ny", "x_lo", "x_hi", "y_extent"});
    sc.grid_nx = get_int(g, p, "nx", sc.grid_nx, 2);
    sc.grid_ny = get_int(g, p, "ny", sc.grid_ny, 2);
    sc.grid_x_lo = get_num(g, p, "x_lo", sc.grid_x_lo, true);
    sc.grid_x_hi = get_num(g, p, "x_hi", sc.grid_x_hi, true);
    sc.grid_y_extent = get_num(g, p, "y_extent", sc.grid_y_extent, true);
    if (!(sc.grid_x_hi > sc.grid_x_lo)) schema_error(p + "/x_hi", "must exceed x_lo");
  }
  {
    const json& a = section(root, "assembly");
    const std::string p = "/assembly";
    check_keys(a, p, {"nodes", "method"});
    sc.assembly_nodes = get_int(a, p, "nodes", sc.assembly_nodes, 3);
    const std::string m = get_str(a, p, "method", "sphere");
    if (m == "sphere") sc.assembly_method = AssemblyMethod::kSphere;
    else if (m == "kernel") sc.assembly_method = AssemblyMethod::kKernel;
    else schema_error(p + "/method", "expected \"sphere\" or \"kernel\"");
  }
  {
    const json& s = section(root, "schur");
    const std::string p = "/schur";
    check_keys(s, p, {"left_samples_x", "left_samples_y", "right_samples_x", "right_samples_y", "full_evaluation",
                      "fd_rel_step", "panels"});
    sc.schur.left_samples_x = get_int(s, p, "left_samples_x", sc.schur.left_samples_x, 1);
    sc.schur.left_samples_y = get_int(s, p, "left_samples_y", sc.schur.left_samples_y, 1);
    sc.schur.right_samples_x = get_int(s, p, "right_samples_x", sc.schur.right_samples_x, 1);
    sc.schur.right_samples_y = get_int(s, p, "right_samples_y", sc.schur.right_samples_y, 1);
    sc.schur.full_evaluation = get_bool(s, p, "full_evaluation", false);
    sc.schur.fd_rel_step = get_num(s, p, "fd_rel_step", sc.schur.fd_rel_step, true);
    sc.schur.panels = get_int(s, p, "panels", sc.schur.panels, 0);
  }
  {
    const json& s = section(root, "samples");
    const std::string p = "/samples";
    check_keys(s, p, {"geodesics", "xray", "convexity_points", "convexity_dirs"});
    sc.geodesic_count = get_int(s, p, "geodesics", sc.geodesic_count, 0);
    sc.xray_count = get_int(s, p, "xray", sc.xray_count, 0);
    sc.convexity_points = get_int(s, p, "convexity_points", sc.convexity_points, 0);
    sc.convexity_dirs = get_int(s, p, "convexity_dirs", sc.convexity_dirs, 0);
  }
  sc.output_dir = get_str(root, "", "output", sc.output_dir);
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_unsigned()) schema_error("/seed", "expected a non-negative integer");
    sc.seed = root.at("seed").get<std::uint64_t>();
  }
  // building the family validates the remaining combinations
  try {
    make_family(sc.family);
  } catch (const Error& e) {
    schema_error("/family", e.what());
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kSchema, path + ": cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string Scenario::to_json() const {
  json j;
  j["name"] = name;
  json f;
  f["name"] = family.name;
  f["n"] = family.n;
  if (family.order) f["order"] = *family.order;
  f["amplitude"] = family.amplitude;
  f["width"] = family.width;
  f["extent"] = family.extent;
  f["collar_depth"] = family.collar_depth;
  if (!family.center.empty()) f["center"] = family.center;
  j["family"] = f;
  j["connection"] = {{"eps0", eps0}};
  j["operator"] = {{"sigma", sigma}, {"eta", etas},           {"M", M},
                   {"q", q},         {"c0", loc.c0},          {"delta1", loc.delta1},
                   {"delta2", loc.delta2}, {"C_tilde", loc.C_tilde}};
  j["quadrature"] = {{"n_polar", sphere.n_polar},       {"n_azimuth", sphere.n_azimuth},
                     {"kernel_n_s", kq.n_s},            {"kernel_n_azimuth", kq.n_azimuth},
                     {"nodes_per_panel", kq.nodes_per_panel}, {"max_panels", kq.max_panels},
                     {"cells_per_panel", kq.cells_per_panel}, {"exp_cutoff", kq.exp_cutoff}};
  j["grid"] = {{"nx", grid_nx}, {"ny", grid_ny}, {"x_lo", grid_x_lo}, {"x_hi", grid_x_hi}, {"y_extent", grid_y_extent}};
  j["assembly"] = {{"nodes", assembly_nodes},
                   {"method", assembly_method == AssemblyMethod::kSphere ? "sphere" : "kernel"}};
  j["schur"] = {{"left_samples_x", schur.left_samples_x},   {"left_samples_y", schur.left_samples_y},
                {"right_samples_x", schur.right_samples_x}, {"right_samples_y", schur.right_samples_y},
                {"full_evaluation", schur.full_evaluation}, {"fd_rel_step", schur.fd_rel_step},
                {"panels", schur.panels}};
  j["samples"] = {{"geodesics", geodesic_count},
                  {"xray", xray_count},
                  {"convexity_points", convexity_points},
                  {"convexity_dirs", convexity_dirs}};
  j["seed"] = seed;
  return j.dump();
}

std::string Scenario::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_json()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

NormalOperatorConfig Scenario::operator_config(double eta) const {
  NormalOperatorConfig cfg;
  cfg.chi.M = M;
  cfg.sigma = sigma;
  cfg.boundary.q = q;
  cfg.boundary.eta = eta;
  if (!family.center.empty()) {
    cfg.boundary.y_p = Vec(n());
    for (int a = 0; a < n(); ++a) cfg.boundary.y_p[a] = family.center[a];
  }
  cfg.loc = loc;
  cfg.sphere = sphere;
  cfg.kq = kq;
  cfg.grid.n = n();
  cfg.grid.nx = grid_nx;
  cfg.grid.ny = grid_ny;
  cfg.grid.x_lo = grid_x_lo;
  cfg.grid.x_hi = grid_x_hi;
  cfg.grid.y_lo = Vec::Constant(n(), -grid_y_extent);
  cfg.grid.y_hi = Vec::Constant(n(), grid_y_extent);
  cfg.validate();
  return cfg;
}

NormalOperatorConfig Scenario::assembly_config() const {
  const double eta = etas.back();
  if (!(eta > 0.0)) throw Error(ErrorCode::kSchema, "/operator/eta: assembly needs a positive smallest eta");
  NormalOperatorConfig cfg = operator_config(eta);
  const int m = assembly_nodes;
  const double Y = std::sqrt(eta / q);
  cfg.grid.nx = m;
  cfg.grid.ny = m;
  cfg.grid.x_lo = eta / (2.0 * m);
  cfg.grid.x_hi = eta;
  const Vec c = cfg.boundary.center(n());
  cfg.grid.y_lo = c - Vec::Constant(n(), Y);
  cfg.grid.y_hi = c + Vec::Constant(n(), Y);
  cfg.validate();
  return cfg;
}

}  // namespace ahx
