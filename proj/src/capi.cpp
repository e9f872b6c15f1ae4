#include "ahx/ahx.h"

#include "ahx/blowup.hpp"
#include "ahx/scenario.hpp"
#include "ahx/xray.hpp"

#include <cstring>
#include <memory>
#include <new>

struct ahx_scenario {
  ahx::Scenario sc;
};

struct ahx_model {
  std::shared_ptr<const ahx::ChristoffelField> field;
  std::unique_ptr<ahx::NormalOperator> op;
  ahx::Vec center;
  int dim = 0;
};

struct ahx_report {
  ahx::RunReport rep;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_operation;

ahx_status fail(ahx_status s, const std::string& msg) {
  g_error = msg;
  return s;
}

template <class F>
ahx_status wrap(F&& fn) {
  g_error.clear();
  g_operation.clear();
  try {
    fn();
    return AHX_OK;
  } catch (const ahx::RunError& e) {
    g_operation = e.operation();
    return fail(static_cast<ahx_status>(e.code()), e.what());
  } catch (const ahx::Error& e) {
    return fail(static_cast<ahx_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(AHX_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(AHX_ERR_INTERNAL, e.what());
  }
}

ahx::Vec to_vec(const double* p, int dim) {
  ahx::Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = p[i];
  return v;
}

void from_vec(const ahx::Vec& v, double* out) {
  for (int i = 0; i < v.size(); ++i) out[i] = v[i];
}

ahx_status copy_string(const std::string& s, char* buf, size_t len) {
  if (!buf || len == 0) return fail(AHX_ERR_INVALID_ARGUMENT, "null or empty buffer");
  if (s.size() + 1 > len) return fail(AHX_ERR_INVALID_ARGUMENT, "buffer too small");
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return AHX_OK;
}

#define AHX_REQUIRE(cond)                                                     \
  do {                                                                        \
    if (!(cond)) return fail(AHX_ERR_INVALID_ARGUMENT, "null argument: " #cond); \
  } while (0)

}  // namespace

extern "C" {

const char* ahx_version(void) { return "1.0.0"; }
const char* ahx_last_error(void) { return g_error.c_str(); }
const char* ahx_last_operation(void) { return g_operation.c_str(); }

const char* ahx_status_name(ahx_status status) {
  if (status == AHX_ERR_INTERNAL) return "internal";
  return ahx::to_string(static_cast<ahx::ErrorCode>(status));
}

ahx_status ahx_scenario_load(const char* path, ahx_scenario** out) {
  AHX_REQUIRE(path && out);
  *out = nullptr;
  return wrap([&] { *out = new ahx_scenario{ahx::load_scenario(path)}; });
}

ahx_status ahx_scenario_parse(const char* json_text, ahx_scenario** out) {
  AHX_REQUIRE(json_text && out);
  *out = nullptr;
  return wrap([&] { *out = new ahx_scenario{ahx::parse_scenario(json_text)}; });
}

void ahx_scenario_free(ahx_scenario* sc) { delete sc; }

ahx_status ahx_scenario_hash(const ahx_scenario* sc, char* buf, size_t len) {
  AHX_REQUIRE(sc);
  return copy_string(sc->sc.hash(), buf, len);
}

ahx_status ahx_scenario_name(const ahx_scenario* sc, char* buf, size_t len) {
  AHX_REQUIRE(sc);
  return copy_string(sc->sc.name, buf, len);
}

size_t ahx_subcommand_count(void) { return ahx::subcommand_names().size(); }

const char* ahx_subcommand_name(size_t index) {
  const auto& names = ahx::subcommand_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

ahx_status ahx_run(const ahx_scenario* sc, const char* subcommand, const char* out_dir, int threads, uint64_t seed,
                   int seed_set, ahx_report** report) {
  AHX_REQUIRE(sc && subcommand);
  if (report) *report = nullptr;
  return wrap([&] {
    ahx::RunOptions opts;
    opts.out_dir = out_dir ? out_dir : "";
    opts.threads = threads;
    opts.seed = seed;
    opts.seed_set = seed_set != 0;
    ahx::RunReport rep = ahx::run_subcommand(sc->sc, subcommand, opts);
    if (report) *report = new ahx_report{std::move(rep)};
  });
}

size_t ahx_report_file_count(const ahx_report* rep) { return rep ? rep->rep.files.size() : 0; }
const char* ahx_report_file(const ahx_report* rep, size_t i) {
  return rep && i < rep->rep.files.size() ? rep->rep.files[i].c_str() : nullptr;
}
size_t ahx_report_note_count(const ahx_report* rep) { return rep ? rep->rep.notes.size() : 0; }
const char* ahx_report_note(const ahx_report* rep, size_t i) {
  return rep && i < rep->rep.notes.size() ? rep->rep.notes[i].c_str() : nullptr;
}
void ahx_report_free(ahx_report* rep) { delete rep; }

ahx_status ahx_model_from_scenario(const ahx_scenario* sc, double eta, ahx_model** out) {
  AHX_REQUIRE(sc && out);
  *out = nullptr;
  return wrap([&] {
    auto m = std::make_unique<ahx_model>();
    const auto family = ahx::make_family(sc->sc.family);
    m->field = ahx::projective_field(ahx::to_even_structure(*family), sc->sc.eps0);
    const ahx::NormalOperatorConfig cfg = sc->sc.operator_config(eta);
    m->op = std::make_unique<ahx::NormalOperator>(m->field, cfg);
    m->center = cfg.boundary.center(sc->sc.n());
    m->dim = sc->sc.n() + 1;
    *out = m.release();
  });
}

void ahx_model_free(ahx_model* m) { delete m; }
int ahx_model_dim(const ahx_model* m) { return m ? m->dim : 0; }

ahx_status ahx_exp_map(const ahx_model* m, const double* z, const double* v, double* out_z) {
  AHX_REQUIRE(m && z && v && out_z);
  return wrap([&] { from_vec(ahx::exp_map(*m->field, to_vec(z, m->dim), to_vec(v, m->dim)), out_z); });
}

ahx_status ahx_inverse_exp(const ahx_model* m, const double* z, const double* zt, double* out_v) {
  AHX_REQUIRE(m && z && zt && out_v);
  return wrap([&] {
    ahx::InverseExpOptions o;
    o.need_jacobian = false;
    from_vec(ahx::inverse_exp(*m->field, to_vec(z, m->dim), to_vec(zt, m->dim), o).v, out_v);
  });
}

ahx_status ahx_kernel(const ahx_model* m, const double* z, const double* zt, double* out_value) {
  AHX_REQUIRE(m && z && zt && out_value);
  return wrap([&] { *out_value = m->op->kernel(to_vec(z, m->dim), to_vec(zt, m->dim)).value; });
}

ahx_status ahx_lifted_kernel(const ahx_model* m, double x, const double* y, double R, const double* theta,
                             double* out_value) {
  AHX_REQUIRE(m && y && theta && out_value);
  return wrap([&] {
    const auto pt = ahx::make_blowup_point(x, to_vec(y, m->dim - 1), R, to_vec(theta, m->dim));
    *out_value = ahx::lifted_kernel(*m->op, pt).value;
  });
}

ahx_status ahx_diagonal_limit(const ahx_model* m, double x, const double* theta, double* out_value) {
  AHX_REQUIRE(m && theta && out_value);
  return wrap([&] { *out_value = ahx::diagonal_limit(x, to_vec(theta, m->dim), m->op->config().chi); });
}

ahx_status ahx_xray_bump(const ahx_model* m, int k, double rho_support, double width, const double* z,
                         const double* v, double* out_value) {
  AHX_REQUIRE(m && z && v && out_value);
  return wrap([&] {
    const auto f = ahx::in_r_coordinates(ahx::bump_function(m->dim - 1, k, rho_support, m->center, width));
    *out_value = ahx::xray_connection(*m->field, f, to_vec(z, m->dim), to_vec(v, m->dim)).value;
  });
}

}  // extern "C"
