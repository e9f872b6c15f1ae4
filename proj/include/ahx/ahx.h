#ifndef AHX_H
#define AHX_H

/* C interface to the ahx library. Objects are opaque handles released with their
   *_free function. Every call returns an ahx_status; on failure ahx_last_error()
   describes the problem for the calling thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AHX_API __declspec(dllexport)
#else
#define AHX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ahx_status {
  AHX_OK = 0,
  AHX_ERR_DOMAIN = 1,
  AHX_ERR_INCONSISTENT = 2,
  AHX_ERR_SINGULAR_METRIC = 3,
  AHX_ERR_REJECTED = 4,
  AHX_ERR_EXTENSION = 5,
  AHX_ERR_STIFF = 6,
  AHX_ERR_SHOOTING = 7,
  AHX_ERR_EXCLUDED_GEODESIC = 8,
  AHX_ERR_REPARAMETRIZATION = 9,
  AHX_ERR_SCHEMA = 10,
  AHX_ERR_NUMERICAL = 11,
  AHX_ERR_INVALID_ARGUMENT = 12,
  AHX_ERR_INTERNAL = 99
} ahx_status;

typedef struct ahx_scenario ahx_scenario;
typedef struct ahx_model ahx_model;
typedef struct ahx_report ahx_report;

AHX_API const char* ahx_version(void);
/* Message of the last failed call on this thread ("" if none). */
AHX_API const char* ahx_last_error(void);
/* Operation named by the last failed ahx_run on this thread ("" if none). */
AHX_API const char* ahx_last_operation(void);
AHX_API const char* ahx_status_name(ahx_status status);

/* Scenarios */
AHX_API ahx_status ahx_scenario_load(const char* path, ahx_scenario** out);
AHX_API ahx_status ahx_scenario_parse(const char* json_text, ahx_scenario** out);
AHX_API void ahx_scenario_free(ahx_scenario* sc);
/* Copies the configuration hash (hex, NUL-terminated) into buf. */
AHX_API ahx_status ahx_scenario_hash(const ahx_scenario* sc, char* buf, size_t len);
AHX_API ahx_status ahx_scenario_name(const ahx_scenario* sc, char* buf, size_t len);

/* Subcommand names, index 0..count-1. */
AHX_API size_t ahx_subcommand_count(void);
AHX_API const char* ahx_subcommand_name(size_t index);

/* Runs a subcommand. out_dir NULL or "" uses the scenario's output directory;
   seed is used only when seed_set is nonzero. report may be NULL. */
AHX_API ahx_status ahx_run(const ahx_scenario* sc, const char* subcommand, const char* out_dir, int threads,
                           uint64_t seed, int seed_set, ahx_report** report);
AHX_API size_t ahx_report_file_count(const ahx_report* rep);
AHX_API const char* ahx_report_file(const ahx_report* rep, size_t index);
AHX_API size_t ahx_report_note_count(const ahx_report* rep);
AHX_API const char* ahx_report_note(const ahx_report* rep, size_t index);
AHX_API void ahx_report_free(ahx_report* rep);

/* Models: the compactified connection of a scenario's metric family, plus its operator
   constants at one η. Points and velocities have n+1 entries (r, y). */
AHX_API ahx_status ahx_model_from_scenario(const ahx_scenario* sc, double eta, ahx_model** out);
AHX_API void ahx_model_free(ahx_model* m);
AHX_API int ahx_model_dim(const ahx_model* m);
AHX_API ahx_status ahx_exp_map(const ahx_model* m, const double* z, const double* v, double* out_z);
AHX_API ahx_status ahx_inverse_exp(const ahx_model* m, const double* z, const double* zt, double* out_v);
/* Conjugated kernel κ(z, z̃) in the shifted chart. */
AHX_API ahx_status ahx_kernel(const ahx_model* m, const double* z, const double* zt, double* out_value);
/* Kernel on the blown-up diagonal at (x, y, R, θ), θ a unit vector with n+1 entries. */
AHX_API ahx_status ahx_lifted_kernel(const ahx_model* m, double x, const double* y, double R, const double* theta,
                                     double* out_value);
AHX_API ahx_status ahx_diagonal_limit(const ahx_model* m, double x, const double* theta, double* out_value);
/* ∫ f along the geodesic through (z, v) between its boundary exits, f = ρ^k bump
   (1 − (ρ/ρ_s)²)₊⁴ (1 − |y − c|²/w²)₊⁴ centred at the patch centre. */
AHX_API ahx_status ahx_xray_bump(const ahx_model* m, int k, double rho_support, double width, const double* z,
                                 const double* v, double* out_value);

#ifdef __cplusplus
}
#endif

#endif
