/* C interface to the pgrad periodic Poisson-gradient solver. */

#ifndef PGRAD_H
#define PGRAD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum PgStatus {
  PG_STATUS_OK = 0,
  /**
   * Null pointer, bad length, invalid UTF-8 or an out-of-range enum.
   */
  PG_STATUS_INVALID_ARGUMENT = 1,
  PG_STATUS_INVALID_DOMAIN = 2,
  PG_STATUS_INVALID_FIELD = 3,
  PG_STATUS_NON_FINITE = 4,
  PG_STATUS_DOMAIN_MISMATCH = 5,
  PG_STATUS_UNKNOWN_POTENTIAL = 6,
  PG_STATUS_INVALID_PARAMETER = 7,
  PG_STATUS_MISSING_BOUND = 8,
  PG_STATUS_INVALID_OPTIONS = 9,
  PG_STATUS_PARSE = 10,
  PG_STATUS_IO = 11,
  /**
   * An internal panic was caught.
   */
  PG_STATUS_INTERNAL = 12,
} PgStatus;

/**
 * Trigonometric profile of a forcing term.
 */
typedef enum PgTrig {
  PG_TRIG_COS = 0,
  PG_TRIG_SIN = 1,
} PgTrig;

typedef enum PgScheme {
  PG_SCHEME_SPECTRAL = 0,
  PG_SCHEME_CENTERED2 = 1,
} PgScheme;

typedef enum PgMethod {
  PG_METHOD_LBFGS = 0,
  PG_METHOD_GRADIENT_DESCENT = 1,
} PgMethod;

typedef enum PgStopReason {
  PG_STOP_REASON_CONVERGED = 0,
  PG_STOP_REASON_MAX_ITERS = 1,
  PG_STOP_REASON_NUMERICAL_FAILURE = 2,
  PG_STOP_REASON_LINE_SEARCH_FAILURE = 3,
} PgStopReason;

/**
 * Opaque periodic box and grid.
 */
typedef struct PgDomain PgDomain;

/**
 * Opaque discrete field.
 */
typedef struct PgField PgField;

/**
 * Opaque builtin potential.
 */
typedef struct PgPotential PgPotential;

/**
 * Opaque result of `pg_minimize`.
 */
typedef struct PgSolveReport PgSolveReport;

/**
 * `amplitude·{cos,sin}(2π Σ_α modes[α]·tᵅ/Tᵅ)` added to `component`
 * (0-based). `modes` points at `p` integers.
 */
typedef struct PgForcingTerm {
  size_t component;
  enum PgTrig shape;
  double amplitude;
  const int64_t *modes;
} PgForcingTerm;

/**
 * Parameters of the builtin families. Unused entries are ignored.
 */
typedef struct PgBuiltinParams {
  double kappa;
  double amplitude;
  /**
   * Constant gradient bound; only read when `has_claimed_bound`.
   */
  double claimed_bound;
  bool has_claimed_bound;
  const struct PgForcingTerm *forcing;
  size_t forcing_count;
} PgBuiltinParams;

typedef struct PgActionValue {
  double total;
  double kinetic;
  double potential;
} PgActionValue;

typedef struct PgSolveOptions {
  enum PgMethod method;
  size_t max_iters;
  /**
   * Stop when `sup |G| ≤ grad_tol`; zero selects `1e-8·(1 + |φ(u₀)|)`.
   */
  double grad_tol;
  double armijo_c;
  double backtrack_factor;
  size_t lbfgs_memory;
  bool pin_mean;
  enum PgScheme scheme;
} PgSolveOptions;

/**
 * Scalar summary of a solve.
 */
typedef struct PgSolveSummary {
  bool converged;
  enum PgStopReason stop_reason;
  size_t iterations;
  /**
   * Length of the recorded `φ` history.
   */
  size_t phi_count;
  /**
   * Last recorded `φ` (NaN if none).
   */
  double phi_final;
  /**
   * Last `sup |G|` (NaN if none).
   */
  double grad_sup_final;
  double grad_tol;
} PgSolveSummary;

typedef struct PgResidualReport {
  double strong_l2;
  double strong_sup;
  double weak_max;
  double trace_mismatch;
  bool passes;
} PgResidualReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pg_version(void);

/**
 * Message for the last failed call on this thread, or an empty string.
 * Valid until the next call on the same thread.
 */
const char *pg_last_error(void);

enum PgStatus pg_domain_new(size_t p,
                            size_t n,
                            const double *periods,
                            const size_t *grid_sizes,
                            struct PgDomain **out);

void pg_domain_free(struct PgDomain *domain);

/**
 * Number of grid nodes, or 0 for a null handle.
 */
size_t pg_domain_point_count(const struct PgDomain *domain);

/**
 * Codomain dimension, or 0 for a null handle.
 */
size_t pg_domain_n(const struct PgDomain *domain);

/**
 * Box volume, or 0 for a null handle.
 */
double pg_domain_volume(const struct PgDomain *domain);

/**
 * Copies `len = point_count·n` values, grid-major with the component
 * innermost.
 */
enum PgStatus pg_field_from_values(const struct PgDomain *domain,
                                   const double *values,
                                   size_t len,
                                   struct PgField **out);

enum PgStatus pg_field_zeros(const struct PgDomain *domain, struct PgField **out);

/**
 * Reads a field file.
 */
enum PgStatus pg_field_load(const char *path, struct PgField **out);

enum PgStatus pg_field_save(const struct PgField *field, const char *path);

/**
 * Number of stored values, or 0 for a null handle.
 */
size_t pg_field_len(const struct PgField *field);

/**
 * Copies the values into `out`, which must hold exactly `pg_field_len`.
 */
enum PgStatus pg_field_copy_values(const struct PgField *field, double *out, size_t len);

void pg_field_free(struct PgField *field);

/**
 * `kappa = 1`, `amplitude = 1`, no claimed bound, no forcing.
 */
struct PgBuiltinParams pg_builtin_params_default(void);

/**
 * Builds `zero`, `linear_forcing`, `quadratic`, `pseudo_huber` or `cosine`
 * for fields on `domain`. `params` may be null for the defaults.
 */
enum PgStatus pg_potential_builtin(const char *name,
                                   const struct PgDomain *domain,
                                   const struct PgBuiltinParams *params,
                                   struct PgPotential **out);

void pg_potential_free(struct PgPotential *potential);

enum PgStatus pg_action(const struct PgField *field,
                        const struct PgPotential *potential,
                        enum PgScheme scheme,
                        struct PgActionValue *out);

struct PgSolveOptions pg_solve_options_default(void);

/**
 * Minimizes the action from `initial`. `options` may be null for the
 * defaults.
 */
enum PgStatus pg_minimize(const struct PgField *initial,
                          const struct PgPotential *potential,
                          const struct PgSolveOptions *options,
                          struct PgSolveReport **out);

enum PgStatus pg_report_summary(const struct PgSolveReport *report, struct PgSolveSummary *out);

/**
 * Copies the `φ` history; `len` must equal `phi_count`.
 */
enum PgStatus pg_report_copy_phi(const struct PgSolveReport *report, double *out, size_t len);

/**
 * A new field handle holding the final iterate.
 */
enum PgStatus pg_report_final_field(const struct PgSolveReport *report, struct PgField **out);

void pg_report_free(struct PgSolveReport *report);

/**
 * Residuals with the default tolerances and spectral derivatives.
 */
enum PgStatus pg_residual_report(const struct PgField *field,
                                 const struct PgPotential *potential,
                                 struct PgResidualReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PGRAD_H */
