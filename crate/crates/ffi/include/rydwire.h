#ifndef RYDWIRE_H
#define RYDWIRE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a library call.
 */
typedef enum RwStatus {
  RW_STATUS_OK = 0,
  /**
   * Malformed or out-of-domain input, including parse errors.
   */
  RW_STATUS_INVALID_INPUT = 1,
  /**
   * The problem lies outside the encodable class.
   */
  RW_STATUS_UNSUPPORTED = 2,
  /**
   * An exact search or simulation would exceed its size cap.
   */
  RW_STATUS_SIZE_CAP = 3,
  /**
   * No valid embedding could be produced.
   */
  RW_STATUS_EMBEDDING = 4,
  RW_STATUS_NUMERICAL = 5,
  RW_STATUS_IO = 6,
  RW_STATUS_NULL_POINTER = 7,
  RW_STATUS_PANIC = 8,
} RwStatus;

/**
 * A unit-disk embedding of a logical problem.
 */
typedef struct RwEmbedding RwEmbedding;

/**
 * A logical MWIS or QUBO problem together with its layout hints.
 */
typedef struct RwProblem RwProblem;

/**
 * Exact optima of a problem or embedding.
 */
typedef struct RwSolution RwSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next library call on the same thread.
 */
const char *rw_last_error_message(void);

/**
 * Library version, a static string.
 */
const char *rw_version(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void rw_string_free(char *s);

/**
 * Parses a problem file (MWIS or QUBO, optional layout hints).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum RwStatus rw_problem_from_json(const char *json, struct RwProblem **out_problem);

/**
 * Loads one of the bundled fixtures (`fig4`, `fig5c`, …, `fig6`).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum RwStatus rw_fixture_problem(const char *name, struct RwProblem **out_problem);

/**
 * Number of logical variables.
 *
 * # Safety
 * `problem` must be a live handle; `out` must be writable.
 */
enum RwStatus rw_problem_size(const struct RwProblem *problem, size_t *out_size);

/**
 * Exact optima of the logical problem.
 *
 * # Safety
 * `problem` must be a live handle; `out` must be writable.
 */
enum RwStatus rw_problem_solve(const struct RwProblem *problem, struct RwSolution **out_solution);

/**
 * # Safety
 * `problem` must be null or a handle that has not been freed.
 */
void rw_problem_free(struct RwProblem *problem);

/**
 * Embeds a problem using its layout hints. `margin` is the relative
 * ancilla-weight margin; pass a negative value for the library default.
 *
 * # Safety
 * `problem` must be a live handle; `out` must be writable.
 */
enum RwStatus rw_embed(const struct RwProblem *problem,
                       double margin,
                       struct RwEmbedding **out_embedding);

/**
 * Parses an embedding file as written by [`rw_embedding_to_json`] or the
 * `rydwire embed` command.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum RwStatus rw_embedding_from_json(const char *json, struct RwEmbedding **out_embedding);

/**
 * Serialises an embedding; free the result with [`rw_string_free`].
 *
 * # Safety
 * `embedding` must be a live handle; `out` must be writable.
 */
enum RwStatus rw_embedding_to_json(const struct RwEmbedding *embedding, char **out_json);

/**
 * # Safety
 * `embedding` must be a live handle; `out` must be writable.
 */
enum RwStatus rw_embedding_atom_count(const struct RwEmbedding *embedding, size_t *out_count);

/**
 * Constant added to the embedded energy to recover the logical energy.
 *
 * # Safety
 * `embedding` must be a live handle; `out` must be writable.
 */
enum RwStatus rw_embedding_energy_offset(const struct RwEmbedding *embedding, double *out_offset);

/**
 * Ground states of the embedded instance at `Ω = 0`: the unit-disk MWIS
 * when `vdw` is 0, the full van der Waals energy (default parameters)
 * otherwise.
 *
 * # Safety
 * `embedding` must be a live handle; `out` must be writable.
 */
enum RwStatus rw_embedding_solve(const struct RwEmbedding *embedding,
                                 int32_t vdw,
                                 struct RwSolution **out_solution);

/**
 * Projects an atom bitstring (`'0'`/`'1'` per atom) onto the logical
 * variables; free the result with [`rw_string_free`].
 *
 * # Safety
 * `embedding` must be a live handle, `bits` a NUL-terminated string and
 * `out` writable.
 */
enum RwStatus rw_embedding_extract_logical(const struct RwEmbedding *embedding,
                                           const char *bits,
                                           char **out_bits);

/**
 * # Safety
 * `embedding` must be null or a handle that has not been freed.
 */
void rw_embedding_free(struct RwEmbedding *embedding);

/**
 * # Safety
 * `solution` must be a live handle; `out` must be writable.
 */
enum RwStatus rw_solution_energy(const struct RwSolution *solution, double *out_energy);

/**
 * Number of optimal configurations.
 *
 * # Safety
 * `solution` must be a live handle; `out` must be writable.
 */
enum RwStatus rw_solution_degeneracy(const struct RwSolution *solution, size_t *out_count);

/**
 * The `index`-th optimal configuration (sorted) as a bitstring; free the
 * result with [`rw_string_free`].
 *
 * # Safety
 * `solution` must be a live handle; `out` must be writable.
 */
enum RwStatus rw_solution_configuration(const struct RwSolution *solution,
                                        size_t index,
                                        char **out_bits);

/**
 * # Safety
 * `solution` must be null or a handle that has not been freed.
 */
void rw_solution_free(struct RwSolution *solution);

/**
 * Monte Carlo probability that an MWIS wire with `length` ancillas keeps
 * the intended ground-state sector under multiplicative Gaussian weight
 * noise of relative width `sigma`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RwStatus rw_wire_success_probability(double alpha,
                                          double beta,
                                          size_t length,
                                          double margin,
                                          double sigma,
                                          size_t samples,
                                          uint64_t seed,
                                          double *out_probability);

/**
 * Blockade radius in µm for `c6` (GHz·µm⁶), Rabi frequency `omega` and
 * detuning `detuning` (both cyclic MHz).
 *
 * # Safety
 * `out` must be writable.
 */
enum RwStatus rw_blockade_radius(double c6, double omega, double detuning, double *out_radius);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RYDWIRE_H */
