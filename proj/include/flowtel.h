#ifndef FLOWTEL_H
#define FLOWTEL_H

/*
 * C interface to the flowtel library.
 *
 * Every function returns 0 on success or a negative FLOWTEL_ERR_* code.
 * Objects are created through flowtel_*_create functions into opaque handle
 * pointers and must be released with the matching destroy function. Strings
 * and buffers returned through out-parameters are heap-allocated by the
 * library and must be released with flowtel_free.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define FLOWTEL_EXPORT __declspec(dllexport)
#else
#define FLOWTEL_EXPORT __attribute__((visibility("default")))
#endif

#define FLOWTEL_OK 0
#define FLOWTEL_ERR_NULL_POINTER (-1)
#define FLOWTEL_ERR_BAD_PARAMETER (-2)
#define FLOWTEL_ERR_NO_INVERSE (-3)
#define FLOWTEL_ERR_ID_OUT_OF_RANGE (-4)
#define FLOWTEL_ERR_INCOMPATIBLE (-5)
#define FLOWTEL_ERR_FOLD_INDIVISIBLE (-6)
#define FLOWTEL_ERR_IO (-7)
#define FLOWTEL_ERR_BAD_FORMAT (-8)
#define FLOWTEL_ERR_INTERNAL (-9)
#define FLOWTEL_ERR_DECODE_INCOMPLETE (-10)
#define FLOWTEL_ERR_UNKNOWN_EXPERIMENT (-11)

FLOWTEL_EXPORT uint32_t flowtel_version(void);
FLOWTEL_EXPORT const char* flowtel_error_name(int code);
FLOWTEL_EXPORT void flowtel_free(void* ptr);

/* Invertible counting sketch over 64-bit flow identifiers. */
typedef struct flowtel_fermat_struct flowtel_fermat_t;

/* fingerprint_bits 0 disables the verification fingerprint. */
FLOWTEL_EXPORT int flowtel_fermat_create(flowtel_fermat_t** sketch, uint32_t d, uint32_t m, uint64_t seed,
                                         uint32_t fingerprint_bits);
FLOWTEL_EXPORT int flowtel_fermat_destroy(flowtel_fermat_t* sketch);
FLOWTEL_EXPORT int flowtel_fermat_clone(flowtel_fermat_t** sketch, const flowtel_fermat_t* source);
FLOWTEL_EXPORT int flowtel_fermat_update(flowtel_fermat_t* sketch, uint64_t flow, int64_t delta);
FLOWTEL_EXPORT int flowtel_fermat_insert(flowtel_fermat_t* sketch, uint64_t flow);

/* Bucket-wise a + sign*b into a fresh sketch; sign is +1 or -1. */
FLOWTEL_EXPORT int flowtel_fermat_combine(flowtel_fermat_t** sketch, const flowtel_fermat_t* a,
                                          const flowtel_fermat_t* b, int64_t sign);

/* Halves the array width k times by folding buckets together. */
FLOWTEL_EXPORT int flowtel_fermat_fold(flowtel_fermat_t** sketch, const flowtel_fermat_t* source, uint32_t k);

/*
 * Recovers the exact multiset of (flow, count) pairs when the sketch is
 * sparse enough. On success *flows and *counts receive arrays of length *n
 * (flowtel_free each). Returns FLOWTEL_ERR_DECODE_INCOMPLETE when buckets
 * remain undecoded; the partial flowset is still returned.
 */
FLOWTEL_EXPORT int flowtel_fermat_decode(flowtel_fermat_t* sketch, uint64_t** flows, int64_t** counts, size_t* n);

/* Distinct-flow estimate from the fraction of untouched buckets. */
FLOWTEL_EXPORT int flowtel_fermat_linear_count(const flowtel_fermat_t* sketch, double* estimate, int* saturated);

FLOWTEL_EXPORT int flowtel_fermat_equal(const flowtel_fermat_t* a, const flowtel_fermat_t* b, int* equal);

FLOWTEL_EXPORT int flowtel_fermat_serialize(const flowtel_fermat_t* sketch, uint8_t** bytes, size_t* len);
FLOWTEL_EXPORT int flowtel_fermat_deserialize(flowtel_fermat_t** sketch, const uint8_t* bytes, size_t len);
FLOWTEL_EXPORT int flowtel_fermat_save(const flowtel_fermat_t* sketch, const char* path);
/* Loads binary or JSON dumps, sniffing the format. */
FLOWTEL_EXPORT int flowtel_fermat_load(flowtel_fermat_t** sketch, const char* path);

/*
 * Runs a named experiment with a JSON configuration object ("{}" for
 * defaults) and returns the result document as a JSON string. Names:
 * "threshold-sweep", "loss-sweep", "shift-scenario", "accuracy".
 */
FLOWTEL_EXPORT int flowtel_experiment_run(const char* name, const char* config_json, char** result_json);

/* Decodes a sketch file saved by flowtel_fermat_save into a JSON report. */
FLOWTEL_EXPORT int flowtel_decode_file(const char* path, char** result_json);

/* Flattens an experiment result's rows/columns into CSV text. */
FLOWTEL_EXPORT int flowtel_result_csv(const char* result_json, char** csv);

#ifdef __cplusplus
}
#endif

#endif
