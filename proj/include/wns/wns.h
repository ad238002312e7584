/* C interface to the weighted Navier-Stokes solver library. */
#ifndef WNS_WNS_H
#define WNS_WNS_H

#include <stddef.h>
#include <stdint.h>

#if defined(WNS_BUILDING_LIBRARY)
#define WNS_API __attribute__((visibility("default")))
#else
#define WNS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wns_status {
    WNS_OK = 0,
    WNS_ERR_INVALID_ARGUMENT = 1,
    WNS_ERR_INVALID_SPEC = 2,
    WNS_ERR_NOT_CONVERGED = 3, /* results are still produced */
    WNS_ERR_NUMERICAL = 4,
    WNS_ERR_OUTSIDE_DOMAIN = 5,
    WNS_ERR_IO = 6,
    WNS_ERR_INTERNAL = 7
} wns_status;

typedef struct wns_problem wns_problem;
typedef struct wns_mesh wns_mesh;

/* Message of the last failed call on this thread; empty after success. Owned by the library. */
WNS_API const char* wns_last_error(void);
WNS_API const char* wns_version(void);
WNS_API const char* wns_status_name(wns_status status);

/* Strings returned through char** out-parameters are malloc'd; release with wns_string_free. */
WNS_API void wns_string_free(char* s);

/* Problem specifications (JSON). Output paths resolve against base_dir / the file's directory. */
WNS_API wns_status wns_problem_load(const char* path, wns_problem** out);
WNS_API wns_status wns_problem_parse(const char* json_text, const char* base_dir, wns_problem** out);
WNS_API void wns_problem_free(wns_problem* problem);
WNS_API wns_status wns_problem_set_seed(wns_problem* problem, uint64_t seed);
WNS_API wns_status wns_problem_checksum(const wns_problem* problem, uint64_t* out);

/* Commands. Each fills *summary_json (may be NULL) with a JSON summary and, when
   write_artifacts is nonzero, writes the artifacts named in the spec. */
WNS_API wns_status wns_run_solve(const wns_problem* problem, int write_artifacts, char** summary_json);
/* levels <= 0 uses the spec's convergence.levels. */
WNS_API wns_status wns_run_convergence(const wns_problem* problem, int levels, int write_artifacts,
                                       char** summary_json);
WNS_API wns_status wns_run_weights(const wns_problem* problem, int write_artifacts, char** summary_json);
WNS_API wns_status wns_run_constants(const wns_problem* problem, int write_artifacts, char** summary_json);

/* Meshes. polygon_xy holds nvert interleaved (x, y) pairs counter-clockwise; NULL means the
   unit square. */
WNS_API wns_status wns_mesh_uniform(const double* polygon_xy, size_t nvert, int n, wns_mesh** out);
WNS_API wns_status wns_mesh_graded(const double* polygon_xy, size_t nvert, double cx, double cy, double mu,
                                   int base_n, wns_mesh** out);
WNS_API wns_status wns_mesh_refine(const wns_mesh* mesh, wns_mesh** out);
WNS_API wns_status wns_mesh_read(const char* path, wns_mesh** out);
WNS_API wns_status wns_mesh_write(const wns_mesh* mesh, const char* path);
WNS_API wns_status wns_mesh_info(const wns_mesh* mesh, int64_t* num_points, int64_t* num_cells, double* h_max,
                                 uint64_t* checksum);
/* Cell containing (x, y), or -1 when outside. */
WNS_API wns_status wns_mesh_locate(const wns_mesh* mesh, double x, double y, int64_t* cell);
WNS_API void wns_mesh_free(wns_mesh* mesh);

#ifdef __cplusplus
}
#endif

#endif
