/* C interface for the rosseland solver.
 *
 * Handles returned by the *_new_* / mesh constructors own their object and
 * must be released exactly once with the matching *_free function. All
 * fallible calls return a rosseland_status; on failure,
 * rosseland_last_error_message() describes the most recent error on the
 * calling thread. Handles are not internally synchronized.
 */

#ifndef ROSSELAND_H
#define ROSSELAND_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rosseland_status {
    ROSSELAND_STATUS_OK = 0,
    ROSSELAND_STATUS_INVALID_ARGUMENT = 1,
    ROSSELAND_STATUS_ELLIPTICITY = 2,
    ROSSELAND_STATUS_RANGE = 3,
    ROSSELAND_STATUS_SOLVER = 4,
    ROSSELAND_STATUS_NOT_CONVERGED = 5,
    ROSSELAND_STATUS_NULL_POINTER = 6,
    ROSSELAND_STATUS_PANIC = 7,
    ROSSELAND_STATUS_OTHER = 99
} rosseland_status;

/* Opaque handles. */
typedef struct RosselandMesh RosselandMesh;
typedef struct RosselandModel RosselandModel;
typedef struct RosselandSolution RosselandSolution;

/* Fixed-point solver options; fill with rosseland_solve_options_default
 * and adjust. */
typedef struct RosselandSolveOptions {
    double tol_l2;
    size_t max_iterations;
    double damping;
} RosselandSolveOptions;

/* Library version as a static NUL-terminated string. */
const char *rosseland_version(void);

/* Message of the most recent failure on this thread; valid until the next
 * failing call on the same thread. */
const char *rosseland_last_error_message(void);

/* Meshes: uniform interval (n segments) and structured square
 * triangulation (2 n^2 right triangles). NULL on failure. */
RosselandMesh *rosseland_mesh_unit_interval(size_t n);
RosselandMesh *rosseland_mesh_unit_square(size_t n);
void rosseland_mesh_free(RosselandMesh *mesh);

int rosseland_mesh_dim(const RosselandMesh *mesh);
size_t rosseland_mesh_num_nodes(const RosselandMesh *mesh);
size_t rosseland_mesh_num_elements(const RosselandMesh *mesh);
size_t rosseland_mesh_num_boundary_nodes(const RosselandMesh *mesh);

/* Copies node coordinates (dim entries per node); len must equal
 * num_nodes * dim. */
int rosseland_mesh_node_coords(const RosselandMesh *mesh, double *out, size_t len);

/* Copies the sorted boundary node indices; len must equal
 * num_boundary_nodes. */
int rosseland_mesh_boundary_nodes(const RosselandMesh *mesh, size_t *out, size_t len);

/* Coefficient models on the admissible range [t_min, t_max]. Matrices are
 * row-major with dim * dim entries and must be symmetric.
 * rosseland: A(z, x) = K + z^3 B; linear: A(z, x) = K. NULL on failure. */
RosselandModel *rosseland_model_new_rosseland(int dim, const double *k, const double *b,
                                              double t_min, double t_max);
RosselandModel *rosseland_model_new_linear(int dim, const double *k,
                                           double t_min, double t_max);
void rosseland_model_free(RosselandModel *model);

/* Scans eigenvalues of A(z, x) over z_samples admissible values times
 * element centroids (at most x_samples) and writes the certified bounds.
 * Returns ROSSELAND_STATUS_ELLIPTICITY when a sample is not positive
 * definite. */
int rosseland_model_certify(const RosselandModel *model, const RosselandMesh *mesh,
                            size_t z_samples, size_t x_samples,
                            double *lambda_min, double *lambda_max);

void rosseland_solve_options_default(RosselandSolveOptions *opts);

/* Runs the damped fixed-point iteration. boundary_values carries one value
 * per boundary node, ordered like rosseland_mesh_boundary_nodes; opts may
 * be NULL for defaults. On success *out owns the solution handle; honest
 * non-convergence returns ROSSELAND_STATUS_NOT_CONVERGED and still hands
 * out the handle. */
int rosseland_solve_fixed_point(const RosselandMesh *mesh, const RosselandModel *model,
                                const double *boundary_values, size_t n_boundary,
                                const RosselandSolveOptions *opts,
                                RosselandSolution **out);

void rosseland_solution_free(RosselandSolution *solution);
size_t rosseland_solution_num_values(const RosselandSolution *solution);

/* Copies the nodal solution; len must equal rosseland_solution_num_values. */
int rosseland_solution_values(const RosselandSolution *solution, double *out, size_t len);

int rosseland_solution_converged(const RosselandSolution *solution);
size_t rosseland_solution_iterations(const RosselandSolution *solution);
double rosseland_solution_final_increment(const RosselandSolution *solution);
double rosseland_solution_max_clamp_violation(const RosselandSolution *solution);

#ifdef __cplusplus
}
#endif

#endif /* ROSSELAND_H */
