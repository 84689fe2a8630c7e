#pragma once

#include "dgf/models.hpp"
#include "dgf/types.hpp"

namespace dgf {

enum class GpsMode { Dual, Single };

// Per-epoch observability diagnostics.
struct ObservabilityReport {
  double t = 0.0;
  int rank = 0;
  bool full_rank = false;
  double theta = 0.0;      // baseline/specific-force alignment angle, [0, pi/2]
  double sigma_min = 0.0;  // smallest singular value of the stacked matrix
  GpsMode mode = GpsMode::Dual;
};

// Stacked observability matrix [H; HF; ...; HF^order] at frozen (A, w, a).
// Dual mode uses both antenna row blocks (6(order+1) x 12); single mode uses
// the rows of `antenna` only (3(order+1) x 12).
Eigen::MatrixXd observability_matrix(const Mat3& A, const Vec3& w, const Vec3& a,
                                     const SensorGeometry& geom, GpsMode mode, int order = 3,
                                     int antenna = 1);

// Count of singular values >= rel_tol * sigma_max (0 for a zero matrix).
int numeric_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-8);

// Pi = de de^T [a x] + [a x]. Annihilates a for every input (rank <= 2);
// kept as the printed diagnostic, the rank decisions use the full stack.
Mat3 pi_matrix(const Vec3& de, const Vec3& a);

// arccos(|de . a| / (|de| |a|)) in [0, pi/2]; pi/2 when either vector ~ 0
// (no alignment constraint).
double alignment_angle(const Vec3& de, const Vec3& a);

// Analytic unobservable direction of the single-antenna stack:
//   eta = [a; 2 A (e1 x a); 0; 2 w x a].
Vec12 single_gps_null_vector(const Mat3& A, const Vec3& w, const Vec3& a, const Vec3& e1);

// Numeric re-derivation of the appendix row-operation reduction.
// T is the 16-row intermediate produced by the printed operations
// (A^T premultiplications, +-1/2 [A e_i]^T and [A e_i]^T compressions, row
// differences); O' is the 12x12 form after the de re-expansions and row sums.
// The reduction is rank-equivalent in the full-rank sense:
// equivalent = (rank(T) == 12) == (rank(O) == 12).
struct MroCheck {
  int rank_obs = 0;        // rank of [H; HF; HF^2; HF^3], dual
  int rank_reduced = 0;    // rank of the 16-row intermediate T
  int rank_o_prime = 0;    // rank of the 12x12 O' (<= 10 by construction)
  bool equivalent = false;
};
MroCheck mro_reduced_rank_check(const Mat3& A, const Vec3& w, const Vec3& a,
                                const SensorGeometry& geom, double rel_tol = 1e-8);

}  // namespace dgf
