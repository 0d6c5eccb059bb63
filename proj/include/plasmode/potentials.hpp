#pragma once

#include "plasmode/geometry.hpp"

namespace plasmode {

// All kernels derive from the Green's function convention
//   G0(x,y) = -1/(4*pi*|x-y|),
// so the single layer is negative (-S is the H* Gram) and the
// Neumann-Poincare kernel is +(x-y).nu(x)/(4*pi*|x-y|^3) with lambda_0 = 1/2.

// Potential of a unit constant density on a flat triangle and its gradient,
// evaluated in closed form (edge-wise log/atan formulas). Valid for any
// observation point off the triangle edges; for points in the triangle plane
// the gradient is the tangential principal value.
double triangle_inv_r_integral(const std::array<Vec3, 3>& tri, const Vec3& x);
Vec3 triangle_inv_r_gradient(const std::array<Vec3, 3>& tri, const Vec3& x);

struct LayerMatrices {
    MatrixXd S;      // single-layer collocation matrix, explicitly symmetrized
    MatrixXd Kstar;  // Neumann-Poincare collocation matrix, zero diagonal
    MatrixXd M;      // SPD H* Gram: -(W*S + S^T*W)/2 with W = diag(areas)
    VectorXd areas;
    std::uint64_t mesh_hash = 0;

    // ||S*K - K^T*S|| / ||S*K||, Frobenius. Decreases under refinement.
    double calderon_residual() const;
};

LayerMatrices assemble_layer_matrices(const SurfaceMesh& mesh);

MatrixXd assemble_single_layer(const SurfaceMesh& mesh);
MatrixXd assemble_neumann_poincare(const SurfaceMesh& mesh);

struct SymmetricPencil {
    MatrixXd A;  // (M*K + K^T*M)/2
    MatrixXd M;
};

// Plemelj-symmetrized generalized eigenproblem A*x = lambda*M*x whose
// eigenvalues are the discrete Neumann-Poincare spectrum.
SymmetricPencil symmetrized_pencil(const LayerMatrices& lm);

// S[density](x) = sum_j density_j * Int_{panel j} G0(x,y) dsigma(y).
double single_layer_potential(const SurfaceMesh& mesh, const VectorXd& density, const Vec3& x);

struct GradSingleLayerResult {
    std::vector<Vec3> values;
    std::vector<bool> near_boundary;  // within mesh size h of the surface
};

// grad S[density] at interior points. Points outside the closure are a
// domain error; points within h of the boundary are flagged, not fatal.
GradSingleLayerResult eval_grad_single_layer(const SurfaceMesh& mesh, const VectorXd& density,
                                             const std::vector<Vec3>& points, bool enforce_interior = true);

// Unchecked single-point version used by mode evaluation (any x off the surface).
Vec3 grad_single_layer_at(const SurfaceMesh& mesh, const VectorXd& density, const Vec3& x);

// Binary dump of S, Kstar, M with a small header (dims + mesh hash).
void dump_layer_matrices(const LayerMatrices& lm, const std::string& path);
LayerMatrices load_layer_matrices(const std::string& path);

}  // namespace plasmode
