#include "plasmode/potentials.hpp"

#include <cmath>
#include <fstream>

namespace plasmode {

namespace {

struct EdgeTerms {
    double f_log = 0;     // ln((R+ + l+)/(R- + l-)), stabilized
    double beta = 0;      // atan difference
    double t0 = 0;        // signed in-plane distance to the edge line
    Vec3 m_hat = Vec3::Zero();
};

struct PanelGeometry {
    Vec3 n_hat;
    double w0 = 0;
    EdgeTerms edge[3];
};

PanelGeometry panel_terms(const std::array<Vec3, 3>& tri, const Vec3& x) {
    PanelGeometry g;
    Vec3 cross = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
    g.n_hat = cross.normalized();
    g.w0 = (x - tri[0]).dot(g.n_hat);
    double aw0 = std::abs(g.w0);
    for (int e = 0; e < 3; ++e) {
        const Vec3& a = tri[e];
        const Vec3& b = tri[(e + 1) % 3];
        Vec3 s_hat = (b - a).normalized();
        Vec3 m_hat = s_hat.cross(g.n_hat);  // outward in-plane edge normal for CCW order
        double lm = (a - x).dot(s_hat);
        double lp = (b - x).dot(s_hat);
        double t0 = (a - x).dot(m_hat);
        double Rm = (x - a).norm();
        double Rp = (x - b).norm();
        double R02 = t0 * t0 + g.w0 * g.w0;
        EdgeTerms& et = g.edge[e];
        et.t0 = t0;
        et.m_hat = m_hat;
        if (R02 + aw0 * (Rp + Rm) < 1e-30) {
            // Observation point on the edge line inside the segment; the
            // collocation scheme never lands here.
            et.f_log = 0;
            et.beta = 0;
            continue;
        }
        // (R+l)(R-l) = t0^2 + w0^2, so the two quotients are equal; pick the
        // branch that avoids cancellation.
        if (lp + lm >= 0)
            et.f_log = std::log((Rp + lp) / (Rm + lm));
        else
            et.f_log = std::log((Rm - lm) / (Rp - lp));
        et.beta = std::atan2(t0 * lp, R02 + aw0 * Rp) - std::atan2(t0 * lm, R02 + aw0 * Rm);
    }
    return g;
}

}  // namespace

double triangle_inv_r_integral(const std::array<Vec3, 3>& tri, const Vec3& x) {
    PanelGeometry g = panel_terms(tri, x);
    double aw0 = std::abs(g.w0);
    double I = 0;
    for (int e = 0; e < 3; ++e) I += g.edge[e].t0 * g.edge[e].f_log - aw0 * g.edge[e].beta;
    return I;
}

Vec3 triangle_inv_r_gradient(const std::array<Vec3, 3>& tri, const Vec3& x) {
    PanelGeometry g = panel_terms(tri, x);
    double sw0 = g.w0 > 0 ? 1.0 : (g.w0 < 0 ? -1.0 : 0.0);
    Vec3 grad = Vec3::Zero();
    double beta_sum = 0;
    for (int e = 0; e < 3; ++e) {
        grad -= g.edge[e].m_hat * g.edge[e].f_log;
        beta_sum += g.edge[e].beta;
    }
    grad -= g.n_hat * (sw0 * beta_sum);
    return grad;
}

MatrixXd assemble_single_layer(const SurfaceMesh& mesh) {
    const int n = mesh.panel_count();
    MatrixXd S(n, n);
    for (int j = 0; j < n; ++j) {
        auto tri = mesh.triangle_vertices(j);
        for (int i = 0; i < n; ++i) S(i, j) = -triangle_inv_r_integral(tri, mesh.centroids()[i]) / (4.0 * pi);
    }
    return S;
}

MatrixXd assemble_neumann_poincare(const SurfaceMesh& mesh) {
    const int n = mesh.panel_count();
    MatrixXd K(n, n);
    for (int j = 0; j < n; ++j) {
        auto tri = mesh.triangle_vertices(j);
        for (int i = 0; i < n; ++i) {
            if (i == j) {
                // Kernel (x-y).nu(x) vanishes identically on the flat self panel.
                K(i, j) = 0;
                continue;
            }
            Vec3 grad = triangle_inv_r_gradient(tri, mesh.centroids()[i]);
            K(i, j) = -mesh.normals()[i].dot(grad) / (4.0 * pi);
        }
    }
    return K;
}

LayerMatrices assemble_layer_matrices(const SurfaceMesh& mesh) {
    const int n = mesh.panel_count();
    LayerMatrices lm;
    lm.mesh_hash = mesh.hash();
    lm.areas = VectorXd(n);
    for (int i = 0; i < n; ++i) lm.areas(i) = mesh.areas()[i];

    MatrixXd S_raw = assemble_single_layer(mesh);
    // Collocation breaks the kernel symmetry at O(h); restore it explicitly.
    lm.S = (S_raw + S_raw.transpose()) * 0.5;
    lm.Kstar = assemble_neumann_poincare(mesh);
    // Galerkin-consistent Gram: <1_i, 1_j>_{H*} ~ -area_i * S_raw(i,j).
    MatrixXd WS = lm.areas.asDiagonal() * S_raw;
    lm.M = -(WS + WS.transpose()) * 0.5;
    return lm;
}

double LayerMatrices::calderon_residual() const {
    MatrixXd SK = S * Kstar;
    return (SK - Kstar.transpose() * S).norm() / SK.norm();
}

SymmetricPencil symmetrized_pencil(const LayerMatrices& lm) {
    Eigen::LLT<MatrixXd> llt(lm.M);
    if (llt.info() != Eigen::Success)
        throw NumericalError("symmetrized_pencil: H* Gram matrix is not positive definite; refine the mesh");
    SymmetricPencil p;
    p.M = lm.M;
    MatrixXd MK = lm.M * lm.Kstar;
    p.A = (MK + MK.transpose()) * 0.5;
    return p;
}

double single_layer_potential(const SurfaceMesh& mesh, const VectorXd& density, const Vec3& x) {
    double pot = 0;
    for (int j = 0; j < mesh.panel_count(); ++j)
        pot -= density(j) * triangle_inv_r_integral(mesh.triangle_vertices(j), x) / (4.0 * pi);
    return pot;
}

Vec3 grad_single_layer_at(const SurfaceMesh& mesh, const VectorXd& density, const Vec3& x) {
    Vec3 g = Vec3::Zero();
    for (int j = 0; j < mesh.panel_count(); ++j)
        g -= density(j) * triangle_inv_r_gradient(mesh.triangle_vertices(j), x);
    return g / (4.0 * pi);
}

GradSingleLayerResult eval_grad_single_layer(const SurfaceMesh& mesh, const VectorXd& density,
                                             const std::vector<Vec3>& points, bool enforce_interior) {
    if (density.size() != mesh.panel_count())
        throw NumericalError("eval_grad_single_layer: density size mismatch");
    double h = mesh.mesh_size();
    GradSingleLayerResult result;
    result.values.reserve(points.size());
    result.near_boundary.reserve(points.size());
    for (const auto& x : points) {
        if (enforce_interior && !mesh.contains(x))
            throw DomainError("eval_grad_single_layer: point outside the closed surface");
        result.near_boundary.push_back(mesh.boundary_distance(x) < h);
        result.values.push_back(grad_single_layer_at(mesh, density, x));
    }
    return result;
}

void dump_layer_matrices(const LayerMatrices& lm, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("dump_layer_matrices: cannot open " + path);
    const char magic[8] = {'p', 'l', 'm', 'd', 'm', 'a', 't', '1'};
    out.write(magic, 8);
    std::int64_t n = lm.S.rows();
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(&lm.mesh_hash), 8);
    auto write_mat = [&](const MatrixXd& m) {
        out.write(reinterpret_cast<const char*>(m.data()), sizeof(double) * m.size());
    };
    write_mat(lm.S);
    write_mat(lm.Kstar);
    write_mat(lm.M);
    out.write(reinterpret_cast<const char*>(lm.areas.data()), sizeof(double) * lm.areas.size());
}

LayerMatrices load_layer_matrices(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("load_layer_matrices: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::string(magic, 8) != "plmdmat1") throw ConfigError("load_layer_matrices: bad magic");
    std::int64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 8);
    LayerMatrices lm;
    in.read(reinterpret_cast<char*>(&lm.mesh_hash), 8);
    lm.S.resize(n, n);
    lm.Kstar.resize(n, n);
    lm.M.resize(n, n);
    lm.areas.resize(n);
    auto read_mat = [&](MatrixXd& m) { in.read(reinterpret_cast<char*>(m.data()), sizeof(double) * m.size()); };
    read_mat(lm.S);
    read_mat(lm.Kstar);
    read_mat(lm.M);
    in.read(reinterpret_cast<char*>(lm.areas.data()), sizeof(double) * lm.areas.size());
    if (!in) throw ConfigError("load_layer_matrices: truncated file");
    return lm;
}

}  // namespace plasmode
