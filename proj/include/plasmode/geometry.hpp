#pragma once

#include <array>
#include <optional>

#include "plasmode/common.hpp"

namespace plasmode {

// Closed triangulated surface with piecewise-flat panels. Panel data
// (centroid, outward unit normal, area) is precomputed at construction and
// the mesh is immutable afterwards.
class SurfaceMesh {
  public:
    SurfaceMesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles);

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<Vec3>& centroids() const { return centroids_; }
    const std::vector<Vec3>& normals() const { return normals_; }
    const std::vector<double>& areas() const { return areas_; }

    int panel_count() const { return int(triangles_.size()); }
    double total_area() const;
    // Enclosed volume via the divergence theorem, (1/3)Σ (c·ν) area.
    double volume() const;
    // Characteristic mesh size: max edge length.
    double mesh_size() const;
    // Max |centroid| over panels (circumscribing radius proxy).
    double bounding_radius() const;

    std::array<Vec3, 3> triangle_vertices(int panel) const;

    // True iff every edge is shared by exactly two triangles.
    bool is_closed() const;
    // Strictly inside test; valid for convex meshes only.
    bool contains(const Vec3& p) const;
    // Min over panels of the inward plane distance; exact boundary distance
    // for interior points of a convex mesh whenever the nearest feature is a
    // face, a lower bound otherwise.
    double boundary_distance(const Vec3& p) const;

    SurfaceMesh transformed(const Mat3& rot, const Vec3& shift, double scale = 1.0) const;

    std::uint64_t hash() const;

  private:
    std::vector<Vec3> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<Vec3> centroids_;
    std::vector<Vec3> normals_;
    std::vector<double> areas_;
};

// D = z + delta * B. The reference mesh B is stored; the physical mesh is
// derived on demand.
class ParticleFrame {
  public:
    ParticleFrame(SurfaceMesh reference, Vec3 center, double scale);

    const SurfaceMesh& reference_mesh() const { return reference_; }
    SurfaceMesh physical_mesh() const { return reference_.transformed(Mat3::Identity(), center_, scale_); }

    const Vec3& center() const { return center_; }
    double scale() const { return scale_; }

    Vec3 to_physical(const Vec3& x_ref) const { return center_ + scale_ * x_ref; }
    Vec3 to_reference(const Vec3& x_phys) const { return (x_phys - center_) / scale_; }

  private:
    SurfaceMesh reference_;
    Vec3 center_;
    double scale_;
};

// Uniform voxel grid clipped to the mesh interior, cell-center rule.
// well_interior flags points at boundary distance >= the mesh size h.
struct VolumeGrid {
    std::vector<Vec3> points;
    std::vector<double> weights;  // all equal to spacing^3
    std::vector<bool> well_interior;
    double spacing = 0;

    double total_weight() const;
    int size() const { return int(points.size()); }
    // Indices of the 6 axis neighbours, -1 where absent. Built on demand
    // for discrete-divergence stencils.
    std::vector<std::array<int, 6>> neighbour_table() const;
};

VolumeGrid make_volume_grid(const SurfaceMesh& mesh, int cells_per_axis);

SurfaceMesh make_sphere(double radius, int refinement);
SurfaceMesh make_ellipsoid(const Vec3& semi_axes, int refinement);

struct ConvexityReport {
    bool strictly_convex = false;
    std::vector<int> offending_vertices;  // vertices off the hull
    std::vector<std::array<int, 2>> flat_edges;  // panel pairs with near-zero dihedral
    std::string message;
};

// Hull membership of every vertex plus a dihedral-angle strictness threshold
// (radians) between neighbouring panels.
ConvexityReport check_strict_convexity(const SurfaceMesh& mesh, double dihedral_tol = 1e-6);

// ASCII OFF and binary STL import/export.
void save_off(const SurfaceMesh& mesh, const std::string& path);
SurfaceMesh load_off(const std::string& path);
void save_stl(const SurfaceMesh& mesh, const std::string& path);
SurfaceMesh load_stl(const std::string& path);

}  // namespace plasmode
