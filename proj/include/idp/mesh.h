#pragma once

#include <idp/vector.h>

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace idp
{
  /// Boundary treatment of a node. When several faces of different kinds
  /// meet, the larger enumerator wins.
  enum class BoundaryKind : unsigned char
  {
    none = 0,
    do_nothing = 1,
    slip = 2,
    dirichlet = 3,
  };

  const char *to_string(BoundaryKind kind);

  /**
   * Q1 mesh of lines, quadrilaterals or hexahedra. Cell vertices are in
   * lexicographic order (v = i + 2 j + 4 k). Vertices carry coordinates;
   * degrees of freedom are vertices modulo periodic identification.
   */
  template <int dim>
  struct Mesh
  {
    static constexpr int vertices_per_cell = 1 << dim;
    static constexpr int faces_per_cell = 2 * dim;

    struct BoundaryFace
    {
      unsigned cell;
      unsigned char face; // 2 * direction + side
      BoundaryKind kind;
    };

    std::vector<Point<dim>> vertices;
    std::vector<std::array<unsigned, vertices_per_cell>> cells;
    std::vector<unsigned> vertex_to_dof;
    unsigned n_dofs = 0;
    std::vector<BoundaryFace> boundary_faces;

    /// Coordinates of the first vertex mapped to each dof.
    std::vector<Point<dim>> dof_points() const;

    /// Local vertex numbers of a face, in lexicographic order.
    static std::array<int, vertices_per_cell / 2> face_vertices(int face);
  };

  /// Topological boundary detection: a face (as a set of dofs) that belongs
  /// to exactly one cell. kind_of(face_center) classifies it.
  template <int dim>
  void mark_boundary(Mesh<dim> &mesh,
                     const std::function<BoundaryKind(const Point<dim> &)> &kind_of);

  /// [0, L)^dim box with n cells per direction. With periodic = true every
  /// direction is identified; otherwise all boundary faces are marked with
  /// the given kind.
  template <int dim>
  Mesh<dim> box_mesh(unsigned n,
                     double length,
                     bool periodic,
                     BoundaryKind kind = BoundaryKind::do_nothing);

  /// Channel [0,4] x [-1,1] (x [-1,1] in 3D) with a disc / cylinder of
  /// radius 0.25 centered at x = 0.6, y = 0. The coarse 3D mesh has 208
  /// vertices; the coarse 2D mesh (176 vertices, 144 cells) is its
  /// cross-section with every quadrilateral split once. Every refinement splits each cell into 2^dim children and
  /// places new nodes next to the disc on the circle.
  /// Boundaries: x = 0 Dirichlet inflow, x = 4 do-nothing outflow, walls
  /// and disc slip.
  template <int dim>
  Mesh<dim> cylinder_mesh(unsigned refinement);

  /// Simple ASCII dump: vertex count, coordinates, cell count, vertex lists.
  template <int dim>
  void write_mesh_ascii(const Mesh<dim> &mesh, std::ostream &out);

} // namespace idp
