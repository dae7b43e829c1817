#pragma once

#include <idp/mesh.h>
#include <idp/sparsity.h>
#include <idp/vector.h>

#include <vector>

namespace idp
{
  /**
   * Matrices of the Q1 collocation scheme over the stencil graph, indexed
   * by mesh dofs. The graph stores sorted columns; all per-entry arrays
   * share its positions.
   */
  template <int dim>
  struct PrecomputedMatrices
  {
    Connectivity graph;

    std::vector<double> m_ij;
    std::vector<Point<dim>> c_ij;
    std::vector<double> beta_ij;

    std::vector<double> m_i;
    std::vector<double> inv_m_i;

    /// Boundary treatment per dof and, for slip nodes, the unit normal
    /// obtained from sum_faces int phi_i n ds over slip faces.
    std::vector<BoundaryKind> boundary_kind;
    std::vector<Point<dim>> boundary_normal;

    std::size_t find(unsigned i, unsigned j) const;
    unsigned cardinality(unsigned i) const
    {
      return unsigned(graph.row(i).size());
    }
  };

  /// Tensor-product 2-point Gauss quadrature per cell. Throws
  /// std::domain_error on a non-positive Jacobian determinant.
  template <int dim>
  PrecomputedMatrices<dim> assemble(const Mesh<dim> &mesh);

  /// n_ij = c_ij / |c_ij|. Throws std::domain_error for a zero vector.
  template <int dim>
  Point<dim> derived_n_ij(const Point<dim> &c_ij);

  /// b_ij = delta_ij - m_ij / m_j
  inline double derived_b_ij(double m_ij, double /*m_i*/, double m_j, bool is_diagonal)
  {
    return (is_diagonal ? 1. : 0.) - m_ij / m_j;
  }

} // namespace idp
