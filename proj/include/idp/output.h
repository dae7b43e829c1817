#pragma once

#include <idp/assembly.h>
#include <idp/mesh.h>
#include <idp/physics.h>

#include <iosfwd>
#include <string>
#include <vector>

namespace idp
{
  /// s_i = exp(-beta g_i / max_k g_k) with g_i = |sum_j c_ij rho_j| / m_i.
  /// A vanishing maximum gives s = 1.
  template <int dim>
  std::vector<double> schlieren(const std::vector<double> &rho,
                                const PrecomputedMatrices<dim> &matrices,
                                double beta = 10.);

  /**
   * Legacy ASCII VTK unstructured grid with point data per mesh vertex:
   * density, momentum_0..momentum_{d-1}, energy, pressure, schlieren.
   * U holds dim + 2 values per mesh dof.
   */
  template <int dim>
  void write_vtk(std::ostream &out,
                 const Mesh<dim> &mesh,
                 const std::vector<double> &U,
                 const std::vector<double> &schlieren_field,
                 const PolytropicGas &gas);

  template <int dim>
  std::string vtk_string(const Mesh<dim> &mesh,
                         const std::vector<double> &U,
                         const std::vector<double> &schlieren_field,
                         const PolytropicGas &gas);

} // namespace idp
