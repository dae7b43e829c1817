#include <idp/output.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace idp
{
  // sum_j c_ij rho_j written with differences (sum_j c_ij = 0) so that
  // constant data has an exactly vanishing gradient.
  template <int dim>
  std::vector<double> schlieren(const std::vector<double> &rho,
                                const PrecomputedMatrices<dim> &matrices,
                                double beta)
  {
    const unsigned n = unsigned(matrices.m_i.size());
    std::vector<double> g(n, 0.);
    for (unsigned i = 0; i < n; ++i)
    {
      const auto row = matrices.graph.row(i);
      const std::size_t first = matrices.graph.row_start[i];
      Point<dim> grad{};
      for (std::size_t s = 0; s < row.size(); ++s)
        for (int d = 0; d < dim; ++d)
          grad[d] += matrices.c_ij[first + s][d] * (rho[row[s]] - rho[i]);
      g[i] = norm(grad) * matrices.inv_m_i[i];
    }
    const double g_max = n ? *std::max_element(g.begin(), g.end()) : 0.;
    std::vector<double> s(n, 1.);
    if (g_max > 0.)
      for (unsigned i = 0; i < n; ++i)
        s[i] = std::exp(-beta * g[i] / g_max);
    return s;
  }

  namespace
  {
    void put(std::ostream &out, double x)
    {
      char buffer[32];
      std::snprintf(buffer, sizeof(buffer), "%.17g", x);
      out << buffer;
    }

    constexpr int vtk_cell_type(int dim)
    {
      return dim == 1 ? 3 : dim == 2 ? 9 : 12;
    }

    // Lexicographic Q1 vertex order -> VTK order.
    constexpr std::array<int, 8> vtk_order{0, 1, 3, 2, 4, 5, 7, 6};
  } // namespace

  template <int dim>
  void write_vtk(std::ostream &out,
                 const Mesh<dim> &mesh,
                 const std::vector<double> &U,
                 const std::vector<double> &schlieren_field,
                 const PolytropicGas &gas)
  {
    constexpr int n = dim + 2;
    constexpr int nv = Mesh<dim>::vertices_per_cell;
    const std::size_t n_points = mesh.vertices.size();
    const std::size_t n_cells = mesh.cells.size();

    out << "# vtk DataFile Version 3.0\n"
        << "idp solution\n"
        << "ASCII\n"
        << "DATASET UNSTRUCTURED_GRID\n"
        << "POINTS " << n_points << " double\n";
    for (const auto &x : mesh.vertices)
    {
      for (int d = 0; d < 3; ++d)
      {
        if (d)
          out << ' ';
        put(out, d < dim ? x[d] : 0.);
      }
      out << '\n';
    }

    out << "CELLS " << n_cells << ' ' << n_cells * (nv + 1) << '\n';
    for (const auto &cell : mesh.cells)
    {
      out << nv;
      for (int v = 0; v < nv; ++v)
        out << ' ' << cell[dim == 1 ? v : vtk_order[v]];
      out << '\n';
    }
    out << "CELL_TYPES " << n_cells << '\n';
    for (std::size_t c = 0; c < n_cells; ++c)
      out << vtk_cell_type(dim) << '\n';

    out << "POINT_DATA " << n_points << '\n';
    auto field = [&](const std::string &name, auto &&value_of_dof) {
      out << "SCALARS " << name << " double 1\n"
          << "LOOKUP_TABLE default\n";
      for (std::size_t v = 0; v < n_points; ++v)
      {
        put(out, value_of_dof(mesh.vertex_to_dof[v]));
        out << '\n';
      }
    };
    auto state = [&](unsigned i) {
      State<dim> u;
      for (int c = 0; c < n; ++c)
        u[c] = U[std::size_t(i) * n + c];
      return u;
    };

    field("density", [&](unsigned i) { return U[std::size_t(i) * n]; });
    for (int d = 0; d < dim; ++d)
      field("momentum_" + std::to_string(d),
            [&](unsigned i) { return U[std::size_t(i) * n + 1 + d]; });
    field("energy", [&](unsigned i) { return U[std::size_t(i) * n + dim + 1]; });
    field("pressure", [&](unsigned i) { return gas.pressure(state(i)); });
    field("schlieren", [&](unsigned i) { return schlieren_field[i]; });
  }

  template <int dim>
  std::string vtk_string(const Mesh<dim> &mesh,
                         const std::vector<double> &U,
                         const std::vector<double> &schlieren_field,
                         const PolytropicGas &gas)
  {
    std::ostringstream out;
    write_vtk(out, mesh, U, schlieren_field, gas);
    return out.str();
  }

#define IDP_INSTANTIATE(dim)                                                   \
  template std::vector<double> schlieren<dim>(const std::vector<double> &,     \
                                              const PrecomputedMatrices<dim> &, \
                                              double);                         \
  template void write_vtk<dim>(std::ostream &, const Mesh<dim> &,              \
                               const std::vector<double> &,                    \
                               const std::vector<double> &,                    \
                               const PolytropicGas &);                         \
  template std::string vtk_string<dim>(const Mesh<dim> &,                      \
                                       const std::vector<double> &,            \
                                       const std::vector<double> &,            \
                                       const PolytropicGas &);
  IDP_INSTANTIATE(1)
  IDP_INSTANTIATE(2)
  IDP_INSTANTIATE(3)
#undef IDP_INSTANTIATE

} // namespace idp
