#include <idp/assembly.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace idp
{
  namespace
  {
    template <int dim>
    using Matrix = std::array<std::array<double, dim>, dim>;

    template <int dim>
    double determinant(const Matrix<dim> &J)
    {
      if constexpr (dim == 1)
        return J[0][0];
      else if constexpr (dim == 2)
        return J[0][0] * J[1][1] - J[0][1] * J[1][0];
      else
        return J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
               J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
               J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
    }

    template <int dim>
    Matrix<dim> inverse(const Matrix<dim> &J, double det)
    {
      Matrix<dim> R{};
      if constexpr (dim == 1)
        R[0][0] = 1. / det;
      else if constexpr (dim == 2)
      {
        R[0][0] = J[1][1] / det;
        R[0][1] = -J[0][1] / det;
        R[1][0] = -J[1][0] / det;
        R[1][1] = J[0][0] / det;
      }
      else
      {
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c)
          {
            const int r1 = (c + 1) % 3, r2 = (c + 2) % 3;
            const int c1 = (r + 1) % 3, c2 = (r + 2) % 3;
            R[r][c] = (J[r1][c1] * J[r2][c2] - J[r1][c2] * J[r2][c1]) / det;
          }
      }
      return R;
    }

    /// Values and reference gradients of the 2^dim Q1 shape functions.
    template <int dim>
    struct ShapeValues
    {
      static constexpr int n = 1 << dim;
      std::array<double, n> value;
      std::array<std::array<double, dim>, n> gradient;

      explicit ShapeValues(const std::array<double, dim> &xi)
      {
        for (int v = 0; v < n; ++v)
        {
          value[v] = 1.;
          for (int d = 0; d < dim; ++d)
            value[v] *= ((v >> d) & 1) ? xi[d] : 1. - xi[d];
          for (int k = 0; k < dim; ++k)
          {
            double g = ((v >> k) & 1) ? 1. : -1.;
            for (int d = 0; d < dim; ++d)
              if (d != k)
                g *= ((v >> d) & 1) ? xi[d] : 1. - xi[d];
            gradient[v][k] = g;
          }
        }
      }
    };

    constexpr double gauss_lo = 0.5 - 0.5 / 1.7320508075688772935;
    constexpr double gauss_hi = 0.5 + 0.5 / 1.7320508075688772935;

    template <int dim>
    std::vector<std::array<double, dim>> gauss_points()
    {
      std::vector<std::array<double, dim>> points;
      for (int q = 0; q < (1 << dim); ++q)
      {
        std::array<double, dim> xi;
        for (int d = 0; d < dim; ++d)
          xi[d] = ((q >> d) & 1) ? gauss_hi : gauss_lo;
        points.push_back(xi);
      }
      return points;
    }

    /// Outward normal times surface element on a face at face-local
    /// reference point s (dim-1 coordinates), plus face shape values.
    template <int dim>
    Point<dim> face_normal_element(const std::array<Point<dim>, (1 << dim) / 2> &x,
                                   const std::array<double, dim - 1> &s)
    {
      Point<dim> n{};
      if constexpr (dim == 1)
      {
        (void)s;
        n[0] = 1.;
      }
      else if constexpr (dim == 2)
      {
        const Point<2> t = x[1] - x[0];
        n[0] = t[1];
        n[1] = -t[0];
      }
      else
      {
        // Bilinear face x(s0, s1) with vertices in lexicographic order.
        Point<3> t0{}, t1{};
        for (int d = 0; d < 3; ++d)
        {
          t0[d] = (1. - s[1]) * (x[1][d] - x[0][d]) + s[1] * (x[3][d] - x[2][d]);
          t1[d] = (1. - s[0]) * (x[2][d] - x[0][d]) + s[0] * (x[3][d] - x[1][d]);
        }
        n[0] = t0[1] * t1[2] - t0[2] * t1[1];
        n[1] = t0[2] * t1[0] - t0[0] * t1[2];
        n[2] = t0[0] * t1[1] - t0[1] * t1[0];
      }
      return n;
    }
  } // namespace


  template <int dim>
  std::size_t PrecomputedMatrices<dim>::find(unsigned i, unsigned j) const
  {
    const auto r = graph.row(i);
    const auto it = std::lower_bound(r.begin(), r.end(), j);
    if (it == r.end() || *it != j)
      return std::size_t(-1);
    return graph.row_start[i] + std::size_t(it - r.begin());
  }

  template <int dim>
  Point<dim> derived_n_ij(const Point<dim> &c_ij)
  {
    const double length = norm(c_ij);
    if (!(length > 0.))
      throw std::domain_error("derived_n_ij: zero vector has no direction");
    Point<dim> n = c_ij;
    n *= 1. / length;
    return n;
  }

  template <int dim>
  PrecomputedMatrices<dim> assemble(const Mesh<dim> &mesh)
  {
    constexpr int nv = Mesh<dim>::vertices_per_cell;
    PrecomputedMatrices<dim> M;
    const unsigned n = mesh.n_dofs;

    std::vector<std::vector<unsigned>> rows(n);
    for (const auto &cell : mesh.cells)
      for (int a = 0; a < nv; ++a)
        for (int b = 0; b < nv; ++b)
          rows[mesh.vertex_to_dof[cell[a]]].push_back(mesh.vertex_to_dof[cell[b]]);
    for (auto &r : rows)
    {
      std::sort(r.begin(), r.end());
      r.erase(std::unique(r.begin(), r.end()), r.end());
    }
    M.graph = Connectivity::from_rows(rows);

    const std::size_t nnz = M.graph.n_nonzero();
    M.m_ij.assign(nnz, 0.);
    M.beta_ij.assign(nnz, 0.);
    M.c_ij.assign(nnz, Point<dim>{});

    const auto points = gauss_points<dim>();
    const double weight = 1. / (1 << dim);
    std::vector<ShapeValues<dim>> shapes;
    for (const auto &xi : points)
      shapes.emplace_back(xi);

    std::array<std::array<double, nv>, nv> m_local, beta_local;
    std::array<std::array<Point<dim>, nv>, nv> c_local;
    std::array<std::size_t, nv * nv> positions;

    for (unsigned c = 0; c < mesh.cells.size(); ++c)
    {
      const auto &cell = mesh.cells[c];
      for (auto &r : m_local)
        r.fill(0.);
      for (auto &r : beta_local)
        r.fill(0.);
      for (auto &r : c_local)
        r.fill(Point<dim>{});

      for (std::size_t q = 0; q < points.size(); ++q)
      {
        const auto &sv = shapes[q];
        Matrix<dim> J{};
        for (int v = 0; v < nv; ++v)
          for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b)
              J[a][b] += mesh.vertices[cell[v]][a] * sv.gradient[v][b];
        const double det = determinant<dim>(J);
        if (!(det > 0.))
        {
          std::ostringstream msg;
          msg << "assemble: non-positive Jacobian determinant " << det
              << " in cell " << c;
          throw std::domain_error(msg.str());
        }
        const Matrix<dim> Jinv = inverse<dim>(J, det);
        const double JxW = det * weight;

        std::array<Point<dim>, nv> grad;
        for (int v = 0; v < nv; ++v)
          for (int a = 0; a < dim; ++a)
          {
            double g = 0.;
            for (int b = 0; b < dim; ++b)
              g += Jinv[b][a] * sv.gradient[v][b];
            grad[v][a] = g;
          }

        for (int a = 0; a < nv; ++a)
          for (int b = 0; b < nv; ++b)
          {
            m_local[a][b] += sv.value[a] * sv.value[b] * JxW;
            beta_local[a][b] += dot(grad[a], grad[b]) * JxW;
            for (int d = 0; d < dim; ++d)
              c_local[a][b][d] += sv.value[a] * grad[b][d] * JxW;
          }
      }

      for (int a = 0; a < nv; ++a)
        for (int b = 0; b < nv; ++b)
          positions[a * nv + b] =
            M.find(mesh.vertex_to_dof[cell[a]], mesh.vertex_to_dof[cell[b]]);
      for (int a = 0; a < nv; ++a)
        for (int b = 0; b < nv; ++b)
        {
          const std::size_t p = positions[a * nv + b];
          M.m_ij[p] += m_local[a][b];
          M.beta_ij[p] += beta_local[a][b];
          M.c_ij[p] += c_local[a][b];
        }
    }

    M.m_i.assign(n, 0.);
    M.inv_m_i.assign(n, 0.);
    for (unsigned i = 0; i < n; ++i)
    {
      double sum = 0.;
      for (std::size_t p = M.graph.row_start[i]; p < M.graph.row_start[i + 1]; ++p)
        sum += M.m_ij[p];
      if (!(sum > 0.))
        throw std::domain_error("assemble: non-positive lumped mass");
      M.m_i[i] = sum;
      M.inv_m_i[i] = 1. / sum;
    }

    // Boundary kinds and mass-weighted slip normals.
    M.boundary_kind.assign(n, BoundaryKind::none);
    M.boundary_normal.assign(n, Point<dim>{});
    constexpr int nf = nv / 2;
    for (const auto &face : mesh.boundary_faces)
    {
      const auto &cell = mesh.cells[face.cell];
      const auto fv = Mesh<dim>::face_vertices(face.face);
      std::array<Point<dim>, nf> x;
      Point<dim> face_center{}, cell_center{};
      for (int k = 0; k < nf; ++k)
      {
        x[k] = mesh.vertices[cell[fv[k]]];
        face_center += x[k];
      }
      for (int v = 0; v < nv; ++v)
        cell_center += mesh.vertices[cell[v]];
      face_center *= 1. / nf;
      cell_center *= 1. / nv;
      const Point<dim> outward = face_center - cell_center;

      for (int k = 0; k < nf; ++k)
      {
        const unsigned dof = mesh.vertex_to_dof[cell[fv[k]]];
        if (face.kind > M.boundary_kind[dof])
          M.boundary_kind[dof] = face.kind;
      }
      if (face.kind != BoundaryKind::slip)
        continue;

      for (int q = 0; q < (1 << (dim - 1)); ++q)
      {
        std::array<double, dim - 1> s{};
        for (int d = 0; d < dim - 1; ++d)
          s[d] = ((q >> d) & 1) ? gauss_hi : gauss_lo;
        Point<dim> normal = face_normal_element<dim>(x, s);
        if (dot(normal, outward) < 0.)
          normal = -normal;
        const double w = 1. / (1 << (dim - 1));
        for (int k = 0; k < nf; ++k)
        {
          double phi = 1.;
          for (int d = 0; d < dim - 1; ++d)
            phi *= ((k >> d) & 1) ? s[d] : 1. - s[d];
          Point<dim> contribution = normal;
          contribution *= phi * w;
          M.boundary_normal[mesh.vertex_to_dof[cell[fv[k]]]] += contribution;
        }
      }
    }
    for (unsigned i = 0; i < n; ++i)
    {
      if (M.boundary_kind[i] != BoundaryKind::slip)
      {
        M.boundary_normal[i] = Point<dim>{};
        continue;
      }
      const double length = norm(M.boundary_normal[i]);
      if (length > 0.)
        M.boundary_normal[i] *= 1. / length;
    }
    return M;
  }

#define IDP_INSTANTIATE(dim)                                                   \
  template struct PrecomputedMatrices<dim>;                                    \
  template PrecomputedMatrices<dim> assemble<dim>(const Mesh<dim> &);          \
  template Point<dim> derived_n_ij<dim>(const Point<dim> &);
  IDP_INSTANTIATE(1)
  IDP_INSTANTIATE(2)
  IDP_INSTANTIATE(3)
#undef IDP_INSTANTIATE

} // namespace idp
