#include <idp/mesh.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace idp
{
  const char *to_string(BoundaryKind kind)
  {
    switch (kind)
    {
      case BoundaryKind::none:
        return "none";
      case BoundaryKind::do_nothing:
        return "do_nothing";
      case BoundaryKind::slip:
        return "slip";
      case BoundaryKind::dirichlet:
        return "dirichlet";
    }
    return "unknown";
  }

  template <int dim>
  std::vector<Point<dim>> Mesh<dim>::dof_points() const
  {
    std::vector<Point<dim>> points(n_dofs);
    std::vector<bool> set(n_dofs, false);
    for (unsigned v = 0; v < vertices.size(); ++v)
    {
      const unsigned d = vertex_to_dof[v];
      if (!set[d])
      {
        points[d] = vertices[v];
        set[d] = true;
      }
    }
    return points;
  }

  template <int dim>
  std::array<int, Mesh<dim>::vertices_per_cell / 2>
  Mesh<dim>::face_vertices(int face)
  {
    const int direction = face / 2;
    const int side = face % 2;
    std::array<int, vertices_per_cell / 2> result{};
    int n = 0;
    for (int v = 0; v < vertices_per_cell; ++v)
      if (((v >> direction) & 1) == side)
        result[n++] = v;
    return result;
  }

  template <int dim>
  void mark_boundary(Mesh<dim> &mesh,
                     const std::function<BoundaryKind(const Point<dim> &)> &kind_of)
  {
    using Key = std::array<unsigned, Mesh<dim>::vertices_per_cell / 2>;
    std::map<Key, std::pair<unsigned, unsigned char>> seen;
    std::map<Key, unsigned> count;
    for (unsigned c = 0; c < mesh.cells.size(); ++c)
      for (int f = 0; f < Mesh<dim>::faces_per_cell; ++f)
      {
        Key key;
        const auto fv = Mesh<dim>::face_vertices(f);
        for (std::size_t k = 0; k < fv.size(); ++k)
          key[k] = mesh.vertex_to_dof[mesh.cells[c][fv[k]]];
        std::sort(key.begin(), key.end());
        if (++count[key] == 1)
          seen[key] = {c, static_cast<unsigned char>(f)};
      }

    mesh.boundary_faces.clear();
    for (const auto &[key, n] : count)
    {
      if (n != 1)
        continue;
      const auto [c, f] = seen[key];
      Point<dim> center{};
      const auto fv = Mesh<dim>::face_vertices(f);
      for (int v : fv)
        center += mesh.vertices[mesh.cells[c][v]];
      center *= 1. / fv.size();
      mesh.boundary_faces.push_back({c, f, kind_of(center)});
    }
    std::sort(mesh.boundary_faces.begin(),
              mesh.boundary_faces.end(),
              [](const auto &a, const auto &b) {
                return a.cell != b.cell ? a.cell < b.cell : a.face < b.face;
              });
  }

  template <int dim>
  Mesh<dim> box_mesh(unsigned n, double length, bool periodic, BoundaryKind kind)
  {
    if (n == 0 || !(length > 0.))
      throw std::invalid_argument("box_mesh: need n >= 1 and length > 0");
    if (periodic && n < 2)
      throw std::invalid_argument("box_mesh: periodic box needs n >= 2");

    Mesh<dim> mesh;
    const unsigned nv = n + 1;
    unsigned total = 1;
    for (int d = 0; d < dim; ++d)
      total *= nv;

    mesh.vertices.resize(total);
    mesh.vertex_to_dof.resize(total);
    const unsigned nd = periodic ? n : nv;
    for (unsigned v = 0; v < total; ++v)
    {
      unsigned rest = v, dof = 0, stride = 1;
      for (int d = 0; d < dim; ++d)
      {
        const unsigned idx = rest % nv;
        rest /= nv;
        mesh.vertices[v][d] = length * idx / n;
        dof += (periodic ? idx % n : idx) * stride;
        stride *= nd;
      }
      mesh.vertex_to_dof[v] = dof;
    }
    mesh.n_dofs = 1;
    for (int d = 0; d < dim; ++d)
      mesh.n_dofs *= nd;

    unsigned n_cells = 1;
    for (int d = 0; d < dim; ++d)
      n_cells *= n;
    mesh.cells.resize(n_cells);
    for (unsigned c = 0; c < n_cells; ++c)
    {
      std::array<unsigned, dim> idx;
      unsigned rest = c;
      for (int d = 0; d < dim; ++d)
      {
        idx[d] = rest % n;
        rest /= n;
      }
      for (int v = 0; v < Mesh<dim>::vertices_per_cell; ++v)
      {
        unsigned vertex = 0, stride = 1;
        for (int d = 0; d < dim; ++d)
        {
          vertex += (idx[d] + ((v >> d) & 1)) * stride;
          stride *= nv;
        }
        mesh.cells[c][v] = vertex;
      }
    }

    if (!periodic)
      mark_boundary<dim>(mesh, [kind](const Point<dim> &) { return kind; });
    return mesh;
  }


  namespace
  {
    /// Merges points closer than a tolerance using a bucket grid.
    template <int dim>
    class PointMerger
    {
    public:
      explicit PointMerger(double tolerance)
        : tolerance_(tolerance)
        , bucket_(1000. * tolerance)
      {}

      unsigned insert(const Point<dim> &p)
      {
        std::array<long long, dim> key;
        for (int d = 0; d < dim; ++d)
          key[d] = (long long)std::floor(p[d] / bucket_);

        for (int offset = 0; offset < ipow3(); ++offset)
        {
          std::array<long long, dim> k2 = key;
          int rest = offset;
          for (int d = 0; d < dim; ++d)
          {
            k2[d] += rest % 3 - 1;
            rest /= 3;
          }
          const auto it = buckets_.find(k2);
          if (it == buckets_.end())
            continue;
          for (unsigned idx : it->second)
            if (norm(Point<dim>(points_[idx] - p)) < tolerance_)
              return idx;
        }
        const unsigned idx = unsigned(points_.size());
        points_.push_back(p);
        buckets_[key].push_back(idx);
        return idx;
      }

      const std::vector<Point<dim>> &points() const { return points_; }

    private:
      static constexpr int ipow3()
      {
        int r = 1;
        for (int d = 0; d < dim; ++d)
          r *= 3;
        return r;
      }

      double tolerance_;
      double bucket_;
      std::vector<Point<dim>> points_;
      std::map<std::array<long long, dim>, std::vector<unsigned>> buckets_;
    };

    constexpr double channel_length = 4.;
    constexpr double disc_x = 0.6;
    constexpr double disc_radius = 0.25;

    /// Map of one coarse 2D cell from [0,1]^2.
    struct CoarseCell2D
    {
      bool ring = false;
      std::array<Point<2>, 4> corners{}; // ordinary cell, lexicographic
      Point<2> outer0{}, outer1{};       // ring cell
      double theta0 = 0., theta1 = 0.;

      Point<2> operator()(double xi, double eta) const
      {
        Point<2> p;
        if (!ring)
        {
          for (int d = 0; d < 2; ++d)
            p[d] = (1. - xi) * (1. - eta) * corners[0][d] +
                   xi * (1. - eta) * corners[1][d] +
                   (1. - xi) * eta * corners[2][d] + xi * eta * corners[3][d];
          return p;
        }
        const double theta = theta0 + xi * (theta1 - theta0);
        Point<2> inner;
        inner[0] = disc_x + disc_radius * std::cos(theta);
        inner[1] = disc_radius * std::sin(theta);
        for (int d = 0; d < 2; ++d)
        {
          const double outer = outer0[d] + xi * (outer1[d] - outer0[d]);
          p[d] = (1. - eta) * outer + eta * inner[d];
        }
        return p;
      }
    };

    std::vector<CoarseCell2D> coarse_cylinder_cells()
    {
      const std::array<double, 9> xs = {0., 0.1, 0.6, 1.1, 1.68, 2.26, 2.84, 3.42, 4.};
      const std::array<double, 5> ys = {-1., -0.5, 0., 0.5, 1.};
      std::vector<CoarseCell2D> cells;
      for (int j = 0; j + 1 < int(ys.size()); ++j)
        for (int i = 0; i + 1 < int(xs.size()); ++i)
        {
          // The 2x2 block [0.1, 1.1] x [-0.5, 0.5] holds the disc.
          if (i >= 1 && i <= 2 && j >= 1 && j <= 2)
            continue;
          CoarseCell2D c;
          for (int v = 0; v < 4; ++v)
          {
            c.corners[v][0] = xs[i + (v & 1)];
            c.corners[v][1] = ys[j + (v >> 1)];
          }
          cells.push_back(c);
        }

      // Eight ring cells between the block boundary and the disc,
      // counterclockwise starting at the lower left corner.
      const double h = 0.5;
      const std::array<std::array<double, 2>, 8> outer = {{{-h, -h},
                                                           {0., -h},
                                                           {h, -h},
                                                           {h, 0.},
                                                           {h, h},
                                                           {0., h},
                                                           {-h, h},
                                                           {-h, 0.}}};
      const double pi = std::numbers::pi;
      for (int k = 0; k < 8; ++k)
      {
        CoarseCell2D c;
        c.ring = true;
        const int k1 = (k + 1) % 8;
        c.outer0[0] = disc_x + outer[k][0];
        c.outer0[1] = outer[k][1];
        c.outer1[0] = disc_x + outer[k1][0];
        c.outer1[1] = outer[k1][1];
        c.theta0 = 1.25 * pi + k * 0.25 * pi;
        c.theta1 = c.theta0 + 0.25 * pi;
        cells.push_back(c);
      }
      return cells;
    }

    BoundaryKind classify_cylinder(double x, double y, double z, bool three_d)
    {
      constexpr double tol = 1e-9;
      if (std::abs(x) < tol)
        return BoundaryKind::dirichlet;
      if (std::abs(x - channel_length) < tol)
        return BoundaryKind::do_nothing;
      if (std::abs(std::abs(y) - 1.) < tol)
        return BoundaryKind::slip;
      if (three_d && std::abs(std::abs(z) - 1.) < tol)
        return BoundaryKind::slip;
      return BoundaryKind::slip; // disc / cylinder surface
    }
  } // namespace

  template <int dim>
  Mesh<dim> cylinder_mesh(unsigned refinement)
  {
    static_assert(dim == 2 || dim == 3, "cylinder mesh exists in 2D and 3D");
    if (refinement > 8)
      throw std::invalid_argument("cylinder_mesh: refinement level too large");

    const auto coarse = coarse_cylinder_cells();
    const std::array<double, 4> zs = {-1., -1. / 3., 1. / 3., 1.};
    const int layers = dim == 3 ? 3 : 1;
    // The 2D coarse mesh is the 3D cross-section split once more, so that
    // equal refinement levels give comparable in-plane resolution.
    const unsigned m = 1u << (refinement + (dim == 2 ? 1 : 0));

    PointMerger<dim> merger(1e-10);
    Mesh<dim> mesh;

    for (int layer = 0; layer < layers; ++layer)
      for (const auto &cc : coarse)
      {
        const unsigned nz = dim == 3 ? m : 1;
        std::vector<unsigned> local;
        const unsigned np = m + 1;
        const unsigned npz = dim == 3 ? m + 1 : 1;
        local.resize(np * np * npz);
        for (unsigned c = 0; c < npz; ++c)
          for (unsigned b = 0; b < np; ++b)
            for (unsigned a = 0; a < np; ++a)
            {
              const Point<2> q = cc(double(a) / m, double(b) / m);
              Point<dim> p;
              p[0] = q[0];
              p[1] = q[1];
              if constexpr (dim == 3)
                p[2] = zs[layer] + (zs[layer + 1] - zs[layer]) * double(c) / m;
              local[(c * np + b) * np + a] = merger.insert(p);
            }
        for (unsigned c = 0; c < nz; ++c)
          for (unsigned b = 0; b < m; ++b)
            for (unsigned a = 0; a < m; ++a)
            {
              std::array<unsigned, Mesh<dim>::vertices_per_cell> cell;
              for (int v = 0; v < Mesh<dim>::vertices_per_cell; ++v)
              {
                const unsigned ia = a + (v & 1);
                const unsigned ib = b + ((v >> 1) & 1);
                const unsigned ic = dim == 3 ? c + ((v >> 2) & 1) : 0;
                cell[v] = local[(ic * np + ib) * np + ia];
              }
              mesh.cells.push_back(cell);
            }
      }

    mesh.vertices = merger.points();
    mesh.n_dofs = unsigned(mesh.vertices.size());
    mesh.vertex_to_dof.resize(mesh.n_dofs);
    for (unsigned v = 0; v < mesh.n_dofs; ++v)
      mesh.vertex_to_dof[v] = v;

    mark_boundary<dim>(mesh, [](const Point<dim> &p) {
      return classify_cylinder(p[0], p[1], dim == 3 ? p[dim - 1] : 0., dim == 3);
    });
    return mesh;
  }

  template <int dim>
  void write_mesh_ascii(const Mesh<dim> &mesh, std::ostream &out)
  {
    out.precision(17);
    out << "vertices " << mesh.vertices.size() << '\n';
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    {
      for (int d = 0; d < dim; ++d)
        out << (d ? " " : "") << mesh.vertices[v][d];
      out << ' ' << mesh.vertex_to_dof[v] << '\n';
    }
    out << "cells " << mesh.cells.size() << '\n';
    for (const auto &c : mesh.cells)
    {
      for (int v = 0; v < Mesh<dim>::vertices_per_cell; ++v)
        out << (v ? " " : "") << c[v];
      out << '\n';
    }
    out << "boundary_faces " << mesh.boundary_faces.size() << '\n';
    for (const auto &f : mesh.boundary_faces)
      out << f.cell << ' ' << int(f.face) << ' ' << to_string(f.kind) << '\n';
  }

#define IDP_INSTANTIATE(dim)                                                   \
  template struct Mesh<dim>;                                                   \
  template void mark_boundary<dim>(                                            \
    Mesh<dim> &, const std::function<BoundaryKind(const Point<dim> &)> &);     \
  template Mesh<dim> box_mesh<dim>(unsigned, double, bool, BoundaryKind);      \
  template void write_mesh_ascii<dim>(const Mesh<dim> &, std::ostream &);
  IDP_INSTANTIATE(1)
  IDP_INSTANTIATE(2)
  IDP_INSTANTIATE(3)
#undef IDP_INSTANTIATE

  template Mesh<2> cylinder_mesh<2>(unsigned);
  template Mesh<3> cylinder_mesh<3>(unsigned);

} // namespace idp
