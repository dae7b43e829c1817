#include <idp/assembly.h>

#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

using namespace idp;

namespace
{
  // Brute-force oracle: composite midpoint rule with its own bilinear shape
  // functions on an arbitrary convex quadrilateral (lexicographic vertices).
  struct DenseQuad
  {
    std::array<std::array<double, 4>, 4> m{};
    std::array<std::array<std::array<double, 2>, 4>, 4> c{};
    std::array<std::array<double, 4>, 4> beta{};
  };

  DenseQuad integrate_quad(const std::array<std::array<double, 2>, 4> &x, int samples)
  {
    DenseQuad out;
    const double h = 1. / samples;
    for (int a = 0; a < samples; ++a)
      for (int b = 0; b < samples; ++b)
      {
        const double s = (a + 0.5) * h, t = (b + 0.5) * h;
        const double phi[4] = {(1 - s) * (1 - t), s * (1 - t), (1 - s) * t, s * t};
        const double ds[4] = {-(1 - t), (1 - t), -t, t};
        const double dt[4] = {-(1 - s), -s, (1 - s), s};
        double J[2][2] = {{0, 0}, {0, 0}};
        for (int v = 0; v < 4; ++v)
          for (int d = 0; d < 2; ++d)
          {
            J[d][0] += x[v][d] * ds[v];
            J[d][1] += x[v][d] * dt[v];
          }
        const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
        double grad[4][2];
        for (int v = 0; v < 4; ++v)
        {
          grad[v][0] = (J[1][1] * ds[v] - J[1][0] * dt[v]) / det;
          grad[v][1] = (-J[0][1] * ds[v] + J[0][0] * dt[v]) / det;
        }
        const double w = det * h * h;
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < 4; ++j)
          {
            out.m[i][j] += phi[i] * phi[j] * w;
            out.beta[i][j] += (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]) * w;
            out.c[i][j][0] += phi[i] * grad[j][0] * w;
            out.c[i][j][1] += phi[i] * grad[j][1] * w;
          }
      }
    return out;
  }

  Mesh<2> single_quad(const std::array<std::array<double, 2>, 4> &x)
  {
    Mesh<2> mesh;
    for (const auto &p : x)
      mesh.vertices.push_back(Point<2>{p[0], p[1]});
    mesh.cells.push_back({0, 1, 2, 3});
    mesh.vertex_to_dof = {0, 1, 2, 3};
    mesh.n_dofs = 4;
    mark_boundary<2>(mesh, [](const Point<2> &) { return BoundaryKind::do_nothing; });
    return mesh;
  }

  template <int dim>
  void check_invariants(const PrecomputedMatrices<dim> &M, double volume)
  {
    const unsigned n = unsigned(M.m_i.size());
    double total = 0.;
    for (unsigned i = 0; i < n; ++i)
    {
      double row_m = 0.;
      Point<dim> row_c{};
      double max_c = 0.;
      for (std::size_t p = M.graph.row_start[i]; p < M.graph.row_start[i + 1]; ++p)
      {
        const unsigned j = M.graph.columns[p];
        row_m += M.m_ij[p];
        row_c += M.c_ij[p];
        max_c = std::max(max_c, norm(M.c_ij[p]));
        const std::size_t q = M.find(j, i);
        REQUIRE(q != std::size_t(-1));
        CHECK(M.m_ij[p] == M.m_ij[q]);
        CHECK(std::abs(M.beta_ij[p] - M.beta_ij[q]) <=
              1e-12 * std::abs(M.beta_ij[p]) + 1e-14);
      }
      CHECK(M.m_i[i] > 0.);
      CHECK(std::abs(M.m_i[i] - row_m) <= 1e-12 * M.m_i[i]);
      CHECK(norm(row_c) <= 1e-12 * max_c);
      CHECK(M.inv_m_i[i] == 1. / M.m_i[i]);
      CHECK(M.graph.row(i).size() > 0);
      CHECK(M.find(i, i) != std::size_t(-1));
      total += M.m_i[i];
    }
    CHECK(std::abs(total - volume) <= 1e-12 * volume);
  }
} // namespace


TEST_CASE("1D uniform mesh: hand-integrated linear elements")
{
  const unsigned n = 8;
  const double L = 2.;
  const double h = L / n;
  const auto M = assemble(box_mesh<1>(n, L, false));
  check_invariants(M, L);

  for (unsigned i = 1; i + 1 < n + 1; ++i)
  {
    CHECK(M.m_i[i] == doctest::Approx(h).epsilon(1e-14));
    CHECK(M.cardinality(i) == 3);
    CHECK(M.c_ij[M.find(i, i - 1)][0] == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(M.c_ij[M.find(i, i + 1)][0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(M.c_ij[M.find(i, i)][0]) <= 1e-14);
    CHECK(M.beta_ij[M.find(i, i)] == doctest::Approx(2. / h).epsilon(1e-13));
    CHECK(M.beta_ij[M.find(i, i + 1)] == doctest::Approx(-1. / h).epsilon(1e-13));

    const std::size_t d = M.find(i, i);
    CHECK(derived_b_ij(M.m_ij[d], M.m_i[i], M.m_i[i], true) ==
          doctest::Approx(1. / 3.).epsilon(1e-13));
  }
  CHECK(M.m_i[0] == doctest::Approx(h / 2).epsilon(1e-14));
}

TEST_CASE("unit square single cell: mass matrix pattern")
{
  const auto M = assemble(single_quad({{{0, 0}, {1, 0}, {0, 1}, {1, 1}}}));
  const double expected[4][4] = {
    {4, 2, 2, 1}, {2, 4, 1, 2}, {2, 1, 4, 2}, {1, 2, 2, 4}};
  for (unsigned i = 0; i < 4; ++i)
  {
    for (unsigned j = 0; j < 4; ++j)
      CHECK(M.m_ij[M.find(i, j)] == doctest::Approx(expected[i][j] / 36.).epsilon(1e-14));
    CHECK(M.m_i[i] == doctest::Approx(0.25).epsilon(1e-14));
  }
  check_invariants(M, 1.);
}

TEST_CASE("distorted quadrilaterals against brute-force midpoint integration")
{
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> jitter(-0.2, 0.2);
  for (int trial = 0; trial < 5; ++trial)
  {
    std::array<std::array<double, 2>, 4> x = {{{0, 0}, {1, 0}, {0, 1}, {1, 1}}};
    for (auto &p : x)
    {
      p[0] += jitter(rng);
      p[1] += jitter(rng);
    }
    const auto M = assemble(single_quad(x));
    const auto oracle = integrate_quad(x, 400);
    for (unsigned i = 0; i < 4; ++i)
      for (unsigned j = 0; j < 4; ++j)
      {
        const std::size_t p = M.find(i, j);
        // Mass integrand is a polynomial of degree <= 3 per direction times
        // the bilinear Jacobian: 2-point Gauss is exact up to degree 3, so
        // only the midpoint error remains.
        CHECK(M.m_ij[p] == doctest::Approx(oracle.m[i][j]).epsilon(1e-5));
        // c_ij integrand phi_i * cofactor(grad phi_j) is polynomial: exact.
        CHECK(M.c_ij[p][0] == doctest::Approx(oracle.c[i][j][0]).epsilon(1e-5).scale(1));
        CHECK(M.c_ij[p][1] == doctest::Approx(oracle.c[i][j][1]).epsilon(1e-5).scale(1));
      }
  }
}

TEST_CASE("periodic box: node counts, full antisymmetry, structured cardinality")
{
  const unsigned n = 6;
  const auto mesh = box_mesh<2>(n, 1., true);
  CHECK(mesh.vertices.size() == (n + 1) * (n + 1));
  CHECK(mesh.n_dofs == n * n);
  CHECK(mesh.boundary_faces.empty());

  const auto M = assemble(mesh);
  check_invariants(M, 1.);
  for (unsigned i = 0; i < M.m_i.size(); ++i)
  {
    CHECK(M.cardinality(i) == 9);
    for (std::size_t p = M.graph.row_start[i]; p < M.graph.row_start[i + 1]; ++p)
    {
      const auto q = M.find(M.graph.columns[p], i);
      CHECK(norm(M.c_ij[p] + M.c_ij[q]) <= 1e-12);
    }
  }

  const auto M3 = assemble(box_mesh<3>(3, 2., true));
  check_invariants(M3, 8.);
  for (unsigned i = 0; i < M3.m_i.size(); ++i)
    CHECK(M3.cardinality(i) == 27);
}

TEST_CASE("b_ij derived on the fly: columns sum to zero")
{
  const auto M = assemble(cylinder_mesh<2>(0));
  const unsigned n = unsigned(M.m_i.size());
  // sum_j b_ji = sum_j (delta_ji - m_ji / m_i) = 1 - 1 = 0
  for (unsigned i = 0; i < n; ++i)
  {
    double sum = 0.;
    for (unsigned j : M.graph.row(i))
      sum += derived_b_ij(M.m_ij[M.find(j, i)], M.m_i[j], M.m_i[i], i == j);
    CHECK(std::abs(sum) <= 1e-14);
  }
}

TEST_CASE("derived_n_ij")
{
  const auto n = derived_n_ij<2>(Point<2>{3., 4.});
  CHECK(n[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK_THROWS_AS(derived_n_ij<2>(Point<2>{0., 0.}), std::domain_error);
}

TEST_CASE("interior antisymmetry on the cylinder mesh")
{
  const auto M = assemble(cylinder_mesh<2>(1));
  const unsigned n = unsigned(M.m_i.size());
  for (unsigned i = 0; i < n; ++i)
  {
    if (M.boundary_kind[i] != BoundaryKind::none)
      continue;
    for (std::size_t p = M.graph.row_start[i]; p < M.graph.row_start[i + 1]; ++p)
    {
      const unsigned j = M.graph.columns[p];
      if (M.boundary_kind[j] != BoundaryKind::none)
        continue;
      const auto q = M.find(j, i);
      CHECK(norm(M.c_ij[p] + M.c_ij[q]) <= 1e-12 * norm(M.c_ij[p]) + 1e-15);
    }
  }
}

TEST_CASE("cylinder benchmark mesh")
{
  SUBCASE("coarse 3D mesh has 208 gridpoints")
  {
    CHECK(cylinder_mesh<3>(0).vertices.size() == 208);
  }
  SUBCASE("refinement multiplies the cell count by 2^d")
  {
    const auto c2 = cylinder_mesh<2>(0).cells.size();
    const auto c3 = cylinder_mesh<3>(0).cells.size();
    for (unsigned r = 1; r <= 2; ++r)
    {
      CHECK(cylinder_mesh<2>(r).cells.size() == c2 << (2 * r));
      CHECK(cylinder_mesh<3>(r).cells.size() == c3 << (3 * r));
    }
  }
  SUBCASE("disc nodes are snapped to the circle; volume converges")
  {
    const double exact = 8. - std::numbers::pi * 0.0625;
    double previous_error = 1.;
    for (unsigned r = 0; r <= 3; ++r)
    {
      const auto mesh = cylinder_mesh<2>(r);
      const auto M = assemble(mesh);
      double volume = 0.;
      for (double m : M.m_i)
        volume += m;
      check_invariants(M, volume);
      const double error = std::abs(volume - exact);
      CHECK(error < previous_error / 3.);
      previous_error = error;

      const auto points = mesh.dof_points();
      unsigned on_disc = 0;
      for (unsigned i = 0; i < points.size(); ++i)
      {
        const double dx = points[i][0] - 0.6, dy = points[i][1];
        const double r_i = std::sqrt(dx * dx + dy * dy);
        CHECK(r_i > 0.25 - 1e-12);
        if (r_i < 0.25 + 1e-12)
        {
          ++on_disc;
          REQUIRE(M.boundary_kind[i] == BoundaryKind::slip);
          // Outward normal of the fluid domain points into the disc.
          CHECK(M.boundary_normal[i][0] * dx + M.boundary_normal[i][1] * dy <
                -0.99 * r_i);
        }
        if (points[i][0] == 0.)
          CHECK(M.boundary_kind[i] == BoundaryKind::dirichlet);
        else if (std::abs(points[i][1]) == 1.)
        {
          CHECK(M.boundary_kind[i] == BoundaryKind::slip);
          CHECK(M.boundary_normal[i][1] == doctest::Approx(points[i][1]));
        }
        else if (points[i][0] == 4.)
          CHECK(M.boundary_kind[i] == BoundaryKind::do_nothing);
      }
      CHECK(on_disc == (16u << r));
    }
  }
  SUBCASE("3D invariants")
  {
    const auto M = assemble(cylinder_mesh<3>(0));
    double volume = 0.;
    for (double m : M.m_i)
      volume += m;
    check_invariants(M, volume);
  }
}

TEST_CASE("degenerate cell is rejected")
{
  // Vertices 2 and 3 swapped: self-intersecting bow tie.
  CHECK_THROWS_AS(assemble(single_quad({{{0, 0}, {1, 0}, {1, 1}, {0, 1}}})),
                  std::domain_error);
  CHECK_THROWS_AS(box_mesh<2>(0, 1., false), std::invalid_argument);
}
