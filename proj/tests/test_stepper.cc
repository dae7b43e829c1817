#include <doctest.h>

#include <idp/assembly.h>
#include <idp/riemann.h>
#include <idp/stepper.h>

#include <cmath>
#include <random>

using namespace idp;

namespace
{
  // Test double: forward Euler of a frozen linear operator, dense.
  struct LinearOperator
  {
    using Vector = std::vector<double>;
    std::vector<std::vector<double>> A;
    double tau_max = 0.1;
    unsigned calls = 0;
    int restart_at_call = -1;

    StageResult euler(const Vector &U, Vector &out, double tau_limit, bool fixed)
    {
      const int call = int(calls++);
      StageResult r;
      r.tau_max = tau_max;
      if (call == restart_at_call)
      {
        r.tau_max = 0.5 * tau_limit;
        r.restart = true;
        return r;
      }
      r.tau = fixed ? tau_limit : std::min(tau_max, tau_limit);
      out = apply(U, r.tau);
      return r;
    }

    Vector apply(const Vector &U, double tau) const
    {
      Vector out(U.size());
      for (std::size_t i = 0; i < U.size(); ++i)
      {
        double s = 0.;
        for (std::size_t j = 0; j < U.size(); ++j)
          s += A[i][j] * U[j];
        out[i] = U[i] + tau * s;
      }
      return out;
    }

    void combine(Vector &out, double a, const Vector &x, double b, const Vector &y) const
    {
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a * x[i] + b * y[i];
    }
  };

  // One rank, all matrices of a mesh.
  template <int dim>
  struct Setup
  {
    PrecomputedMatrices<dim> M;
    Partition part;
    std::vector<LocalProblem<dim>> locals;
    Communicator comm{1};

    Setup(const Mesh<dim> &mesh, unsigned lanes)
      : M(assemble(mesh))
      , part(partition(M.graph, 1))
      , locals(distribute(M, part, lanes))
    {}
  };
} // namespace


TEST_CASE("ssp_rk3_step: frozen linear operator matches the three-stage combination")
{
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1., 1.);
  for (int trial = 0; trial < 20; ++trial)
  {
    const unsigned n = 2 + unsigned(rng() % 10);
    LinearOperator op;
    op.A.assign(n, std::vector<double>(n));
    for (auto &row : op.A)
      for (double &a : row)
        a = u(rng);
    std::vector<double> U(n);
    for (double &x : U)
      x = u(rng);

    const double tau = op.tau_max;
    const auto U1 = op.apply(U, tau);
    auto U2 = op.apply(U1, tau);
    for (unsigned i = 0; i < n; ++i)
      U2[i] = 0.75 * U[i] + 0.25 * U2[i];
    auto U3 = op.apply(U2, tau);
    for (unsigned i = 0; i < n; ++i)
      U3[i] = U[i] / 3. + 2. / 3. * U3[i];

    auto V = U;
    CHECK(ssp_rk3_step(op, V, 1.) == tau);
    CHECK(op.calls == 3);
    for (unsigned i = 0; i < n; ++i)
      CHECK(std::abs(V[i] - U3[i]) <= 1e-14);
  }
}

TEST_CASE("ssp_rk3_step: a later stage exceeding its bound restarts with the lower step")
{
  LinearOperator op;
  op.A = {{-1., 0.}, {0., -2.}};
  op.restart_at_call = 2; // third stage of the first attempt
  std::vector<double> U{1., 1.};
  const double tau = ssp_rk3_step(op, U, 1.);
  CHECK(tau == 0.05);
  CHECK(op.calls == 6);
}

TEST_CASE("compute_tau examples")
{
  CHECK(compute_tau({-1.}, {2.}, 0.5) == 0.5);
  const std::vector<double> m{1., 2., 0.5};
  const std::vector<double> d{-3., -1., -0.25};
  const double tau = compute_tau(d, m, 0.9);
  CHECK(tau == doctest::Approx(0.15));
  CHECK(compute_tau({-6., -2., -0.5}, m, 0.9) == tau / 2.);
  CHECK(compute_tau({0., -1.}, {1., 2.}, 1.) == 1.);
  CHECK_THROWS_AS(compute_tau({0., 0.}, {1., 1.}, 1.), std::domain_error);
}

TEST_CASE("euler: constant state on a periodic mesh is a fixed point")
{
  Setup<2> s(box_mesh<2>(8, 1., true), 4);
  const PolytropicGas gas(1.4);
  const auto u = gas.from_primitive<2>(1.3, Vec<2>{0.4, -0.7}, 2.1);
  StepperParameters prm;
  prm.lanes = 4;
  EulerStepper<2> stepper(s.locals[0], s.comm, prm);
  auto U = stepper.make_vector();
  for (std::size_t i = 0; i < U.size(); ++i)
    U[i] = u[int(i % 4)];
  auto V = stepper.make_vector();
  const StageResult r = stepper.euler(U, V, std::numeric_limits<double>::infinity(), false);
  CHECK(r.tau > 0.);
  CHECK(V == U);
}

TEST_CASE("euler: low-order update on a three-node periodic line matches a dense evaluation")
{
  // Three cells on a periodic line: every node couples to both others.
  Setup<1> s(box_mesh<1>(3, 1.5, true), 1);
  const auto &M = s.M;
  const PolytropicGas gas(1.4);
  const RiemannSolver riemann(gas);
  StepperParameters prm;
  prm.limiter_passes = 0;
  prm.cfl = 0.7;
  EulerStepper<1> stepper(s.locals[0], s.comm, prm);
  const auto &L = s.locals[0];

  const State<1> states[3] = {gas.from_primitive<1>(1.0, Vec<1>{0.3}, 1.0),
                              gas.from_primitive<1>(0.5, Vec<1>{-0.2}, 0.4),
                              gas.from_primitive<1>(0.8, Vec<1>{1.1}, 2.0)};
  std::vector<double> global(9);
  for (unsigned i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c)
      global[i * 3 + c] = states[i][c];
  auto U = stepper.make_vector();
  scatter_to_local(L, global, U, 3);

  // Dense oracle by mesh dof.
  double d[3][3] = {};
  for (unsigned i = 0; i < 3; ++i)
    for (unsigned j = 0; j < 3; ++j)
      if (i != j)
        d[i][j] = riemann.d_ij_low(states[i], states[j], M.c_ij[M.find(i, j)],
                                   M.c_ij[M.find(j, i)]);
  double tau = std::numeric_limits<double>::infinity();
  for (unsigned i = 0; i < 3; ++i)
  {
    double d_ii = 0.;
    for (unsigned j = 0; j < 3; ++j)
      if (j != i)
      {
        CHECK(d[i][j] == d[j][i]);
        d_ii -= d[i][j];
      }
    tau = std::min(tau, prm.cfl * M.m_i[i] / (-2. * d_ii));
  }
  double expected[3][3];
  for (unsigned i = 0; i < 3; ++i)
  {
    State<1> sum{};
    for (unsigned j = 0; j < 3; ++j)
    {
      const auto f = gas.flux(states[j]);
      const auto c = M.c_ij[M.find(i, j)];
      for (int k = 0; k < 3; ++k)
        sum[k] += -f[k][0] * c[0] + d[i][j] * (states[j][k] - states[i][k]);
    }
    for (int k = 0; k < 3; ++k)
      expected[i][k] = states[i][k] + tau / M.m_i[i] * sum[k];
  }

  auto V = stepper.make_vector();
  const StageResult r = stepper.euler(U, V, std::numeric_limits<double>::infinity(), false);
  CHECK(r.tau == doctest::Approx(tau).epsilon(1e-14));
  std::vector<double> out(9);
  gather_owned(L, V, out, 3);
  for (unsigned i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      CHECK(std::abs(out[i * 3 + k] - expected[i][k]) <= 1e-13 * (1. + std::abs(expected[i][k])));
}

TEST_CASE("euler: conservation and lane/worker/rank equivalence on a periodic box")
{
  const auto mesh = box_mesh<2>(12, 1., true);
  const PrecomputedMatrices<2> M = assemble(mesh);
  const PolytropicGas gas(1.4);
  const auto points = mesh.dof_points();
  std::vector<double> global(std::size_t(mesh.n_dofs) * 4);
  for (unsigned i = 0; i < mesh.n_dofs; ++i)
  {
    const auto &x = points[i];
    const double rho = 1. + 0.6 * std::exp(-40. * ((x[0] - 0.4) * (x[0] - 0.4) +
                                                   (x[1] - 0.6) * (x[1] - 0.6)));
    const auto u = gas.from_primitive<2>(rho, Vec<2>{0.8, -0.3}, 1. + 0.5 * (rho - 1.));
    for (int c = 0; c < 4; ++c)
      global[i * 4 + c] = u[c];
  }

  auto advance = [&](unsigned R, unsigned workers, unsigned lanes, bool overlap) {
    const Partition part = partition(M.graph, R);
    const auto locals = distribute(M, part, lanes);
    Communicator comm(R);
    std::vector<double> result(global.size());
    run_ranks(comm, [&](unsigned r) {
      StepperParameters prm;
      prm.lanes = lanes;
      prm.workers = workers;
      prm.overlap = overlap;
      EulerStepper<2> stepper(locals[r], comm, prm);
      auto U = stepper.make_vector();
      scatter_to_local(locals[r], global, U, 4);
      for (int step = 0; step < 5; ++step)
        ssp_rk3_step(stepper, U, 1.);
      gather_owned(locals[r], U, result, 4);
    });
    return result;
  };

  const auto reference = advance(1, 1, 1, true);
  for (int c = 0; c < 4; ++c)
  {
    double before = 0., after = 0., scale = 0.;
    for (unsigned i = 0; i < mesh.n_dofs; ++i)
    {
      before += M.m_i[i] * global[i * 4 + c];
      after += M.m_i[i] * reference[i * 4 + c];
      scale += M.m_i[i] * std::abs(global[i * 4 + c]);
    }
    CHECK(std::abs(after - before) <= 1e-12 * scale);
  }
  CHECK(advance(1, 1, 4, true) == reference);
  CHECK(advance(1, 3, 8, true) == reference);
  CHECK(advance(3, 1, 2, false) == reference);
  CHECK(advance(4, 2, 4, true) == reference);
}

TEST_CASE("euler: inadmissible input is reported with its coordinates")
{
  Setup<2> s(box_mesh<2>(4, 1., true), 1);
  s.locals[0].node_points.assign(s.locals[0].n_owned(), Point<2>{0.25, 0.5});
  EulerStepper<2> stepper(s.locals[0], s.comm, StepperParameters{});
  auto U = stepper.make_vector();
  for (std::size_t i = 0; i < U.size(); i += 4)
  {
    U[i] = 1.;
    U[i + 3] = 2.;
  }
  U[4 * 3 + 3] = -1.;
  CHECK_THROWS_WITH_AS(stepper.check_admissible(U, "input"),
                       doctest::Contains("(0.25, 0.5)"),
                       std::domain_error);
}

TEST_CASE("boundary conditions: slip removes the normal momentum, dirichlet sets the state")
{
  Setup<2> s(box_mesh<2>(4, 1., false, BoundaryKind::slip), 1);
  const auto &L = s.locals[0];
  EulerStepper<2> stepper(L, s.comm, StepperParameters{});
  auto U = stepper.make_vector();
  for (std::size_t i = 0; i < U.size(); i += 4)
  {
    U[i] = 1.;
    U[i + 1] = 0.3;
    U[i + 2] = -0.4;
    U[i + 3] = 3.;
  }
  stepper.apply_boundary_conditions(U);
  for (unsigned i = 0; i < L.n_owned(); ++i)
  {
    if (L.boundary_kind[i] != BoundaryKind::slip)
      continue;
    const auto &n = L.boundary_normal[i];
    CHECK(std::abs(U[i * 4 + 1] * n[0] + U[i * 4 + 2] * n[1]) <= 1e-15);
    CHECK(U[i * 4 + 3] == 3.);
  }
}
