#include <idp/driver.h>
#include <idp/output.h>
#include <idp/perf.h>

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

namespace idp
{
  void RunConfig::validate() const
  {
    problem_dimension(problem);
    if (!(cfl > 0. && cfl <= 1.))
      throw ConfigError("cfl must lie in (0, 1]");
    if (!(t_final > 0.) || !std::isfinite(t_final))
      throw ConfigError("t-final must be positive");
    if (lanes != 1 && lanes != 2 && lanes != 4 && lanes != 8)
      throw ConfigError("lanes must be 1, 2, 4 or 8");
    if (workers < 1 || ranks < 1)
      throw ConfigError("workers and ranks must be at least 1");
    if (newton_steps < 1)
      throw ConfigError("newton-steps must be at least 1");
    if (refinement > 10)
      throw ConfigError("refine must not exceed 10");
    if (!(mach > 0.) || !(schlieren_beta > 0.))
      throw ConfigError("mach and schlieren-beta must be positive");
  }

  StepperParameters RunConfig::stepper_parameters() const
  {
    StepperParameters p;
    p.cfl = cfl;
    p.limiter_passes = limiter_passes;
    p.newton_steps = newton_steps;
    p.lanes = lanes;
    p.workers = workers;
    p.overlap = overlap;
    return p;
  }

  bool parse_command_line(int argc, const char *const *argv, RunConfig &c)
  {
    CLI::App app{"Invariant-domain preserving Euler solver"};
    app.set_config("--config", "", "File of 'key = value' lines; flags override it");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.add_option("--problem", c.problem, "cylinder2d | cylinder3d | periodic-smooth | sod1d")
      ->check(CLI::IsMember({"cylinder2d", "cylinder3d", "periodic-smooth", "sod1d"}));
    app.add_option("--refine", c.refinement, "Mesh refinement level");
    app.add_option("--t-final", c.t_final, "Final time");
    app.add_option("--cfl", c.cfl, "CFL constant in (0, 1]");
    app.add_option("--limiter-passes", c.limiter_passes, "0 gives the low-order scheme");
    app.add_option("--newton-steps", c.newton_steps, "Limiter Newton iterations");
    app.add_option("--lanes", c.lanes, "SIMD lane width (1, 2, 4, 8)");
    app.add_option("--workers", c.workers, "Threads per rank");
    app.add_option("--ranks", c.ranks, "Simulated ranks");
    app.add_option("--output-every", c.output_every, "Steps between snapshots (0: none)");
    app.add_option("--output-dir", c.output_dir, "Snapshot and report directory");
    app.add_flag("--perf", c.perf, "Print the per-step report and write perf.csv");
    app.add_option("--mach", c.mach, "Farfield Mach number of the cylinder problems");
    app.add_option("--overlap", c.overlap, "Hide communication behind computation");
    app.add_option("--max-steps", c.max_steps, "Stop after this many steps (0: no limit)");
    app.add_option("--schlieren-beta", c.schlieren_beta, "Schlieren scale");
    try
    {
      app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &)
    {
      std::cout << app.help();
      return false;
    }
    catch (const CLI::ParseError &e)
    {
      throw ConfigError(e.what());
    }
    c.validate();
    return true;
  }

  int problem_dimension(const std::string &problem)
  {
    if (problem == "sod1d")
      return 1;
    if (problem == "cylinder2d" || problem == "periodic-smooth")
      return 2;
    if (problem == "cylinder3d")
      return 3;
    throw ConfigError("unknown problem '" + problem + "'");
  }

  namespace
  {
    const PolytropicGas air(1.4);

    template <int dim>
    State<dim> primitive_state(double rho, const Point<dim> &u, double p)
    {
      return air.from_primitive<dim>(rho, u, p);
    }
  } // namespace

  template <int dim>
  Problem<dim> make_problem(const RunConfig &config)
  {
    if (problem_dimension(config.problem) != dim)
      throw ConfigError("problem '" + config.problem + "' has another dimension");
    Problem<dim> problem;
    const unsigned r = config.refinement;

    if (config.problem == "cylinder2d" || config.problem == "cylinder3d")
    {
      if constexpr (dim >= 2)
        problem.mesh = cylinder_mesh<dim>(r);
      Point<dim> u{};
      u[0] = config.mach;
      const State<dim> farfield = primitive_state<dim>(1.4, u, 1.);
      problem.initial = [farfield](const Point<dim> &) { return farfield; };
      problem.dirichlet = farfield;
    }
    else if (config.problem == "periodic-smooth")
    {
      if constexpr (dim == 2)
      {
        problem.mesh = box_mesh<2>(16u << r, 1., true);
        const double two_pi = 2. * std::numbers::pi;
        auto exact = [two_pi](const Point<2> &x, double t) {
          const Point<2> v{1., 0.5};
          const double rho =
            1. + 0.5 * std::sin(two_pi * (x[0] - v[0] * t)) * std::sin(two_pi * (x[1] - v[1] * t));
          return primitive_state<2>(rho, v, 1.);
        };
        problem.exact = exact;
        problem.initial = [exact](const Point<2> &x) { return exact(x, 0.); };
      }
    }
    else if (config.problem == "sod1d")
    {
      if constexpr (dim == 1)
      {
        problem.mesh = box_mesh<1>(100u << r, 1., false, BoundaryKind::do_nothing);
        problem.initial = [](const Point<1> &x) {
          return x[0] < 0.5 ? primitive_state<1>(1., Point<1>{0.}, 1.)
                            : primitive_state<1>(0.125, Point<1>{0.}, 0.1);
        };
      }
    }
    return problem;
  }

  namespace
  {
    template <int dim>
    void sync_nodes(Communicator &comm, const LocalProblem<dim> &L, std::vector<double> &U)
    {
      const std::uint64_t tag = L.exchange.start_nodes(comm, U.data(), dim + 2);
      L.exchange.finish_nodes(comm, tag, U.data(), dim + 2);
    }

    /// Collects owned rows of all ranks into `global` on rank 0.
    template <int dim>
    void gather_to_root(Communicator &comm,
                        const std::vector<LocalProblem<dim>> &locals,
                        unsigned rank,
                        const std::vector<double> &U,
                        std::vector<double> &global)
    {
      constexpr unsigned n = dim + 2;
      const std::uint64_t tag = comm.next_tag(rank, Communicator::Kind::gather);
      const LocalProblem<dim> &L = locals[rank];
      if (rank != 0)
      {
        comm.send(rank, 0, tag,
                  std::vector<double>(U.begin(), U.begin() + std::size_t(L.n_owned()) * n));
        return;
      }
      gather_owned(L, U, global, n);
      for (unsigned s = 1; s < locals.size(); ++s)
        gather_owned(locals[s], comm.receive(0, s, tag), global, n);
    }

    template <int dim>
    std::string write_snapshot(const RunConfig &config,
                               const Problem<dim> &problem,
                               const PrecomputedMatrices<dim> &matrices,
                               const std::vector<double> &U,
                               unsigned step)
    {
      constexpr unsigned n = dim + 2;
      std::vector<double> rho(U.size() / n);
      for (std::size_t i = 0; i < rho.size(); ++i)
        rho[i] = U[i * n];
      char name[64];
      std::snprintf(name, sizeof(name), "solution-%06u.vtk", step);
      const auto path = std::filesystem::path(config.output_dir) / name;
      std::ofstream out(path, std::ios::binary);
      if (!out)
        throw std::runtime_error("cannot write " + path.string());
      write_vtk(out, problem.mesh, U, schlieren(rho, matrices, config.schlieren_beta), air);
      return path.string();
    }
  } // namespace

  template <int dim>
  SimulationResult simulate(const RunConfig &config,
                            const Problem<dim> &problem,
                            const PrecomputedMatrices<dim> &matrices,
                            const SimulationHooks<dim> &hooks)
  {
    config.validate();
    constexpr unsigned n = dim + 2;
    const unsigned n_dofs = problem.mesh.n_dofs;
    const Partition part = partition(matrices.graph, config.ranks);
    std::vector<LocalProblem<dim>> locals = distribute(matrices, part, config.lanes);

    const std::vector<Point<dim>> points = problem.mesh.dof_points();
    for (LocalProblem<dim> &L : locals)
    {
      L.node_points.resize(L.n_owned());
      for (unsigned i = 0; i < L.n_owned(); ++i)
        L.node_points[i] = points[L.mesh_dof[i]];
    }

    std::vector<double> U0(std::size_t(n_dofs) * n);
    for (unsigned i = 0; i < n_dofs; ++i)
    {
      const State<dim> u = problem.initial(points[i]);
      for (unsigned c = 0; c < n; ++c)
        U0[std::size_t(i) * n + c] = u[c];
    }

    if (config.output_every > 0)
      std::filesystem::create_directories(config.output_dir);

    SimulationResult result;
    result.n_dofs = n_dofs;
    result.U = U0;
    result.timers.resize(config.ranks);
    for (const LocalProblem<dim> &L : locals)
      for (unsigned i = 0; i < L.n_owned(); ++i)
        result.nonzeros += L.pattern.row_length(i);

    Communicator comm(config.ranks);
    const StepperParameters parameters = config.stepper_parameters();

    run_ranks(comm, [&](unsigned rank) {
      const LocalProblem<dim> &L = locals[rank];
      EulerStepper<dim> stepper(L, comm, parameters);
      if (problem.dirichlet)
        stepper.set_dirichlet_state(*problem.dirichlet);
      if (hooks.configure_stepper)
        hooks.configure_stepper(rank, stepper);

      std::vector<double> U = stepper.make_vector();
      scatter_to_local(L, U0, U, n);
      stepper.apply_boundary_conditions(U);
      sync_nodes(comm, L, U);

      auto snapshot = [&](unsigned step) {
        gather_to_root(comm, locals, rank, U, result.U);
        if (rank == 0 && config.output_every > 0)
          result.snapshots.push_back(write_snapshot(config, problem, matrices, result.U, step));
      };
      if (config.output_every > 0)
        snapshot(0);

      const auto start = std::chrono::steady_clock::now();
      double t = 0.;
      unsigned step = 0;
      while (t < config.t_final && (config.max_steps == 0 || step < config.max_steps))
      {
        const double cap = config.t_final - t;
        double tau;
        try
        {
          tau = ssp_rk3_step(stepper, U, cap);
        }
        catch (const std::domain_error &e)
        {
          std::ostringstream msg;
          msg.precision(17);
          msg << "step " << step + 1 << " (t = " << t << "): " << e.what();
          throw std::domain_error(msg.str());
        }
        t = tau >= cap ? config.t_final : t + tau;
        ++step;
        if (hooks.after_step)
          hooks.after_step(rank, step, t, U);
        if (config.output_every > 0 && step % config.output_every == 0)
          snapshot(step);
      }
      const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

      if (config.output_every > 0 && step % config.output_every != 0)
        snapshot(step);
      else if (config.output_every == 0)
        gather_to_root(comm, locals, rank, U, result.U);

      result.timers[rank] = stepper.timers();
      if (rank == 0)
      {
        result.time = t;
        result.steps = step;
        result.wall_seconds = wall;
      }
    });

    for (unsigned r = 0; r < config.ranks; ++r)
    {
      result.messages.push_back(comm.messages_sent(r));
      result.doubles_sent.push_back(comm.doubles_sent(r));
    }
    return result;
  }

  template <int dim>
  double density_l1_error(const Problem<dim> &problem,
                          const PrecomputedMatrices<dim> &matrices,
                          const std::vector<double> &U,
                          double t)
  {
    const auto points = problem.mesh.dof_points();
    double error = 0.;
    for (std::size_t i = 0; i < points.size(); ++i)
      error += matrices.m_i[i] * std::abs(U[i * (dim + 2)] - problem.exact(points[i], t)[0]);
    return error;
  }

  template <int dim>
  State<dim> conserved_totals(const PrecomputedMatrices<dim> &matrices,
                              const std::vector<double> &U)
  {
    State<dim> total{};
    for (std::size_t i = 0; i < matrices.m_i.size(); ++i)
      for (int c = 0; c < dim + 2; ++c)
        total[c] += matrices.m_i[i] * U[i * (dim + 2) + c];
    return total;
  }

  namespace
  {
    template <int dim>
    int run_problem(const RunConfig &config)
    {
      const Problem<dim> problem = make_problem<dim>(config);
      const PrecomputedMatrices<dim> matrices = assemble(problem.mesh);
      std::printf("problem %s, refinement %u: %u dofs, %zu cells\n", config.problem.c_str(),
                  config.refinement, problem.mesh.n_dofs, problem.mesh.cells.size());

      const SimulationResult result = simulate(config, problem, matrices);

      constexpr unsigned n = dim + 2;
      double rho_min = std::numeric_limits<double>::infinity(), rho_max = -rho_min;
      for (std::size_t i = 0; i < result.U.size(); i += n)
      {
        rho_min = std::min(rho_min, result.U[i]);
        rho_max = std::max(rho_max, result.U[i]);
      }
      std::printf("t = %.6g after %u steps in %.3f s; density in [%.6g, %.6g]\n", result.time,
                  result.steps, result.wall_seconds, rho_min, rho_max);

      if (problem.mesh.boundary_faces.empty())
      {
        // Fully periodic: totals must not drift.
        std::vector<double> U0(result.U.size());
        const auto points = problem.mesh.dof_points();
        for (std::size_t i = 0; i < points.size(); ++i)
        {
          const State<dim> u = problem.initial(points[i]);
          for (unsigned c = 0; c < n; ++c)
            U0[i * n + c] = u[c];
        }
        const State<dim> before = conserved_totals(matrices, U0);
        const State<dim> after = conserved_totals(matrices, result.U);
        double drift = 0.;
        for (unsigned c = 0; c < n; ++c)
        {
          double scale = 0.;
          for (std::size_t i = 0; i < points.size(); ++i)
            scale += matrices.m_i[i] * std::abs(U0[i * n + c]);
          drift = std::max(drift, std::abs(after[c] - before[c]) / scale);
        }
        std::printf("conservation: max relative drift %.3g\n", drift);
        if (drift > 1e-11)
        {
          std::fprintf(stderr, "error: conservation drift %.3g exceeds 1e-11\n", drift);
          return 1;
        }
      }
      if (problem.exact)
        std::printf("L1 density error %.6g\n",
                    density_l1_error(problem, matrices, result.U, result.time));
      for (const std::string &s : result.snapshots)
        std::printf("wrote %s\n", s.c_str());

      if (config.perf)
      {
        std::uint64_t messages = 0, doubles = 0;
        for (unsigned r = 0; r < config.ranks; ++r)
        {
          messages += result.messages[r];
          doubles += result.doubles_sent[r];
        }
        const PerfReport report = perf_report(result.timers, dim, standard_stencil(dim),
                                              result.n_dofs, result.nonzeros, messages, doubles);
        write_perf_table(std::cout, report);
        std::filesystem::create_directories(config.output_dir);
        const auto path = std::filesystem::path(config.output_dir) / "perf.csv";
        std::ofstream csv(path);
        write_perf_csv(csv, report);
        std::printf("wrote %s\n", path.string().c_str());
      }
      return 0;
    }
  } // namespace

  int run(const RunConfig &config)
  {
    try
    {
      config.validate();
      switch (problem_dimension(config.problem))
      {
        case 1:
          return run_problem<1>(config);
        case 2:
          return run_problem<2>(config);
        default:
          return run_problem<3>(config);
      }
    }
    catch (const ConfigError &e)
    {
      std::fprintf(stderr, "configuration error: %s\n", e.what());
      return 2;
    }
    catch (const std::exception &e)
    {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  }

  int main_entry(int argc, const char *const *argv)
  {
    RunConfig config;
    try
    {
      if (!parse_command_line(argc, argv, config))
        return 0;
    }
    catch (const ConfigError &e)
    {
      std::fprintf(stderr, "configuration error: %s\n", e.what());
      return 2;
    }
    return run(config);
  }

#define IDP_INSTANTIATE(dim)                                                   \
  template Problem<dim> make_problem<dim>(const RunConfig &);                  \
  template SimulationResult simulate<dim>(const RunConfig &,                   \
                                          const Problem<dim> &,                \
                                          const PrecomputedMatrices<dim> &,    \
                                          const SimulationHooks<dim> &);       \
  template double density_l1_error<dim>(const Problem<dim> &,                  \
                                        const PrecomputedMatrices<dim> &,      \
                                        const std::vector<double> &, double);  \
  template State<dim> conserved_totals<dim>(const PrecomputedMatrices<dim> &,  \
                                            const std::vector<double> &);
  IDP_INSTANTIATE(1)
  IDP_INSTANTIATE(2)
  IDP_INSTANTIATE(3)
#undef IDP_INSTANTIATE

} // namespace idp
