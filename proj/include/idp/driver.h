#pragma once

#include <idp/assembly.h>
#include <idp/mesh.h>
#include <idp/stepper.h>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace idp
{
  /// Invalid command line or configuration file.
  struct ConfigError : std::runtime_error
  {
    using std::runtime_error::runtime_error;
  };

  struct RunConfig
  {
    std::string problem = "cylinder2d"; // cylinder2d | cylinder3d | periodic-smooth | sod1d
    unsigned refinement = 0;
    double t_final = 0.1;
    double cfl = 0.9;
    unsigned limiter_passes = 2; // 0: low-order update only
    unsigned newton_steps = 2;
    unsigned lanes = 4;
    unsigned workers = 1;
    unsigned ranks = 1;
    unsigned output_every = 0; // steps between snapshots, 0: none
    std::string output_dir = "output";
    bool perf = false;         // print the perf table and write perf.csv
    double mach = 3.;          // cylinder farfield: rho = 1.4, p = 1, c = 1
    bool overlap = true;
    unsigned max_steps = 0;    // 0: until t_final
    double schlieren_beta = 10.;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
    StepperParameters stepper_parameters() const;
  };

  /// Parses `--config FILE` (lines "key = value", '#' comments) and flags;
  /// flags win over file entries. Throws ConfigError. Returns false if help
  /// was requested (and printed to stdout).
  bool parse_command_line(int argc, const char *const *argv, RunConfig &config);

  /// Initial data, inflow state and (optionally) exact solution of a test.
  template <int dim>
  struct Problem
  {
    Mesh<dim> mesh;
    std::function<State<dim>(const Point<dim> &)> initial;
    std::optional<State<dim>> dirichlet;
    std::function<State<dim>(const Point<dim> &, double)> exact; // may be empty
  };

  /// Builds the problem named by config.problem. Throws ConfigError for a
  /// name of another dimension.
  template <int dim>
  Problem<dim> make_problem(const RunConfig &config);

  /// Space dimension of a problem name (ConfigError if unknown).
  int problem_dimension(const std::string &problem);

  template <int dim>
  struct SimulationHooks
  {
    /// Called once per rank before the first step.
    std::function<void(unsigned rank, EulerStepper<dim> &)> configure_stepper;
    /// Called on every rank after every completed RK step.
    std::function<void(unsigned rank, unsigned step, double t, const std::vector<double> &U)>
      after_step;
  };

  struct SimulationResult
  {
    std::vector<double> U; // by mesh dof, dim + 2 values each
    double time = 0.;
    unsigned steps = 0;
    double wall_seconds = 0.;
    std::vector<StepTimers> timers; // per rank
    std::vector<std::uint64_t> messages, doubles_sent;
    std::size_t nonzeros = 0;       // stencil entries of all ranks' owned rows
    unsigned n_dofs = 0;
    std::vector<std::string> snapshots;
  };

  /// Distributes, time-steps with SSP-RK3 to config.t_final (or max_steps)
  /// and gathers the final state. Snapshots go to config.output_dir every
  /// config.output_every steps (and for the initial and final states).
  /// Admissibility violations are rethrown as std::domain_error carrying
  /// the step number.
  template <int dim>
  SimulationResult simulate(const RunConfig &config,
                            const Problem<dim> &problem,
                            const PrecomputedMatrices<dim> &matrices,
                            const SimulationHooks<dim> &hooks = {});

  /// L1 density error sum_i m_i |rho_i - rho_exact(x_i, t)|.
  template <int dim>
  double density_l1_error(const Problem<dim> &problem,
                          const PrecomputedMatrices<dim> &matrices,
                          const std::vector<double> &U,
                          double t);

  /// Sums sum_i m_i U_i per component.
  template <int dim>
  State<dim> conserved_totals(const PrecomputedMatrices<dim> &matrices,
                              const std::vector<double> &U);

  /// Whole program: returns the process exit status, diagnostics on stderr.
  int run(const RunConfig &config);
  int main_entry(int argc, const char *const *argv);

} // namespace idp
