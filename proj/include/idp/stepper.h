#pragma once

#include <idp/assembly.h>
#include <idp/exchange.h>
#include <idp/indicator.h>
#include <idp/limiter.h>
#include <idp/physics.h>
#include <idp/riemann.h>
#include <idp/sparsity.h>

#include <array>
#include <chrono>
#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

namespace idp
{
  /**
   * Offline data of one rank: local numbering, hybrid sparsity pattern and
   * the matrices in local storage. Local rows: [0, N_lo) owned (renumbered),
   * [N_lo, N_lr) ghosts in ascending global key order. Slot 0 of an owned
   * row is its diagonal, remaining slots follow ascending global key; ghost
   * rows store only owned columns, in ascending global key order.
   */
  template <int dim>
  struct LocalProblem
  {
    unsigned rank = 0;
    LocalNumbering numbering;
    SparsityPattern pattern;
    RowRanges ranges;

    std::vector<unsigned> global_key; // local row -> global key
    std::vector<unsigned> mesh_dof;   // local row -> mesh dof

    StencilMatrix<1> m_ij;
    StencilMatrix<dim> c_ij;
    std::vector<double> m_i;      // N_lr
    std::vector<double> inv_m_i;  // N_lr
    std::vector<unsigned> card;   // N_lo, card(I(i))

    std::vector<BoundaryKind> boundary_kind;  // N_lo
    std::vector<Point<dim>> boundary_normal;  // N_lo
    std::vector<Point<dim>> node_points;      // N_lo, optional (diagnostics)

    GhostExchange exchange;

    unsigned n_owned() const { return ranges.n_owned; }
    unsigned n_relevant() const { return pattern.n_relevant(); }
  };

  /// Standard stencil length 3^dim of a structured interior node.
  constexpr unsigned standard_stencil(int dim)
  {
    return dim == 1 ? 3u : dim == 2 ? 9u : 27u;
  }

  template <int dim>
  std::vector<LocalProblem<dim>> distribute(const PrecomputedMatrices<dim> &matrices,
                                            const Partition &partition,
                                            unsigned lanes);

  /// Copies between a global array (by mesh dof, `stride` doubles per node)
  /// and a rank-local array over all locally relevant rows.
  template <int dim>
  void scatter_to_local(const LocalProblem<dim> &local,
                        const std::vector<double> &global,
                        std::vector<double> &values,
                        unsigned stride);
  template <int dim>
  void gather_owned(const LocalProblem<dim> &local,
                    const std::vector<double> &values,
                    std::vector<double> &global,
                    unsigned stride);


  struct StepperParameters
  {
    double cfl = 0.9;
    unsigned limiter_passes = 2;
    unsigned newton_steps = 2;
    unsigned lanes = 1;
    unsigned workers = 1;
    bool overlap = true;
    double gamma = 1.4;
  };

  /// c_cfl min_i m_i / (-2 d_ii) over the given rows (same operation order
  /// as the stepper). Rows with d_ii = 0 impose no bound; if no row bounds
  /// the step, throws std::domain_error.
  inline double compute_tau(const std::vector<double> &d_ii,
                            const std::vector<double> &m_i,
                            double cfl)
  {
    double tau = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d_ii.size(); ++i)
      if (d_ii[i] < 0.)
        tau = std::min(tau, cfl * m_i[i] / (-2. * d_ii[i]));
    if (!(tau < std::numeric_limits<double>::infinity()))
      throw std::domain_error("compute_tau: constant field, time step unbounded");
    return tau;
  }

  /// Outcome of one forward Euler stage.
  struct StageResult
  {
    double tau = 0.;     // step size used
    double tau_max = 0.; // admissible step size of the input state
    bool restart = false; // fixed tau exceeded tau_max; output not computed
  };

  /// Wall-clock seconds and invocation counts per algorithm step 0..6.
  struct StepTimers
  {
    std::array<double, 7> seconds{};
    std::array<std::uint64_t, 7> calls{};
    std::uint64_t stages = 0;
    std::uint64_t node_syncs = 0;
    std::uint64_t entry_syncs = 0;
  };

  /**
   * High-order forward Euler step of one rank. State vectors are
   * array-of-struct with dim + 2 values per local row; input vectors must
   * have synchronized ghosts, outputs are synchronized on return.
   */
  template <int dim>
  class EulerStepper
  {
  public:
    static constexpr int n_comp = dim + 2;
    using Vector = std::vector<double>;

    EulerStepper(const LocalProblem<dim> &local,
                 Communicator &comm,
                 const StepperParameters &parameters);
    ~EulerStepper();

    const LocalProblem<dim> &local() const { return local_; }
    const StepperParameters &parameters() const { return parameters_; }

    Vector make_vector() const
    {
      return Vector(std::size_t(local_.n_relevant()) * n_comp, 0.);
    }

    /// With fixed == false, tau = min(tau_max, tau_limit). With fixed ==
    /// true, tau = tau_limit unless it exceeds the hard bound tau_max / c_cfl,
    /// in which case the stage stops after step 2 and reports restart.
    StageResult euler(const Vector &U, Vector &U_out, double tau_limit, bool fixed);

    /// out = a x + b y over all locally relevant entries.
    void combine(Vector &out, double a, const Vector &x, double b, const Vector &y) const;

    /// Row-local boundary treatment on owned rows.
    void set_dirichlet_state(const State<dim> &state) { dirichlet_ = state; }
    void apply_boundary_conditions(Vector &U) const;
    void apply_boundary_condition_row(Vector &U, unsigned i) const;

    /// Called after every stage with (input, output).
    std::function<void(const Vector &, const Vector &)> stage_observer;

    /// Throws std::domain_error naming the first owned row that is not
    /// admissible (rho > 0, epsilon > 0, finite).
    void check_admissible(const Vector &U, const char *where) const;

    /// c_cfl min m_i / (-2 d_ii) of the last stage input, min-reduced.
    double last_tau_max() const { return last_tau_max_; }

    const StepTimers &timers() const { return timers_; }
    void reset_timers() { timers_ = StepTimers{}; }

  private:
    struct Impl;
    template <int k>
    StageResult run(const Vector &U, Vector &U_out, double tau_limit, bool fixed);

    const LocalProblem<dim> &local_;
    Communicator &comm_;
    StepperParameters parameters_;
    PolytropicGas gas_;
    std::unique_ptr<WorkerPool> pool_;
    std::optional<State<dim>> dirichlet_;
    double last_tau_max_ = 0.;
    StepTimers timers_;

    // Scratch
    std::vector<double> eta_over_rho_, phi_, alpha_;
    std::vector<double> R_, U_low_, bounds_;
    StencilMatrix<1> d_;
    StencilMatrix<n_comp> P_;
    StencilMatrix<1> l_[2];
  };


  /**
   * Third-order SSP Runge-Kutta step of an operator providing
   *   Vector, StageResult euler(const Vector&, Vector&, double, bool),
   *   combine(Vector&, double, const Vector&, double, const Vector&).
   * The first stage picks tau = min(tau_max, tau_cap); later stages reuse
   * tau. If a later stage reports that tau exceeds its own admissible step,
   * the step restarts from U with tau_cap lowered to that bound.
   * Returns the step size taken.
   */
  template <typename Operator>
  double ssp_rk3_step(Operator &op, typename Operator::Vector &U, double tau_cap)
  {
    typename Operator::Vector U1 = U, U2 = U, U3 = U;
    for (unsigned attempt = 0;; ++attempt)
    {
      if (attempt == 64)
        throw std::runtime_error("ssp_rk3_step: no admissible step size found");
      const StageResult s1 = op.euler(U, U1, tau_cap, false);
      const double tau = s1.tau;

      const StageResult s2 = op.euler(U1, U2, tau, true);
      if (s2.restart)
      {
        tau_cap = s2.tau_max;
        continue;
      }
      op.combine(U2, 0.75, U, 0.25, U2);

      const StageResult s3 = op.euler(U2, U3, tau, true);
      if (s3.restart)
      {
        tau_cap = s3.tau_max;
        continue;
      }
      op.combine(U, 1. / 3., U, 2. / 3., U3);
      return tau;
    }
  }

} // namespace idp
