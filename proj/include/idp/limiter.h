#pragma once

#include <idp/lanes.h>
#include <idp/physics.h>

#include <limits>

namespace idp
{
  /// Local bounds on density and on the scaled specific entropy phi.
  template <typename Number = double>
  struct Bounds
  {
    Number rho_min = Number(std::numeric_limits<double>::max());
    Number rho_max = Number(0.);
    Number phi_min = Number(std::numeric_limits<double>::max());
  };

  template <typename Number = double>
  struct Bracket
  {
    Number t_left;
    Number t_right;
  };

  /**
   * One quadratic Newton step with divided differences on a bracket
   * [t_L, t_R] with psi_L >= 0 >= psi_R, for a function whose third
   * derivative has a fixed sign on the bracket.
   *
   * Safeguards beyond the textbook step: a negative discriminant is clamped
   * to zero, a vanishing denominator leaves the endpoint unchanged, and the
   * updated endpoints are clamped into the old bracket.
   *
   * The left candidate is the root of the Hermite interpolant anchored at
   * t_L, the right candidate the one anchored at t_R. They bracket the root
   * from the left and from the right when the third derivative is negative;
   * for a positive third derivative the two candidates trade places.
   */
  template <typename Number>
  Bracket<Number> quadratic_newton_step(const Number &t_left,
                                        const Number &t_right,
                                        const Number &psi_left,
                                        const Number &psi_right,
                                        const Number &dpsi_left,
                                        const Number &dpsi_right,
                                        double sign)
  {
    const Number eps = Number(std::numeric_limits<double>::min()) *
                       (Number(1.) + abs(t_right));
    const Number scaling = Number(1.) / (t_right - t_left + eps);

    const Number d11 = dpsi_left;
    const Number d12 = (psi_right - psi_left) * scaling;
    const Number d22 = dpsi_right;
    const Number d112 = (d12 - d11) * scaling;
    const Number d122 = (d22 - d12) * scaling;

    const Number discriminant_left =
      max(dpsi_left * dpsi_left - Number(4.) * psi_left * d112, Number(0.));
    const Number discriminant_right =
      max(dpsi_right * dpsi_right - Number(4.) * psi_right * d122, Number(0.));

    const Number denominator_left =
      dpsi_left + Number(sign) * sqrt(discriminant_left);
    const Number denominator_right =
      dpsi_right + Number(sign) * sqrt(discriminant_right);

    const Number tiny(std::numeric_limits<double>::min());
    const Number step_left =
      select(abs(denominator_left) > tiny,
             Number(2.) * psi_left /
               select(abs(denominator_left) > tiny, denominator_left, Number(1.)),
             Number(0.));
    const Number step_right =
      select(abs(denominator_right) > tiny,
             Number(2.) * psi_right /
               select(abs(denominator_right) > tiny, denominator_right, Number(1.)),
             Number(0.));

    Bracket<Number> result;
    result.t_left = min(max(t_left - step_left, t_left), t_right);
    result.t_right = min(max(t_right - step_right, t_left), t_right);
    return result;
  }


  /**
   * Convex limiter on density bounds and the local minimum principle of the
   * specific entropy.
   *
   * The entropy constraint is expressed through
   *   Psi(U) = rho^{gamma+1} (phi(U) - phi_min) = rho eps - phi_min rho^{gamma+1},
   * which needs a single power evaluation.
   */
  template <int dim>
  class Limiter
  {
  public:
    /// Sign of the quadratic Newton root selection for Psi along a ray.
    static constexpr double newton_sign = -1.;
    static constexpr double relative_tolerance = 1.e-10;

    explicit Limiter(const PolytropicGas &gas, unsigned int newton_steps = 2)
      : gas_(gas)
      , newton_steps_(newton_steps)
    {}

    const PolytropicGas &gas() const { return gas_; }
    unsigned int newton_steps() const { return newton_steps_; }

    /// Running min/max of rho(Ubar_ij) and running min of phi(U_j).
    template <typename Number>
    static void accumulate_bounds(Bounds<Number> &bounds,
                                  const State<dim, Number> &Ubar_ij,
                                  const Number &phi_j)
    {
      bounds.rho_min = min(bounds.rho_min, Ubar_ij[0]);
      bounds.rho_max = max(bounds.rho_max, Ubar_ij[0]);
      bounds.phi_min = min(bounds.phi_min, phi_j);
    }

    template <typename Number>
    void accumulate_bounds(Bounds<Number> &bounds,
                           const State<dim, Number> & /*Ui*/,
                           const State<dim, Number> &Uj,
                           const State<dim, Number> &Ubar_ij) const
    {
      accumulate_bounds(bounds, Ubar_ij, gas_.specific_entropy_phi(Uj));
    }

    template <typename Number>
    Number psi(const State<dim, Number> &U, const Number &phi_min) const
    {
      return gas_.density_times_internal_energy(U) -
             phi_min * power(U[0], gas_.gamma() + 1.);
    }

    /// d/dt Psi(U + t P)
    template <typename Number>
    Number dpsi_dt(const State<dim, Number> &U,
                   const State<dim, Number> &P,
                   const Number &t,
                   const Number &phi_min) const
    {
      const State<dim, Number> Ut = U + t * P;
      const Number rho = Ut[0];
      Number rho_e_dot = P[0] * Ut[dim + 1] + rho * P[dim + 1];
      for (int k = 1; k <= dim; ++k)
        rho_e_dot -= Ut[k] * P[k];
      return rho_e_dot - phi_min * Number(gas_.gamma() + 1.) *
                           power(rho, gas_.gamma()) * P[0];
    }

    /**
     * Largest t in [0, 1] (up to the Newton iteration count) such that
     * U + t P satisfies rho_min <= rho <= rho_max and Psi >= -tol. Lanes
     * that have converged are masked and keep their value while the other
     * lanes continue iterating.
     */
    template <typename Number>
    Number compute(const State<dim, Number> &U,
                   const State<dim, Number> &P,
                   const Bounds<Number> &bounds) const
    {
      using Mask = MaskOf<Number>;

      const Number zero(0.);
      const Number one(1.);
      const Number tiny(std::numeric_limits<double>::min());

      const Number rho_U = U[0];
      const Number rho_P = P[0];
      const Number abs_rho_P = max(abs(rho_P), tiny);

      /* Density bounds. */
      Number t_left = zero;
      Number t_right = one;
      {
        const Number rho_right = rho_U + t_right * rho_P;
        t_right = select(rho_right <= bounds.rho_max,
                         t_right,
                         abs(bounds.rho_max - rho_U) / abs_rho_P);
        const Number rho_right_2 = rho_U + t_right * rho_P;
        t_right = select(rho_right_2 >= bounds.rho_min,
                         t_right,
                         abs(bounds.rho_min - rho_U) / abs_rho_P);
        t_right = min(max(t_right, zero), one);
      }

      /* Entropy bound via quadratic Newton on Psi. */
      const Number tolerance =
        Number(relative_tolerance) *
        max(abs(gas_.density_times_internal_energy(U)), tiny);

      Number t_verified = t_left;
      Mask active = zero <= zero;

      for (unsigned int step = 0; step < newton_steps_; ++step)
      {
        const Number psi_right = psi(State<dim, Number>(U + t_right * P),
                                     bounds.phi_min);
        const Mask right_good = psi_right >= zero;
        t_left = select(active && right_good, t_right, t_left);
        t_verified = select(active && right_good, t_right, t_verified);
        active = active && !right_good;
        if (!any_of(active))
          break;

        const Number psi_left = psi(State<dim, Number>(U + t_left * P),
                                    bounds.phi_min);
        // An endpoint produced by the previous step that is not feasible is
        // discarded in favour of the last verified one.
        const Mask left_bad = psi_left < -tolerance;
        t_left = select(active && left_bad, t_verified, t_left);
        t_verified = select(active && !left_bad, t_left, t_verified);
        active = active && !left_bad && !(psi_left <= tolerance);
        if (!any_of(active))
          break;

        const Number dpsi_left = dpsi_dt(U, P, t_left, bounds.phi_min);
        const Number dpsi_right = dpsi_dt(U, P, t_right, bounds.phi_min);
        const Bracket<Number> next = quadratic_newton_step(t_left,
                                                           t_right,
                                                           psi_left,
                                                           psi_right,
                                                           dpsi_left,
                                                           dpsi_right,
                                                           newton_sign);
        // Along rays of decreasing density Psi''' > 0 and the candidates
        // swap sides.
        const Mask swapped = rho_P < zero;
        const Number new_left = select(swapped, next.t_right, next.t_left);
        const Number new_right = select(swapped, next.t_left, next.t_right);
        t_left = select(active, min(new_left, new_right), t_left);
        t_right = select(active, max(new_left, new_right), t_right);
      }

      /* The last Newton update of t_L has not been evaluated yet. */
      if (any_of(active))
      {
        const Number psi_left = psi(State<dim, Number>(U + t_left * P),
                                    bounds.phi_min);
        t_left = select(active && psi_left < -tolerance, t_verified, t_left);
      }

      return t_left;
    }

  private:
    PolytropicGas gas_;
    unsigned int newton_steps_;
  };

} // namespace idp
