#pragma once

#include <idp/lanes.h>
#include <idp/physics.h>

namespace idp
{
  /// Projection of a state onto the direction n of a 1D Riemann problem.
  template <typename Number = double>
  struct Projected1DState
  {
    Number rho;
    Number m;
    Number E;
    Number u;
    Number p;
    Number c;
  };

  /**
   * Guaranteed upper bound on the maximal wavespeed of the 1D Riemann problem
   * between two states, based on the two-rarefaction approximation of the
   * star pressure. No Newton refinement of p* is performed.
   *
   * All functions are written with lane-uniform control flow: data
   * dependent choices are expressed as selects.
   */
  class RiemannSolver
  {
  public:
    explicit RiemannSolver(const PolytropicGas &gas)
      : gas_(gas)
    {}

    const PolytropicGas &gas() const { return gas_; }

    /// rho~ = rho, m~ = n.m, E~ = E - |m - m~ n|^2 / (2 rho). Throws if the
    /// projected pressure is not positive.
    template <int dim, typename Number>
    Projected1DState<Number> project(const State<dim, Number> &U,
                                     const Vec<dim, Number> &n) const
    {
      const Number rho = U[0];
      const Vec<dim, Number> m = momentum(U);
      const Number m_n = dot(n, m);
      Vec<dim, Number> tangential = m;
      for (int k = 0; k < dim; ++k)
        tangential[k] -= m_n * n[k];

      Projected1DState<Number> s;
      s.rho = rho;
      s.m = m_n;
      s.E = U[dim + 1] - Number(0.5) * norm_square(tangential) / rho;
      s.u = m_n / rho;
      s.p = Number(gas_.gamma_minus_one()) *
            (s.E - Number(0.5) * m_n * m_n / rho);
      require_positive(rho, "riemann: projected density");
      require_positive(s.p, "riemann: projected pressure");
      s.c = sqrt(Number(gas_.gamma()) * s.p / rho);
      return s;
    }

    /// Closed-form two-rarefaction star pressure, clamped at zero.
    template <typename Number>
    Number two_rarefaction_pstar(const Projected1DState<Number> &left,
                                 const Projected1DState<Number> &right) const
    {
      const double g = gas_.gamma();
      const Number numerator =
        left.c + right.c - Number(0.5 * (g - 1.)) * (right.u - left.u);
      const Number denominator =
        left.c * power(left.p / right.p, -gas_.exponent_pressure_ratio()) +
        right.c;
      const Number base = positive_part(numerator / denominator);
      return right.p * power(base, gas_.exponent_two_rarefaction());
    }

    /// One side of psi: shock branch for p >= p~, rarefaction otherwise.
    template <typename Number>
    Number psi_branch(const Projected1DState<Number> &s, const Number &p) const
    {
      const double g = gas_.gamma();
      const Number shock =
        Number(std::sqrt(2.)) * (p - s.p) /
        sqrt(s.rho * (Number(g + 1.) * p + Number(g - 1.) * s.p));
      const Number rarefaction =
        (power(p / s.p, gas_.exponent_pressure_ratio()) - Number(1.)) *
        Number(2.) * s.c / Number(g - 1.);
      return select(p >= s.p, shock, rarefaction);
    }

    /// psi(p) = f(U_i, p) + f(U_j, p) + u_j - u_i
    template <typename Number>
    Number psi(const Number &p,
               const Projected1DState<Number> &left,
               const Projected1DState<Number> &right) const
    {
      return psi_branch(left, p) + psi_branch(right, p) + right.u - left.u;
    }

    /// Wave speed bound from the projected states.
    template <typename Number>
    Number lambda_max(const Projected1DState<Number> &left,
                      const Projected1DState<Number> &right) const
    {
      const double g = gas_.gamma();
      const Number p_max = max(left.p, right.p);
      const Number p_tilde = two_rarefaction_pstar(left, right);
      const Number p_star =
        select(psi(p_max, left, right) < Number(0.), p_tilde, min(p_max, p_tilde));

      const Number factor((g + 1.) / (2. * g));
      const Number lambda_1 =
        left.u - left.c * sqrt(Number(1.) + factor * positive_part(
                                                       (p_star - left.p) / left.p));
      const Number lambda_3 =
        right.u + right.c * sqrt(Number(1.) + factor * positive_part(
                                                         (p_star - right.p) / right.p));
      return max(negative_part_magnitude(lambda_1), positive_part(lambda_3));
    }

    /// Wave speed bound for U_i (left) and U_j (right) along the unit
    /// direction n.
    template <int dim, typename Number>
    Number lambda_max(const State<dim, Number> &Ui,
                      const State<dim, Number> &Uj,
                      const Vec<dim, Number> &n) const
    {
      return lambda_max(project(Ui, n), project(Uj, n));
    }

    /// d_ij^L = max(lambda(n_ij, U_i, U_j) |c_ij|, lambda(n_ji, U_j, U_i) |c_ji|)
    /// for i != j. A vanishing c contributes zero.
    template <int dim, typename Number>
    Number d_ij_low(const State<dim, Number> &Ui,
                    const State<dim, Number> &Uj,
                    const Vec<dim, Number> &c_ij,
                    const Vec<dim, Number> &c_ji) const
    {
      const Number norm_ij = norm(c_ij);
      const Number norm_ji = norm(c_ji);
      const Vec<dim, Number> n_ij = safe_normalize(c_ij, norm_ij);
      const Vec<dim, Number> n_ji = safe_normalize(c_ji, norm_ji);
      return max(lambda_max(Ui, Uj, n_ij) * norm_ij,
                 lambda_max(Uj, Ui, n_ji) * norm_ji);
    }

  private:
    template <int dim, typename Number>
    static Vec<dim, Number> safe_normalize(const Vec<dim, Number> &c,
                                           const Number &length)
    {
      const Number inverse =
        select(length > Number(0.), Number(1.) / length, Number(0.));
      Vec<dim, Number> n;
      for (int k = 0; k < dim; ++k)
        n[k] = c[k] * inverse;
      return n;
    }

    PolytropicGas gas_;
  };

} // namespace idp
