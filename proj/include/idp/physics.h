#pragma once

#include <idp/lanes.h>
#include <idp/vector.h>

#include <array>

namespace idp
{
  /// Conserved variables (rho, m_1..m_d, E) of one node, stored contiguously.
  template <int dim, typename Number = double>
  using State = Vec<dim + 2, Number>;

  /// Flux f(U) in R^{(d+2) x d}, stored row-wise: row k is the flux of
  /// conserved component k.
  template <int dim, typename Number = double>
  using Flux = std::array<Vec<dim, Number>, dim + 2>;

  template <int n, typename Number>
  Number density(const Vec<n, Number> &U)
  {
    return U[0];
  }

  template <int n, typename Number>
  Vec<n - 2, Number> momentum(const Vec<n, Number> &U)
  {
    constexpr int dim = n - 2;
    Vec<dim, Number> m;
    for (int k = 0; k < dim; ++k)
      m[k] = U[1 + k];
    return m;
  }

  template <int n, typename Number>
  Number total_energy(const Vec<n, Number> &U)
  {
    return U[n - 1];
  }

  /// Row-wise contraction f . c, giving a (d+2)-vector.
  template <int dim, typename Number>
  State<dim, Number> contract(const Flux<dim, Number> &f,
                              const Vec<dim, Number> &c)
  {
    State<dim, Number> r;
    for (int k = 0; k < dim + 2; ++k)
      r[k] = dot(f[k], c);
    return r;
  }

  template <int dim, typename Number>
  Flux<dim, Number> operator-(const Flux<dim, Number> &a,
                              const Flux<dim, Number> &b)
  {
    Flux<dim, Number> r;
    for (int k = 0; k < dim + 2; ++k)
      r[k] = a[k] - b[k];
    return r;
  }


  /**
   * Polytropic ideal gas with ratio of specific heats gamma. The entropy
   * offset s_0 is fixed to zero.
   *
   * All member functions are pure and templated on the number type, so they
   * evaluate either one state (double) or a pack of states (Lanes<k>) with
   * the same instructions. Every power is routed through idp::power.
   */
  class PolytropicGas
  {
  public:
    explicit PolytropicGas(double gamma = 7. / 5.);

    double gamma() const { return gamma_; }
    double gamma_minus_one() const { return gamma_minus_one_; }
    double inverse_gamma_plus_one() const { return inverse_gamma_plus_one_; }
    /// (gamma - 1) / (2 gamma)
    double exponent_pressure_ratio() const { return exponent_pressure_ratio_; }
    /// 2 gamma / (gamma - 1)
    double exponent_two_rarefaction() const
    {
      return exponent_two_rarefaction_;
    }

    /// epsilon = E - |m|^2 / (2 rho)
    template <int n, typename Number>
    Number internal_energy(const Vec<n, Number> &U) const
    {
      constexpr int dim = n - 2;
      const Number rho = U[0];
      const Number m2 = norm_square(momentum(U));
      return U[dim + 1] - Number(0.5) * m2 / rho;
    }

    /// rho * epsilon = rho E - |m|^2 / 2, free of divisions.
    template <int n, typename Number>
    Number density_times_internal_energy(const Vec<n, Number> &U) const
    {
      constexpr int dim = n - 2;
      const Number m2 = norm_square(momentum(U));
      return U[0] * U[dim + 1] - Number(0.5) * m2;
    }

    template <int n, typename Number>
    Number pressure(const Vec<n, Number> &U) const
    {
      return Number(gamma_minus_one_) * internal_energy(U);
    }

    /// c = sqrt(gamma p / rho) from given density and pressure.
    template <typename Number>
    Number speed_of_sound(const Number &rho, const Number &p) const
    {
      require_positive(rho, "speed_of_sound: density");
      require_nonnegative(p, "speed_of_sound: pressure");
      return sqrt(Number(gamma_) * p / rho);
    }

    template <int n, typename Number>
    Number speed_of_sound(const Vec<n, Number> &U) const
    {
      constexpr int dim = n - 2;
      return speed_of_sound(U[0], pressure(U));
    }

    /// phi = epsilon rho^{-gamma}
    template <int n, typename Number>
    Number specific_entropy_phi(const Vec<n, Number> &U) const
    {
      require_positive(U[0], "specific_entropy_phi: density");
      return internal_energy(U) * power(U[0], -gamma_);
    }

    /// s = log(e^{1/(gamma-1)} / rho), with e = epsilon / rho.
    template <int n, typename Number>
    Number specific_entropy(const Vec<n, Number> &U) const
    {
      constexpr int dim = n - 2;
      const Number eps = internal_energy(U);
      require_positive(eps, "specific_entropy: internal energy");
      require_positive(U[0], "specific_entropy: density");
      return log(eps / U[0]) / Number(gamma_minus_one_) - log(U[0]);
    }

    /// Harten entropy eta = (rho epsilon)^{1/(gamma+1)}.
    template <int n, typename Number>
    Number harten_entropy(const Vec<n, Number> &U) const
    {
      const Number rho_e = density_times_internal_energy(U);
      require_positive(rho_e, "harten_entropy: rho epsilon");
      return power(rho_e, inverse_gamma_plus_one_);
    }

    /// eta'(U) = (rho eps)^{-gamma/(gamma+1)} / (gamma+1) * (E, -m, rho),
    /// ordered like the state.
    template <int n, typename Number>
    Vec<n, Number> harten_entropy_derivative(const Vec<n, Number> &U) const
    {
      constexpr int dim = n - 2;
      const Number rho_e = density_times_internal_energy(U);
      require_positive(rho_e, "harten_entropy_derivative: rho epsilon");
      const Number factor = Number(inverse_gamma_plus_one_) *
                            power(rho_e, -gamma_ * inverse_gamma_plus_one_);
      State<dim, Number> r;
      r[0] = factor * U[dim + 1];
      for (int k = 0; k < dim; ++k)
        r[1 + k] = -factor * U[1 + k];
      r[dim + 1] = factor * U[0];
      return r;
    }

    /// f(U) = (m, v (x) m + p I, v (E + p))^T
    template <int n, typename Number>
    Flux<n - 2, Number> flux(const Vec<n, Number> &U) const
    {
      constexpr int dim = n - 2;
      const Number rho_inverse = Number(1.) / U[0];
      const Vec<dim, Number> m = momentum(U);
      const Number p = pressure(U);
      const Number E = U[dim + 1];

      Flux<dim, Number> f;
      f[0] = m;
      for (int r = 0; r < dim; ++r)
      {
        for (int c = 0; c < dim; ++c)
          f[1 + r][c] = m[r] * (rho_inverse * m[c]);
        f[1 + r][r] += p;
      }
      for (int c = 0; c < dim; ++c)
        f[dim + 1][c] = (rho_inverse * m[c]) * (E + p);
      return f;
    }

    /// rho > 0 and epsilon > 0
    template <int n>
    bool is_admissible(const Vec<n, double> &U) const
    {
      return U[0] > 0. && internal_energy(U) > 0.;
    }

    /// Conserved state from primitive (rho, v, p).
    template <int dim>
    State<dim, double> from_primitive(double rho,
                                      const Vec<dim, double> &velocity,
                                      double p) const
    {
      State<dim, double> U;
      U[0] = rho;
      for (int k = 0; k < dim; ++k)
        U[1 + k] = rho * velocity[k];
      U[dim + 1] = p / gamma_minus_one_ + 0.5 * rho * norm_square(velocity);
      return U;
    }

  private:
    double gamma_;
    double gamma_minus_one_;
    double inverse_gamma_plus_one_;
    double exponent_pressure_ratio_;
    double exponent_two_rarefaction_;
  };

} // namespace idp
