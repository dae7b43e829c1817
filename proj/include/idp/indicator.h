#pragma once

#include <idp/lanes.h>
#include <idp/physics.h>

namespace idp
{
  /**
   * Normalized entropy-viscosity commutator built on the Harten entropy.
   *
   * Usage per row i: reset(U_i), accumulate(...) once for every j in the
   * stencil of i (j = i contributes zero), then result() yields
   * alpha_i in [0, 1].
   */
  template <int dim, typename Number = double>
  class Indicator
  {
  public:
    explicit Indicator(const PolytropicGas &gas)
      : gas_(gas)
    {}

    void reset(const State<dim, Number> &Ui)
    {
      rho_i_ = Ui[0];
      eta_i_ = gas_.harten_entropy(Ui);
      eta_over_rho_i_ = eta_i_ / rho_i_;
      eta_prime_i_ = gas_.harten_entropy_derivative(Ui);
      flux_i_ = gas_.flux(Ui);
      a_ = Number(0.);
      b_ = State<dim, Number>();
      for (int k = 0; k < dim + 2; ++k)
        b_[k] = Number(0.);
    }

    /// eta_over_rho_j = eta(U_j) / rho_j, precomputed once per node. The
    /// beta_ij argument is accepted to keep the stencil loop uniform but the
    /// commutator does not depend on it.
    void accumulate(const State<dim, Number> &Uj,
                    const Number &eta_over_rho_j,
                    const Vec<dim, Number> &c_ij,
                    const Number & /*beta_ij*/ = Number(0.))
    {
      accumulate(Uj, gas_.flux(Uj), eta_over_rho_j, c_ij);
    }

    void accumulate(const State<dim, Number> &Uj,
                    const Flux<dim, Number> &flux_j,
                    const Number &eta_over_rho_j,
                    const Vec<dim, Number> &c_ij)
    {
      a_ += (eta_over_rho_j - eta_over_rho_i_) * dot(momentum(Uj), c_ij);
      b_ += contract(flux_j - flux_i_, c_ij);
    }

    /// Convenience overload computing eta_j / rho_j on the fly.
    void accumulate(const State<dim, Number> &Uj, const Vec<dim, Number> &c_ij)
    {
      accumulate(Uj, gas_.harten_entropy(Uj) / Uj[0], c_ij);
    }

    Number result() const
    {
      Number numerator = a_ + eta_over_rho_i_ * b_[0];
      Number denominator = abs(a_);
      for (int k = 0; k < dim + 2; ++k)
      {
        numerator -= eta_prime_i_[k] * b_[k];
        const Number weight =
          k == 0 ? eta_prime_i_[0] - eta_over_rho_i_ : eta_prime_i_[k];
        denominator += abs(weight) * abs(b_[k]);
      }
      numerator = abs(numerator);

      const Number ratio = numerator / max(denominator, Number(1.e-300));
      const Number clamped = min(ratio, Number(1.));
      return select(denominator > Number(1.e-300), clamped, Number(0.));
    }

    const Number &a() const { return a_; }
    const State<dim, Number> &b() const { return b_; }

  private:
    PolytropicGas gas_;

    Number rho_i_{};
    Number eta_i_{};
    Number eta_over_rho_i_{};
    State<dim, Number> eta_prime_i_{};
    Flux<dim, Number> flux_i_{};

    Number a_{};
    State<dim, Number> b_{};
  };

} // namespace idp
