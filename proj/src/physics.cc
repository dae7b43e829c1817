#include <idp/physics.h>

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace idp
{
  namespace
  {
    double default_power(double base, double exponent)
    {
      return std::pow(base, exponent);
    }

    std::atomic<PowerFunction> current_power{&default_power};
  } // namespace

  void set_power_function(PowerFunction fn) noexcept
  {
    current_power.store(fn != nullptr ? fn : &default_power,
                        std::memory_order_relaxed);
  }

  PowerFunction power_function() noexcept
  {
    return current_power.load(std::memory_order_relaxed);
  }

  void throw_domain_error(const char *what, double value)
  {
    std::ostringstream msg;
    msg.precision(17);
    msg << what << " must be positive, got " << value;
    throw std::domain_error(msg.str());
  }

  PolytropicGas::PolytropicGas(double gamma)
    : gamma_(gamma)
    , gamma_minus_one_(gamma - 1.)
    , inverse_gamma_plus_one_(1. / (gamma + 1.))
    , exponent_pressure_ratio_((gamma - 1.) / (2. * gamma))
    , exponent_two_rarefaction_(2. * gamma / (gamma - 1.))
  {
    if (!(gamma > 1.))
      throw std::invalid_argument("PolytropicGas: gamma must exceed 1");
  }

} // namespace idp
