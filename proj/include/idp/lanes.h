#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace idp
{
  /// Signature of the power function used by every entropy-family kernel.
  using PowerFunction = double (*)(double, double);

  /// Swap point for the scalar power function. Defaults to std::pow.
  void set_power_function(PowerFunction fn) noexcept;
  PowerFunction power_function() noexcept;

  inline double power(double base, double exponent)
  {
    return power_function()(base, exponent);
  }


  /**
   * A fixed-width pack of doubles processed with identical control flow per
   * lane. Every arithmetic operation is applied lane by lane with the same
   * IEEE operation as the scalar code path, so a computation over Lanes<k>
   * reproduces k scalar computations bit for bit.
   */
  template <int width>
  struct Lanes
  {
    static_assert(width >= 1);
    static constexpr int size = width;

    std::array<double, width> v{};

    Lanes() = default;
    Lanes(double x) { v.fill(x); } // NOLINT: implicit broadcast, like a scalar

    double &operator[](int l) { return v[l]; }
    double operator[](int l) const { return v[l]; }

#define IDP_LANES_COMPOUND(op)                                                 \
  Lanes &operator op##=(const Lanes &o)                                        \
  {                                                                            \
    for (int l = 0; l < width; ++l)                                            \
      v[l] op## = o.v[l];                                                      \
    return *this;                                                              \
  }
    IDP_LANES_COMPOUND(+)
    IDP_LANES_COMPOUND(-)
    IDP_LANES_COMPOUND(*)
    IDP_LANES_COMPOUND(/)
#undef IDP_LANES_COMPOUND

    Lanes operator-() const
    {
      Lanes r;
      for (int l = 0; l < width; ++l)
        r.v[l] = -v[l];
      return r;
    }
  };

  template <int width>
  struct LaneMask
  {
    std::array<bool, width> v{};

    bool operator[](int l) const { return v[l]; }

    LaneMask operator!() const
    {
      LaneMask r;
      for (int l = 0; l < width; ++l)
        r.v[l] = !v[l];
      return r;
    }
    LaneMask operator&&(const LaneMask &o) const
    {
      LaneMask r;
      for (int l = 0; l < width; ++l)
        r.v[l] = v[l] && o.v[l];
      return r;
    }
    LaneMask operator||(const LaneMask &o) const
    {
      LaneMask r;
      for (int l = 0; l < width; ++l)
        r.v[l] = v[l] || o.v[l];
      return r;
    }
  };

#define IDP_LANES_BINARY(op)                                                   \
  template <int w>                                                             \
  Lanes<w> operator op(Lanes<w> a, const Lanes<w> &b)                          \
  {                                                                            \
    a op## = b;                                                                \
    return a;                                                                  \
  }                                                                            \
  template <int w>                                                             \
  Lanes<w> operator op(Lanes<w> a, double b)                                   \
  {                                                                            \
    a op## = Lanes<w>(b);                                                      \
    return a;                                                                  \
  }                                                                            \
  template <int w>                                                             \
  Lanes<w> operator op(double a, const Lanes<w> &b)                            \
  {                                                                            \
    Lanes<w> r(a);                                                             \
    r op## = b;                                                                \
    return r;                                                                  \
  }
  IDP_LANES_BINARY(+)
  IDP_LANES_BINARY(-)
  IDP_LANES_BINARY(*)
  IDP_LANES_BINARY(/)
#undef IDP_LANES_BINARY

#define IDP_LANES_COMPARE(op)                                                  \
  template <int w>                                                             \
  LaneMask<w> operator op(const Lanes<w> &a, const Lanes<w> &b)                \
  {                                                                            \
    LaneMask<w> m;                                                             \
    for (int l = 0; l < w; ++l)                                                \
      m.v[l] = a.v[l] op b.v[l];                                               \
    return m;                                                                  \
  }                                                                            \
  template <int w>                                                             \
  LaneMask<w> operator op(const Lanes<w> &a, double b)                         \
  {                                                                            \
    return a op Lanes<w>(b);                                                   \
  }
  IDP_LANES_COMPARE(<)
  IDP_LANES_COMPARE(<=)
  IDP_LANES_COMPARE(>)
  IDP_LANES_COMPARE(>=)
#undef IDP_LANES_COMPARE

#define IDP_LANES_UNARY_FN(name, expr)                                         \
  template <int w>                                                             \
  Lanes<w> name(const Lanes<w> &a)                                             \
  {                                                                            \
    Lanes<w> r;                                                                \
    for (int l = 0; l < w; ++l)                                                \
    {                                                                          \
      const double x = a.v[l];                                                 \
      r.v[l] = (expr);                                                         \
    }                                                                          \
    return r;                                                                  \
  }
  IDP_LANES_UNARY_FN(abs, std::abs(x))
  IDP_LANES_UNARY_FN(sqrt, std::sqrt(x))
  IDP_LANES_UNARY_FN(log, std::log(x))
  IDP_LANES_UNARY_FN(exp, std::exp(x))
#undef IDP_LANES_UNARY_FN

  template <int w>
  Lanes<w> max(const Lanes<w> &a, const Lanes<w> &b)
  {
    Lanes<w> r;
    for (int l = 0; l < w; ++l)
      r.v[l] = std::max(a.v[l], b.v[l]);
    return r;
  }

  template <int w>
  Lanes<w> min(const Lanes<w> &a, const Lanes<w> &b)
  {
    Lanes<w> r;
    for (int l = 0; l < w; ++l)
      r.v[l] = std::min(a.v[l], b.v[l]);
    return r;
  }

  template <int w>
  Lanes<w> power(const Lanes<w> &a, double exponent)
  {
    const PowerFunction fn = power_function();
    Lanes<w> r;
    for (int l = 0; l < w; ++l)
      r.v[l] = fn(a.v[l], exponent);
    return r;
  }

  template <int w>
  Lanes<w> select(const LaneMask<w> &m, const Lanes<w> &a, const Lanes<w> &b)
  {
    Lanes<w> r;
    for (int l = 0; l < w; ++l)
      r.v[l] = m.v[l] ? a.v[l] : b.v[l];
    return r;
  }

  template <int w>
  bool all_of(const LaneMask<w> &m)
  {
    return std::all_of(m.v.begin(), m.v.end(), [](bool b) { return b; });
  }

  template <int w>
  bool any_of(const LaneMask<w> &m)
  {
    return std::any_of(m.v.begin(), m.v.end(), [](bool b) { return b; });
  }


  /* Scalar counterparts so that kernels can be written once for double and
   * Lanes<k>. */

  using std::abs;
  using std::exp;
  using std::log;
  using std::max;
  using std::min;
  using std::sqrt;

  inline double select(bool m, double a, double b) { return m ? a : b; }
  inline bool all_of(bool m) { return m; }
  inline bool any_of(bool m) { return m; }


  template <typename Number>
  struct NumberTraits
  {
    static constexpr int width = 1;
    using Mask = bool;
    static double lane(double x, int) { return x; }
    static void set_lane(double &x, int, double value) { x = value; }
  };

  template <int w>
  struct NumberTraits<Lanes<w>>
  {
    static constexpr int width = w;
    using Mask = LaneMask<w>;
    static double lane(const Lanes<w> &x, int l) { return x.v[l]; }
    static void set_lane(Lanes<w> &x, int l, double value) { x.v[l] = value; }
  };

  template <typename Number>
  using MaskOf = typename NumberTraits<Number>::Mask;

  /// [x]_pos = (|x| + x) / 2, branch free.
  template <typename Number>
  Number positive_part(const Number &x)
  {
    return Number(0.5) * (abs(x) + x);
  }

  /// max(0, -x) = (|x| - x) / 2, branch free.
  template <typename Number>
  Number negative_part_magnitude(const Number &x)
  {
    return Number(0.5) * (abs(x) - x);
  }

  [[noreturn]] void throw_domain_error(const char *what, double value);

  /// Throws std::domain_error if any lane of x is not strictly positive.
  template <typename Number>
  void require_positive(const Number &x, const char *what)
  {
    for (int l = 0; l < NumberTraits<Number>::width; ++l)
    {
      const double value = NumberTraits<Number>::lane(x, l);
      if (!(value > 0.))
        throw_domain_error(what, value);
    }
  }

  template <typename Number>
  void require_nonnegative(const Number &x, const char *what)
  {
    for (int l = 0; l < NumberTraits<Number>::width; ++l)
    {
      const double value = NumberTraits<Number>::lane(x, l);
      if (!(value >= 0.))
        throw_domain_error(what, value);
    }
  }

} // namespace idp
