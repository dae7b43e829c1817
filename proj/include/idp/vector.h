#pragma once

#include <idp/lanes.h>

#include <array>

namespace idp
{
  /**
   * Small fixed-size vector with value semantics. Used for points, the
   * conserved state of a node (d+2 entries), and d-vector matrix entries.
   */
  template <int n, typename Number = double>
  struct Vec
  {
    std::array<Number, n> data{};

    static constexpr int size() { return n; }

    Number &operator[](int k) { return data[k]; }
    const Number &operator[](int k) const { return data[k]; }

    Vec &operator+=(const Vec &o)
    {
      for (int k = 0; k < n; ++k)
        data[k] += o.data[k];
      return *this;
    }
    Vec &operator-=(const Vec &o)
    {
      for (int k = 0; k < n; ++k)
        data[k] -= o.data[k];
      return *this;
    }
    Vec &operator*=(const Number &s)
    {
      for (int k = 0; k < n; ++k)
        data[k] *= s;
      return *this;
    }

    Vec operator-() const
    {
      Vec r;
      for (int k = 0; k < n; ++k)
        r.data[k] = -data[k];
      return r;
    }

    bool operator==(const Vec &) const = default;
  };

  template <int n, typename Number>
  Vec<n, Number> operator+(Vec<n, Number> a, const Vec<n, Number> &b)
  {
    a += b;
    return a;
  }

  template <int n, typename Number>
  Vec<n, Number> operator-(Vec<n, Number> a, const Vec<n, Number> &b)
  {
    a -= b;
    return a;
  }

  template <int n, typename Number>
  Vec<n, Number> operator*(const Number &s, Vec<n, Number> a)
  {
    a *= s;
    return a;
  }

  template <int n, typename Number>
  Vec<n, Number> operator*(Vec<n, Number> a, const Number &s)
  {
    a *= s;
    return a;
  }

  template <int n, typename Number>
  Number dot(const Vec<n, Number> &a, const Vec<n, Number> &b)
  {
    Number r = a[0] * b[0];
    for (int k = 1; k < n; ++k)
      r += a[k] * b[k];
    return r;
  }

  template <int n, typename Number>
  Number norm_square(const Vec<n, Number> &a)
  {
    return dot(a, a);
  }

  template <int n, typename Number>
  Number norm(const Vec<n, Number> &a)
  {
    return sqrt(norm_square(a));
  }

  template <int dim>
  using Point = Vec<dim, double>;

} // namespace idp
