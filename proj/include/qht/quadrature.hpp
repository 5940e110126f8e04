#pragma once

#include <cmath>
#include <complex>
#include <type_traits>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "qht/error.hpp"

namespace qht::quad {

/// Nodes and weights of a composite rule on [a, b].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

inline constexpr int kPanelOrder = 20;

/// Composite 20-point Gauss-Legendre rule with `panels` equal panels.
inline Rule gauss_legendre(double a, double b, int panels) {
  using GL = boost::math::quadrature::gauss<double, kPanelOrder>;
  const auto& x = GL::abscissa();
  const auto& w = GL::weights();
  Rule rule;
  rule.nodes.reserve(static_cast<std::size_t>(panels) * kPanelOrder);
  rule.weights.reserve(rule.nodes.capacity());
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    const double half = 0.5 * width;
    for (std::size_t i = 0; i < x.size(); ++i) {
      rule.nodes.push_back(mid - half * x[i]);
      rule.weights.push_back(half * w[i]);
      rule.nodes.push_back(mid + half * x[i]);
      rule.weights.push_back(half * w[i]);
    }
  }
  return rule;
}

template <class F>
auto apply(const Rule& rule, F&& f) {
  using R = std::decay_t<decltype(f(0.0))>;
  R acc{};
  for (std::size_t i = 0; i < rule.size(); ++i) acc += rule.weights[i] * f(rule.nodes[i]);
  return acc;
}

template <class R>
struct Result {
  R value{};
  double l1 = 0.0;  // integral of |f|, the scale used for the stopping test
  int panels = 0;
  bool converged = false;
};

/// Composite Gauss-Legendre integration with panel doubling. Stops when two
/// successive estimates differ by less than `rel_tol` times the integral of
/// |f| (so oscillatory integrands with cancelling mass still terminate).
template <class F>
auto integrate(F&& f, double a, double b, double rel_tol = 1e-10, int start_panels = 1,
               int max_panels = 1 << 14) {
  using R = std::decay_t<decltype(f(0.0))>;
  Result<R> out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  auto once = [&](int panels, double& l1) {
    const Rule rule = gauss_legendre(a, b, panels);
    R acc{};
    l1 = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const R v = f(rule.nodes[i]);
      acc += rule.weights[i] * v;
      l1 += rule.weights[i] * std::abs(v);
    }
    return acc;
  };
  int panels = start_panels;
  double l1 = 0.0;
  R prev = once(panels, l1);
  while (panels < max_panels) {
    panels *= 2;
    double l1_next = 0.0;
    R next = once(panels, l1_next);
    const double scale = std::max(std::abs(l1_next), 1e-300);
    if (std::abs(next - prev) <= rel_tol * scale) {
      out.value = next;
      out.l1 = l1_next;
      out.panels = panels;
      out.converged = true;
      return out;
    }
    prev = next;
    l1 = l1_next;
  }
  out.value = prev;
  out.l1 = l1;
  out.panels = panels;
  return out;
}

/// Same as integrate() but raises NumericError when the tolerance is not met.
template <class F>
auto integrate_or_throw(F&& f, double a, double b, double rel_tol = 1e-10, int start_panels = 1,
                        int max_panels = 1 << 14) {
  auto r = integrate(std::forward<F>(f), a, b, rel_tol, start_panels, max_panels);
  if (!r.converged) throw NumericError("quadrature did not reach the requested tolerance");
  return r.value;
}

}  // namespace qht::quad
