#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace screenequil {

struct QuadratureOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  int max_panels = 4000;
};

namespace detail {

// Kronrod 15-point abscissae on [0,1] (odd entries are the Gauss 7-point nodes).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

// One G7K15 panel; error estimate follows QUADPACK's qk15 scaling.
template <class F>
Panel gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = fc * kWgk[7], resg = fc * kWg[3], resabs = std::abs(resk);
  std::array<double, 7> f1{}, f2{};
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    f1[j] = f(c - dx);
    f2[j] = f(c + dx);
    resk += kWgk[j] * (f1[j] + f2[j]);
    resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    if (j % 2 == 1) resg += kWg[j / 2] * (f1[j] + f2[j]);
  }
  const double mean = 0.5 * resk;
  double resasc = kWgk[7] * std::abs(fc - mean);
  for (int j = 0; j < 7; ++j) resasc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
  resk *= h;
  resabs *= std::abs(h);
  resasc *= std::abs(h);
  double err = std::abs((resk - resg * h));
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  return {a, b, resk, err};
}

}  // namespace detail

// Global adaptive integration over consecutive knots; non-finite or out-of-order knots are dropped.
template <class F>
double integrate(F&& f, std::vector<double> knots, const QuadratureOptions& opt = {}) {
  knots.erase(std::remove_if(knots.begin(), knots.end(), [](double x) { return !std::isfinite(x); }),
              knots.end());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  if (knots.size() < 2) return 0.0;

  std::priority_queue<detail::Panel> queue;
  double total = 0.0, total_err = 0.0;
  for (size_t i = 0; i + 1 < knots.size(); ++i) {
    auto p = detail::gk15(f, knots[i], knots[i + 1]);
    total += p.value;
    total_err += p.error;
    queue.push(p);
  }
  int panels = static_cast<int>(queue.size());
  while (total_err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) && panels < opt.max_panels) {
    auto worst = queue.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    queue.pop();
    auto left = detail::gk15(f, worst.a, mid);
    auto right = detail::gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
    ++panels;
  }
  // Re-sum to shed the drift of incremental updates.
  total = 0.0;
  while (!queue.empty()) {
    total += queue.top().value;
    queue.pop();
  }
  return total;
}

template <class F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (a == b) return 0.0;
  if (a > b) return -integrate(std::forward<F>(f), std::vector<double>{b, a}, opt);
  return integrate(std::forward<F>(f), std::vector<double>{a, b}, opt);
}

// Bisection for an increasing f with f(lo) <= 0 <= f(hi); stops at width or an exact zero.
template <class F>
double bisect(F&& f, double lo, double hi, double width) {
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double v = f(mid);
    if (v == 0.0) return mid;
    if (v < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Golden-section minimization on [lo, hi].
template <class F>
std::pair<double, double> golden_section(F&& f, double lo, double hi, double rel_tol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > rel_tol * std::max(std::abs(x1) + std::abs(x2), 1e-300)) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2) throw InvalidArgument("linspace needs at least two points");
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * i / (n - 1);
  x.back() = hi;
  return x;
}

}  // namespace screenequil
