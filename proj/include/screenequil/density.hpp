#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "errors.hpp"
#include "quadrature.hpp"

namespace screenequil {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class DensityKind { uniform, normal, logistic, tabulated };

inline const char* to_string(DensityKind k) {
  switch (k) {
    case DensityKind::uniform: return "uniform";
    case DensityKind::normal: return "normal";
    case DensityKind::logistic: return "logistic";
    case DensityKind::tabulated: return "tabulated";
  }
  return "?";
}

struct Interval {
  double lo, hi;
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
  double width() const { return hi - lo; }
};

namespace detail {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

// Monotone cubic Hermite cdf on an ascending grid; the pdf is its derivative.
class Table {
 public:
  Table(std::vector<double> x, const std::vector<double>& pdf, const std::vector<double>& cdf)
      : x_(std::move(x)) {
    const size_t n = x_.size();
    if (n < 2 || pdf.size() != n || cdf.size() != n) throw InvalidArgument("tabulated density needs matching arrays of size >= 2");
    for (size_t i = 0; i < n; ++i) {
      if (!std::isfinite(x_[i]) || !std::isfinite(pdf[i]) || !std::isfinite(cdf[i]) || pdf[i] < 0)
        throw InvalidArgument("tabulated density has a non-finite or negative entry");
      if (i > 0 && (x_[i] <= x_[i - 1] || cdf[i] < cdf[i - 1]))
        throw InvalidArgument("tabulated density grid must ascend with a nondecreasing cdf");
    }
    const double total = cdf.back() - cdf.front();
    if (!(total > 0)) throw NumericError("tabulated density has zero mass");
    c_.resize(n);
    for (size_t i = 0; i < n; ++i) c_[i] = (cdf[i] - cdf.front()) / total;
    c_.back() = 1.0;
    m0_.resize(n - 1);
    m1_.resize(n - 1);
    for (size_t k = 0; k + 1 < n; ++k) {
      const double h = x_[k + 1] - x_[k], delta = (c_[k + 1] - c_[k]) / h;
      double a = pdf[k] / total, b = pdf[k + 1] / total;
      if (delta <= 0) {
        a = b = 0;
      } else {
        const double r = (a * a + b * b) / (delta * delta);
        if (r > 9.0) {
          const double tau = 3.0 / std::sqrt(r);
          a *= tau;
          b *= tau;
        }
      }
      m0_[k] = a;
      m1_[k] = b;
    }
    // upper_[k] = integral of (1 - C) from x_k to the last node.
    upper_.assign(n, 0.0);
    for (size_t k = n - 1; k-- > 0;) upper_[k] = upper_[k + 1] + cell_upper(k, 0.0);
    mean_ = x_.front() + upper_[0];
  }

  double lo() const { return x_.front(); }
  double hi() const { return x_.back(); }
  double mean() const { return mean_; }
  const std::vector<double>& nodes() const { return x_; }

  double cdf(double z) const {
    if (z <= x_.front()) return 0.0;
    if (z >= x_.back()) return 1.0;
    const size_t k = cell(z);
    const double h = x_[k + 1] - x_[k], t = (z - x_[k]) / h;
    return eval(k, t);
  }
  double ccdf(double z) const { return 1.0 - cdf(z); }

  double pdf(double z) const {
    if (z < x_.front() || z > x_.back()) return 0.0;
    const size_t k = cell(z);
    const double h = x_[k + 1] - x_[k], t = (z - x_[k]) / h;
    return slope(k, t);
  }

  double quantile(double u) const {
    if (u <= 0) return x_.front();
    if (u >= 1) return x_.back();
    size_t k = static_cast<size_t>(std::upper_bound(c_.begin(), c_.end(), u) - c_.begin());
    k = std::clamp<size_t>(k, 1, x_.size() - 1) - 1;
    if (c_[k + 1] == c_[k]) return x_[k];
    const double h = x_[k + 1] - x_[k];
    double lo = 0, hi = 1, t = (u - c_[k]) / (c_[k + 1] - c_[k]);
    for (int it = 0; it < 100 && hi - lo > 1e-16; ++it) {
      const double r = eval(k, t) - u;
      if (r == 0) break;
      if (r < 0)
        lo = t;
      else
        hi = t;
      const double d = slope(k, t) * h;
      double next = d > 0 ? t - r / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - t) < 1e-16) {
        t = next;
        break;
      }
      t = next;
    }
    return x_[k] + t * h;
  }

  // E[(Y - z)+] for Y with this law.
  double option_value(double z) const {
    if (z <= x_.front()) return mean_ - z;
    if (z >= x_.back()) return 0.0;
    const size_t k = cell(z);
    const double t = (z - x_[k]) / (x_[k + 1] - x_[k]);
    return cell_upper(k, t) + upper_[k + 1];
  }

 private:
  size_t cell(double z) const {
    size_t k = static_cast<size_t>(std::upper_bound(x_.begin(), x_.end(), z) - x_.begin());
    return std::clamp<size_t>(k, 1, x_.size() - 1) - 1;
  }

  double eval(size_t k, double t) const {
    const double h = x_[k + 1] - x_[k], t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * c_[k] + (t3 - 2 * t2 + t) * h * m0_[k] + (-2 * t3 + 3 * t2) * c_[k + 1] +
           (t3 - t2) * h * m1_[k];
  }

  double slope(size_t k, double t) const {
    const double h = x_[k + 1] - x_[k], t2 = t * t;
    const double d = ((6 * t2 - 6 * t) * c_[k] + (-6 * t2 + 6 * t) * c_[k + 1]) / h +
                     (3 * t2 - 4 * t + 1) * m0_[k] + (3 * t2 - 2 * t) * m1_[k];
    return std::max(d, 0.0);
  }

  // Integral of (1 - C) over [x_k + t h, x_{k+1}].
  double cell_upper(size_t k, double t) const {
    const double h = x_[k + 1] - x_[k];
    auto prim = [&](double s) {
      const double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
      return c_[k] * (s - s3 + 0.5 * s4) + h * m0_[k] * (0.5 * s2 - 2.0 * s3 / 3.0 + 0.25 * s4) +
             c_[k + 1] * (s3 - 0.5 * s4) + h * m1_[k] * (-s3 / 3.0 + 0.25 * s4);
    };
    return h * ((1.0 - t) - (prim(1.0) - prim(t)));
  }

  std::vector<double> x_, c_, m0_, m1_, upper_;
  double mean_ = 0;
};

}  // namespace detail

// Univariate law: uniform, normal, logistic, or a tabulated law under an affine map.
class Density {
 public:
  static Density uniform(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) throw InvalidArgument("uniform density needs finite lo < hi");
    return Density(DensityKind::uniform, lo, hi);
  }
  static Density normal(double mu, double sigma) {
    if (!std::isfinite(mu) || !std::isfinite(sigma) || !(sigma > 0)) throw InvalidArgument("normal density needs finite mu and sigma > 0");
    return Density(DensityKind::normal, mu, sigma);
  }
  static Density logistic(double mu, double s) {
    if (!std::isfinite(mu) || !std::isfinite(s) || !(s > 0)) throw InvalidArgument("logistic density needs finite mu and s > 0");
    return Density(DensityKind::logistic, mu, s);
  }
  // pdf samples on an ascending grid; cdf from the trapezoid rule, mass renormalized to 1.
  static Density tabulated(std::vector<double> x, const std::vector<double>& pdf) {
    if (x.size() != pdf.size() || x.size() < 2) throw InvalidArgument("tabulated density needs matching arrays of size >= 2");
    std::vector<double> cdf(x.size(), 0.0);
    for (size_t i = 1; i < x.size(); ++i) cdf[i] = cdf[i - 1] + 0.5 * (pdf[i] + pdf[i - 1]) * (x[i] - x[i - 1]);
    return tabulated(std::move(x), pdf, cdf);
  }
  static Density tabulated(std::vector<double> x, const std::vector<double>& pdf, const std::vector<double>& cdf) {
    Density d(DensityKind::tabulated, 0.0, 1.0);
    d.table_ = std::make_shared<const detail::Table>(std::move(x), pdf, cdf);
    return d;
  }
  // Samples pdf on n points of [lo, hi]; cell masses by quadrature.
  static Density from_pdf(const std::function<double(double)>& pdf, double lo, double hi, int n = 4096) {
    auto x = linspace(lo, hi, n);
    std::vector<double> p(n), c(n, 0.0);
    for (int i = 0; i < n; ++i) p[i] = pdf(x[i]);
    QuadratureOptions q{1e-12, 1e-16, 200};
    for (int i = 1; i < n; ++i) c[i] = c[i - 1] + integrate(pdf, x[i - 1], x[i], q);
    return tabulated(std::move(x), p, c);
  }

  DensityKind kind() const { return kind_; }

  double location() const {
    return kind_ == DensityKind::uniform ? 0.5 * (a_ + b_) : a_;
  }
  double scale() const {
    return kind_ == DensityKind::uniform ? 0.5 * (b_ - a_) : b_;
  }

  Interval support() const {
    switch (kind_) {
      case DensityKind::uniform: return {a_, b_};
      case DensityKind::tabulated: {
        const double l = map(table_->lo()), h = map(table_->hi());
        return {std::min(l, h), std::max(l, h)};
      }
      default: return {-kInf, kInf};
    }
  }

  // Support truncated where the tail mass drops below 1e-20.
  Interval integration_range() const {
    switch (kind_) {
      case DensityKind::normal: return {a_ - 10.0 * b_, a_ + 10.0 * b_};
      case DensityKind::logistic: return {a_ - 47.0 * b_, a_ + 47.0 * b_};
      default: return support();
    }
  }

  double pdf(double x) const {
    switch (kind_) {
      case DensityKind::uniform: return (x >= a_ && x <= b_) ? 1.0 / (b_ - a_) : 0.0;
      case DensityKind::normal: {
        const double z = (x - a_) / b_;
        return detail::kInvSqrt2Pi * std::exp(-0.5 * z * z) / b_;
      }
      case DensityKind::logistic: {
        const double e = std::exp(-std::abs((x - a_) / b_));
        return e / (b_ * (1 + e) * (1 + e));
      }
      case DensityKind::tabulated: return table_->pdf(unmap(x)) / b_;
    }
    return 0.0;
  }

  double cdf(double x) const {
    switch (kind_) {
      case DensityKind::uniform: return std::clamp((x - a_) / (b_ - a_), 0.0, 1.0);
      case DensityKind::normal: return 0.5 * std::erfc(-(x - a_) / (b_ * M_SQRT2));
      case DensityKind::logistic: return logistic_cdf((x - a_) / b_);
      case DensityKind::tabulated: return reflect_ ? table_->ccdf(unmap(x)) : table_->cdf(unmap(x));
    }
    return 0.0;
  }

  double ccdf(double x) const {
    switch (kind_) {
      case DensityKind::uniform: return std::clamp((b_ - x) / (b_ - a_), 0.0, 1.0);
      case DensityKind::normal: return 0.5 * std::erfc((x - a_) / (b_ * M_SQRT2));
      case DensityKind::logistic: return logistic_cdf(-(x - a_) / b_);
      case DensityKind::tabulated: return reflect_ ? table_->cdf(unmap(x)) : table_->ccdf(unmap(x));
    }
    return 0.0;
  }

  double quantile(double u) const {
    if (std::isnan(u) || u < 0 || u > 1) throw InvalidArgument("quantile level must lie in [0,1]");
    switch (kind_) {
      case DensityKind::uniform: return a_ + u * (b_ - a_);
      case DensityKind::normal:
        if (u == 0) return -kInf;
        if (u == 1) return kInf;
        return a_ - b_ * M_SQRT2 * boost::math::erfc_inv(2 * u);
      case DensityKind::logistic:
        if (u == 0) return -kInf;
        if (u == 1) return kInf;
        return a_ + b_ * (std::log(u) - std::log1p(-u));
      case DensityKind::tabulated: return map(reflect_ ? table_->quantile(1 - u) : table_->quantile(u));
    }
    return 0.0;
  }

  // x with ccdf(x) = t; keeps precision for small upper tails.
  double upper_quantile(double t) const {
    if (std::isnan(t) || t < 0 || t > 1) throw InvalidArgument("tail level must lie in [0,1]");
    switch (kind_) {
      case DensityKind::uniform: return b_ - t * (b_ - a_);
      case DensityKind::normal:
        if (t == 0) return kInf;
        if (t == 1) return -kInf;
        return a_ + b_ * M_SQRT2 * boost::math::erfc_inv(2 * t);
      case DensityKind::logistic:
        if (t == 0) return kInf;
        if (t == 1) return -kInf;
        return a_ + b_ * (std::log1p(-t) - std::log(t));
      case DensityKind::tabulated: return map(reflect_ ? table_->quantile(t) : table_->quantile(1 - t));
    }
    return 0.0;
  }

  double mean() const {
    switch (kind_) {
      case DensityKind::uniform: return 0.5 * (a_ + b_);
      case DensityKind::tabulated: return map(table_->mean());
      default: return a_;
    }
  }

  // f'(x)/f(x); central differences with step 1e-5 for tabulated laws.
  double score(double x) const {
    switch (kind_) {
      case DensityKind::uniform: return 0.0;
      case DensityKind::normal: return -(x - a_) / (b_ * b_);
      case DensityKind::logistic: return -std::tanh(0.5 * (x - a_) / b_) / b_;
      case DensityKind::tabulated: {
        constexpr double h = 1e-5;
        const double p = pdf(x);
        if (!(p > 0)) return 0.0;
        return (pdf(x + h) - pdf(x - h)) / (2 * h * p);
      }
    }
    return 0.0;
  }

  // Law of a*X + b for a > 0.
  Density affine(double a, double b) const {
    if (!std::isfinite(a) || !(a > 0) || !std::isfinite(b)) throw InvalidArgument("affine map needs finite a > 0 and finite b");
    Density d = *this;
    if (kind_ == DensityKind::uniform) {
      d.a_ = a * a_ + b;
      d.b_ = a * b_ + b;
    } else {
      d.a_ = a * a_ + b;
      d.b_ = a * b_;
    }
    return d;
  }

  // Law of -X.
  Density reflected() const {
    Density d = *this;
    if (kind_ == DensityKind::uniform) {
      d.a_ = -b_;
      d.b_ = -a_;
    } else {
      d.a_ = -a_;
      if (kind_ == DensityKind::tabulated) d.reflect_ = !reflect_;
    }
    return d;
  }

  // E[(X - a)+] from the piecewise-cubic cdf; tabulated laws only.
  double tabulated_option_value(double a) const {
    const double z = unmap(a);
    if (!reflect_) return b_ * table_->option_value(z);
    // X = shift - s*Y: E[(X - a)+] = s E[(z - Y)+] with z = (shift - a)/s.
    return b_ * (table_->option_value(z) - table_->mean() + z);
  }

  const std::vector<double>* nodes() const { return table_ ? &table_->nodes() : nullptr; }

 private:
  Density(DensityKind k, double a, double b) : kind_(k), a_(a), b_(b) {}

  static double logistic_cdf(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }

  // Tabulated coordinates: X = a_ + b_ * (reflect ? -Y : Y).
  double map(double y) const { return a_ + b_ * (reflect_ ? -y : y); }
  double unmap(double x) const {
    const double y = (x - a_) / b_;
    return reflect_ ? -y : y;
  }

  DensityKind kind_;
  double a_, b_;
  bool reflect_ = false;
  std::shared_ptr<const detail::Table> table_;
};

// E[(X - a)+] for X ~ d.
inline double option_value(const Density& d, double a, const QuadratureOptions& q = {}) {
  if (std::isnan(a) || a == -kInf) throw InvalidArgument("option_value needs a finite threshold or +inf");
  if (a == kInf) return 0.0;
  switch (d.kind()) {
    case DensityKind::normal: {
      const double s = d.scale(), z = (a - d.location()) / s;
      const double v = s * (detail::kInvSqrt2Pi * std::exp(-0.5 * z * z) - z * 0.5 * std::erfc(z / M_SQRT2));
      return std::max(v, 0.0);
    }
    case DensityKind::uniform: {
      const auto [lo, hi] = d.support();
      if (a <= lo) return d.mean() - a;
      if (a >= hi) return 0.0;
      return (hi - a) * (hi - a) / (2 * (hi - lo));
    }
    case DensityKind::tabulated: return std::max(d.tabulated_option_value(a), 0.0);
    case DensityKind::logistic: {
      const auto [lo, hi] = d.integration_range();
      if (a >= hi) return 0.0;
      if (a <= lo) return d.mean() - a;
      return integrate([&](double x) { return (x - a) * d.pdf(x); }, std::vector<double>{a, std::max(a, d.location()), hi}, q);
    }
  }
  return 0.0;
}

// E[(a - X)+] for X ~ d.
inline double option_value_lower(const Density& d, double a, const QuadratureOptions& q = {}) {
  if (std::isnan(a) || a == kInf) throw InvalidArgument("option_value_lower needs a finite threshold or -inf");
  if (a == -kInf) return 0.0;
  return option_value(d.reflected(), -a, q);
}

inline double abs_moment(const Density& d, const QuadratureOptions& q = {}) {
  return 2.0 * option_value(d, 0.0, q) - d.mean();
}

// Law of X + Y for X ~ g (bounded support) and Y ~ f, tabulated on n points.
inline Density convolve(const Density& g, const Density& f, int n = 4096, const QuadratureOptions& q = {}) {
  const Interval gs = g.support();
  if (!gs.bounded()) throw InvalidArgument("convolve needs a bounded first density");
  constexpr double tail = 1e-13;
  const Interval fs = f.support();
  const double flo = std::max(f.quantile(tail), fs.lo), fhi = std::min(f.upper_quantile(tail), fs.hi);
  const double lo = gs.lo + flo, hi = gs.hi + fhi;
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi - lo > 0) || !((hi - lo) / n > 0))
    throw NumericError("convolution grid could not be built for the given scales");
  auto x = linspace(lo, hi, n);
  std::vector<double> h(n), H(n);
  const QuadratureOptions qq{q.rel_tol, 1e-16, q.max_panels};
  std::vector<double> fk{flo, fhi};
  for (double u : {0.001, 0.02, 0.25, 0.5, 0.75, 0.98, 0.999}) fk.push_back(f.quantile(u));
  for (int i = 0; i < n; ++i) {
    std::vector<double> knots{gs.lo, gs.hi};
    for (double y : fk)
      if (gs.lo < x[i] - y && x[i] - y < gs.hi) knots.push_back(x[i] - y);
    h[i] = integrate([&](double t) { return f.pdf(x[i] - t) * g.pdf(t); }, knots, qq);
    H[i] = integrate([&](double t) { return f.cdf(x[i] - t) * g.pdf(t); }, knots, qq);
  }
  for (int i = 1; i < n; ++i) H[i] = std::max(H[i], H[i - 1]);
  return Density::tabulated(std::move(x), h, H);
}

struct RegularityCheck {
  std::string name;
  bool pass = true;
  std::optional<double> first_violation;
  double worst = 0.0;
};

struct RegularityReport {
  std::vector<RegularityCheck> checks;
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
  }
  bool passes(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c.pass;
    return false;
  }
};

namespace detail {

inline Interval diagnostic_range(const Density& d) {
  const Interval s = d.support();
  if (s.bounded()) return s;
  return {d.quantile(1e-9), d.upper_quantile(1e-9)};
}

// Interior grid of n points (endpoints of a closed support excluded).
inline std::vector<double> interior_grid(const Interval& r, int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = r.lo + (r.hi - r.lo) * (i + 0.5) / n;
  return x;
}

inline RegularityCheck log_concavity(const std::string& name, const Density& d) {
  RegularityCheck c;
  c.name = name;
  auto x = interior_grid(diagnostic_range(d), 1001);
  for (size_t i = 1; i + 1 < x.size(); ++i) {
    const double p0 = d.pdf(x[i - 1]), p1 = d.pdf(x[i]), p2 = d.pdf(x[i + 1]);
    double second = (p0 > 0 && p1 > 0 && p2 > 0) ? std::log(p0) - 2 * std::log(p1) + std::log(p2) : kInf;
    c.worst = std::max(c.worst, second);
    if (second > 1e-9 && c.pass) {
      c.pass = false;
      c.first_violation = x[i];
    }
  }
  return c;
}

}  // namespace detail

// Log-concavity of g and f, symmetry of f, and the two hazard monotonicity conditions on g.
inline RegularityReport assert_regularity(const Density& g, const Density& f) {
  RegularityReport r;
  r.checks.push_back(detail::log_concavity("type_log_concave", g));
  r.checks.push_back(detail::log_concavity("shock_log_concave", f));

  RegularityCheck sym;
  sym.name = "shock_symmetric";
  const Interval fr = detail::diagnostic_range(f);
  const double half = std::max(std::abs(fr.lo), std::abs(fr.hi));
  for (double x : linspace(-half, half, 1001)) {
    const double d = std::abs(f.pdf(x) - f.pdf(-x));
    sym.worst = std::max(sym.worst, d);
    if (d > 1e-10 && sym.pass) {
      sym.pass = false;
      sym.first_violation = x;
    }
  }
  r.checks.push_back(sym);

  RegularityCheck low, high;
  low.name = "type_hazard_low_nondecreasing";
  high.name = "type_hazard_high_nonincreasing";
  auto x = linspace(g.support().lo, g.support().hi, 1001);
  double prev_low = -kInf, prev_high = kInf;
  for (double t : x) {
    const double p = g.pdf(t);
    const double lo_h = p > 0 ? g.cdf(t) / p : kInf, hi_h = p > 0 ? g.ccdf(t) / p : kInf;
    const double dl = prev_low - lo_h, dh = hi_h - prev_high;
    low.worst = std::max(low.worst, std::isfinite(dl) ? dl : 0.0);
    high.worst = std::max(high.worst, std::isfinite(dh) ? dh : 0.0);
    if ((dl > 1e-9 || !std::isfinite(lo_h)) && low.pass) {
      low.pass = false;
      low.first_violation = t;
    }
    if ((dh > 1e-9 || !std::isfinite(hi_h)) && high.pass) {
      high.pass = false;
      high.first_violation = t;
    }
    prev_low = lo_h;
    prev_high = hi_h;
  }
  r.checks.push_back(low);
  r.checks.push_back(high);
  return r;
}

// Symmetry of d about zero on a 1001-point grid.
inline bool is_symmetric(const Density& d, double tol = 1e-10) {
  const Interval s = d.support();
  if (s.bounded() && std::abs(s.lo + s.hi) > tol * std::max(1.0, s.width())) return false;
  const Interval r = detail::diagnostic_range(d);
  const double half = std::max(std::abs(r.lo), std::abs(r.hi));
  for (double x : linspace(-half, half, 1001))
    if (std::abs(d.pdf(x) - d.pdf(-x)) > tol) return false;
  return true;
}

}  // namespace screenequil
