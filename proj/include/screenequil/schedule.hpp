#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "market.hpp"

namespace screenequil {

// (strike, fee); strike = +inf is the null contract with fee 0.
struct Contract {
  double strike = kInf;
  double fee = 0.0;
  bool is_null() const { return strike == kInf; }
};

// Subscription schedule tabulated along the type grid. Between strikes the fee is a
// monotone cubic in p whose slope at each strike is minus the demand of the selecting type.
class TabulatedSchedule {
 public:
  TabulatedSchedule(Firm firm, std::vector<double> gamma_grid, std::vector<double> strike_at,
                    std::vector<double> fee_at, std::vector<double> demand_at, double boundary_fee,
                    double max_strike)
      : firm_(firm),
        gamma_(std::move(gamma_grid)),
        strike_(std::move(strike_at)),
        fee_(std::move(fee_at)),
        demand_(std::move(demand_at)),
        boundary_fee_(boundary_fee),
        max_strike_(max_strike) {
    const size_t n = gamma_.size();
    if (n < 2 || strike_.size() != n || fee_.size() != n || demand_.size() != n)
      throw InvalidArgument("schedule arrays must have equal length >= 2");
    // Knots ascending in p. Equal strikes keep the demand of the lowest type for B, the highest for A.
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = firm_ == Firm::B ? n - 1 - i : i;
    for (size_t i : order) {
      const double p = strike_[i];
      if (!kp_.empty() && p <= kp_.back()) {
        if (p < kp_.back() - 1e-12 * std::max(1.0, std::abs(p)))
          throw InvalidArgument("schedule strikes must be monotone in type");
        kf_.back() = fee_[i];
        kq_.back() = demand_[i];
        continue;
      }
      kp_.push_back(p);
      kf_.push_back(fee_[i]);
      kq_.push_back(demand_[i]);
    }
    slope0_.resize(kp_.size());
    slope1_.resize(kp_.size());
    for (size_t k = 0; k + 1 < kp_.size(); ++k) {
      const double delta = (kf_[k + 1] - kf_[k]) / (kp_[k + 1] - kp_[k]);
      double a = -kq_[k], b = -kq_[k + 1];
      if (delta >= 0) {
        a = b = 0;
      } else {
        const double r = (a * a + b * b) / (delta * delta);
        if (r > 9.0) {
          const double tau = 3.0 / std::sqrt(r);
          a *= tau;
          b *= tau;
        }
      }
      slope0_[k] = a;
      slope1_[k] = b;
    }
  }

  Firm firm() const { return firm_; }
  const std::vector<double>& gamma_grid() const { return gamma_; }
  const std::vector<double>& strike_at() const { return strike_; }
  const std::vector<double>& fee_at() const { return fee_; }
  const std::vector<double>& demand_at() const { return demand_; }
  double boundary_fee() const { return boundary_fee_; }
  double max_strike() const { return max_strike_; }

  // Fee for strike p: boundary fee at and above the maximal strike, maximal fee at and below the
  // smallest tabulated strike, 0 for the null strike.
  double fee(double p) const {
    if (std::isnan(p) || p < 0) throw InvalidArgument("schedule fee needs a nonnegative strike");
    if (p == kInf) return 0.0;
    if (p >= max_strike_) return boundary_fee_;
    if (p <= kp_.front()) return kf_.front();
    if (p >= kp_.back()) return kf_.back();
    size_t k = static_cast<size_t>(std::upper_bound(kp_.begin(), kp_.end(), p) - kp_.begin()) - 1;
    const double h = kp_[k + 1] - kp_[k], t = (p - kp_[k]) / h, t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * kf_[k] + (t3 - 2 * t2 + t) * h * slope0_[k] + (-2 * t3 + 3 * t2) * kf_[k + 1] +
           (t3 - t2) * h * slope1_[k];
  }

 private:
  Firm firm_;
  std::vector<double> gamma_, strike_, fee_, demand_;
  double boundary_fee_, max_strike_;
  std::vector<double> kp_, kf_, kq_, slope0_, slope1_;
};

inline double schedule_fee(const TabulatedSchedule& s, double p) { return s.fee(p); }

// Fees along an ascending type grid: boundary fee at the anchor end (low end when
// anchor_low) plus the Stieltjes integral of demand against |d strike|. Each cell is split
// into 2^k trapezoids until the cumulative fees move by less than tol.
template <class StrikeFn, class DemandFn>
std::vector<double> tabulate_fees(const std::vector<double>& grid, StrikeFn&& strike, DemandFn&& demand,
                                  double boundary_fee, bool anchor_low, double tol = 1e-8) {
  const size_t n = grid.size();
  auto pass = [&](int m) {
    std::vector<double> cell(n - 1, 0.0);
    for (size_t j = 0; j + 1 < n; ++j) {
      const double a = grid[j], b = grid[j + 1];
      double p0 = strike(a), q0 = demand(a), sum = 0.0;
      for (int i = 1; i <= m; ++i) {
        const double g1 = i == m ? b : a + (b - a) * i / m;
        const double p1 = strike(g1), q1 = demand(g1);
        sum += 0.5 * (q0 + q1) * std::abs(p1 - p0);
        p0 = p1;
        q0 = q1;
      }
      cell[j] = sum;
    }
    std::vector<double> fee(n);
    if (anchor_low) {
      fee[0] = boundary_fee;
      for (size_t j = 1; j < n; ++j) fee[j] = fee[j - 1] + cell[j - 1];
    } else {
      fee[n - 1] = boundary_fee;
      for (size_t j = n - 1; j-- > 0;) fee[j] = fee[j + 1] + cell[j];
    }
    return fee;
  };
  auto prev = pass(1);
  for (int m = 2; m <= (1 << 16); m *= 2) {
    auto next = pass(m);
    double diff = 0.0;
    for (size_t j = 0; j < n; ++j) diff = std::max(diff, std::abs(next[j] - prev[j]));
    prev = std::move(next);
    if (diff < tol) break;
  }
  return prev;
}

}  // namespace screenequil
