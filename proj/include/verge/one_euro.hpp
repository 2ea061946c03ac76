#pragma once

#include <cmath>
#include <numbers>
#include <optional>

namespace verge {

struct OneEuroParams {
  double min_cutoff_hz = 1.0;
  double beta = 0.007;
  double d_cutoff_hz = 1.0;
};

// Speed-adaptive first-order low-pass (the 1 euro filter) for one scalar
// channel. Timestamps are in milliseconds and must increase.
class OneEuroFilter {
public:
  OneEuroFilter() = default;
  explicit OneEuroFilter(OneEuroParams params) : params_(params) {}

  double filter(double value, double t_ms) {
    if (!last_t_ms_) {
      last_t_ms_ = t_ms;
      x_hat_ = value;
      dx_hat_ = 0.0;
      return value;
    }
    const double dt_s = (t_ms - *last_t_ms_) / 1000.0;
    last_t_ms_ = t_ms;
    if (!(dt_s > 0.0)) return x_hat_;

    const double dx = (value - x_hat_) / dt_s;
    dx_hat_ += smoothing(params_.d_cutoff_hz, dt_s) * (dx - dx_hat_);
    const double cutoff = params_.min_cutoff_hz + params_.beta * std::abs(dx_hat_);
    x_hat_ += smoothing(cutoff, dt_s) * (value - x_hat_);
    return x_hat_;
  }

  void reset() { last_t_ms_.reset(); }
  bool primed() const { return last_t_ms_.has_value(); }
  const OneEuroParams& params() const { return params_; }

private:
  static double smoothing(double cutoff_hz, double dt_s) {
    if (std::isinf(cutoff_hz)) return 1.0;
    const double tau = 1.0 / (2.0 * std::numbers::pi * cutoff_hz);
    return 1.0 / (1.0 + tau / dt_s);
  }

  OneEuroParams params_;
  std::optional<double> last_t_ms_;
  double x_hat_ = 0.0;
  double dx_hat_ = 0.0;
};

}  // namespace verge
