#pragma once

#include <string>
#include <utility>
#include <vector>

namespace lowmach {

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  double slope_ci_halfwidth = 0.0;  // max deviation of leave-one-out slopes
  int n_points = 0;
  bool degenerate = false;  // no fit possible (e.g. identically zero data)
};

enum class FitAxes { linear, log_x, log_y, log_log };

// Least squares y = slope x + intercept in the requested coordinates.
// Requires >= 4 samples; throws std::invalid_argument on nonpositive values
// under a log or a degenerate x range.
RateFit fit_rate(const std::vector<std::pair<double, double>>& samples, FitAxes axes = FitAxes::log_log);
RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y, FitAxes axes = FitAxes::log_log);

// Degenerate record for data that admit no fit.
RateFit degenerate_fit(int n_points);

std::string rate_fit_json(const RateFit& f);

}  // namespace lowmach
