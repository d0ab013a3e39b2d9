#include "lowmach/rate_fit.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace lowmach {

namespace {

struct Line {
  double slope, intercept;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y, std::size_t skip) {
  double sx = 0, sy = 0, m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i == skip) continue;
    sx += x[i];
    sy += y[i];
    m += 1;
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i == skip) continue;
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate: degenerate x range");
  const double b = sxy / sxx;
  return {b, my - b * mx};
}

}  // namespace

RateFit fit_rate(const std::vector<double>& xs, const std::vector<double>& ys, FitAxes axes) {
  if (xs.size() != ys.size()) throw std::invalid_argument("fit_rate: x and y lengths differ");
  if (xs.size() < 4) throw std::invalid_argument("fit_rate: at least 4 samples required");
  const bool lx = axes == FitAxes::log_x || axes == FitAxes::log_log;
  const bool ly = axes == FitAxes::log_y || axes == FitAxes::log_log;
  std::vector<double> x(xs.size()), y(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if ((lx && !(xs[i] > 0.0)) || (ly && !(ys[i] > 0.0)))
      throw std::invalid_argument("fit_rate: nonpositive sample under log");
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw std::invalid_argument("fit_rate: non-finite sample");
    x[i] = lx ? std::log(xs[i]) : xs[i];
    y[i] = ly ? std::log(ys[i]) : ys[i];
  }
  const std::size_t none = x.size();
  const Line full = least_squares(x, y, none);
  RateFit f;
  f.slope = full.slope;
  f.intercept = full.intercept;
  f.n_points = static_cast<int>(x.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (full.slope * x[i] + full.intercept);
    ss += r * r;
  }
  f.residual_rms = std::sqrt(ss / x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    f.slope_ci_halfwidth = std::max(f.slope_ci_halfwidth, std::abs(least_squares(x, y, i).slope - full.slope));
  return f;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& samples, FitAxes axes) {
  std::vector<double> x, y;
  for (const auto& [a, b] : samples) {
    x.push_back(a);
    y.push_back(b);
  }
  return fit_rate(x, y, axes);
}

RateFit degenerate_fit(int n_points) {
  RateFit f;
  f.degenerate = true;
  f.n_points = n_points;
  return f;
}

std::string rate_fit_json(const RateFit& f) {
  nlohmann::json j;
  if (f.degenerate) {
    j["degenerate"] = true;
    j["n_points"] = f.n_points;
    return j.dump();
  }
  j = {{"slope", f.slope},
       {"intercept", f.intercept},
       {"residual_rms", f.residual_rms},
       {"slope_ci", f.slope_ci_halfwidth},
       {"n_points", f.n_points}};
  return j.dump();
}

}  // namespace lowmach
