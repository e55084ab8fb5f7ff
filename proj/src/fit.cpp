#include <emconv/core.hpp>
#include <emconv/fit.hpp>

#include <algorithm>
#include <cmath>
#include <vector>


namespace emconv {

  namespace {

    auto least_squares_slope(const std::vector<double>& x,
                             const std::vector<double>& y) -> double
    {
      const auto n = double(x.size());
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < x.size(); ++i)
      {
        mx += x[i];
        my += y[i];
      }
      mx /= n;
      my /= n;
      double sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < x.size(); ++i)
      {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
      }
      return sxy / sxx;
    }

  }  // namespace

  auto fit_geometric_rate(std::span<const double> errors, double floor)
      -> double
  {
    auto t = std::vector<double>{};
    auto log_e = std::vector<double>{};
    for (std::size_t i = 0; i < errors.size(); ++i)
      if (errors[i] > floor)
      {
        t.push_back(double(i));
        log_e.push_back(std::log(errors[i]));
      }
    if (t.size() < 3)
      throw TooFewPoints{"fit_geometric_rate: fewer than 3 points above floor"};
    return std::exp(least_squares_slope(t, log_e));
  }

  auto detect_plateau(std::span<const double> errors, int window) -> double
  {
    if (window < 1 || errors.size() < std::size_t(window))
      throw TooFewPoints{"detect_plateau: series shorter than window"};
    auto tail = std::vector<double>(errors.end() - window, errors.end());
    std::sort(tail.begin(), tail.end());
    const auto mid = tail.size() / 2;
    return tail.size() % 2 == 1 ? tail[mid] : 0.5 * (tail[mid - 1] + tail[mid]);
  }

  auto compute_suggested_T(double kappa, double init_error, double deviation)
      -> std::int64_t
  {
    if (!(kappa > 0 && kappa < 1))
      throw Error{"compute_suggested_T: kappa must lie in (0, 1)"};
    const auto arg = (1 - kappa) * init_error / deviation;
    if (!(arg > 1))
      return 1;
    const auto t = std::log(arg) / std::log(1 / kappa);
    // Guard against log rounding turning an exact integer into n + tiny.
    const auto rounded = std::round(t);
    const auto ceil_t =
        std::abs(t - rounded) <= 1e-12 * std::max(1.0, rounded) ? rounded
                                                                : std::ceil(t);
    return std::max<std::int64_t>(1, std::int64_t(ceil_t));
  }

  auto fit_loglog_slope(std::span<const double> errors, std::int64_t t_begin,
                        std::int64_t t_end) -> double
  {
    auto lt = std::vector<double>{};
    auto le = std::vector<double>{};
    const auto last = std::min<std::int64_t>(t_end,
                                             std::int64_t(errors.size()) - 1);
    for (auto t = std::max<std::int64_t>(1, t_begin); t <= last; ++t)
      if (errors[t] > 0)
      {
        lt.push_back(std::log(double(t)));
        le.push_back(std::log(errors[t]));
      }
    if (lt.size() < 3)
      throw TooFewPoints{"fit_loglog_slope: fewer than 3 points in range"};
    return least_squares_slope(lt, le);
  }

}  // namespace emconv
