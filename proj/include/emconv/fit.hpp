#pragma once

#include <cstdint>
#include <span>


namespace emconv {

  //! exp of the least-squares slope of log(error) against the iteration
  //! index, over the entries strictly above floor. Needs at least 3 such
  //! entries.
  auto fit_geometric_rate(std::span<const double> errors, double floor)
      -> double;

  //! Median of the last window entries.
  auto detect_plateau(std::span<const double> errors, int window = 5)
      -> double;

  //! Smallest T >= log_{1/kappa}((1 - kappa) init_error / deviation),
  //! clamped below at 1.
  auto compute_suggested_T(double kappa, double init_error, double deviation)
      -> std::int64_t;

  //! Least-squares slope of log(errors[t]) against log(t) over
  //! t in [t_begin, t_end] (t >= 1, positive errors only).
  auto fit_loglog_slope(std::span<const double> errors, std::int64_t t_begin,
                        std::int64_t t_end) -> double;

}  // namespace emconv
