#include "mppi_dbas/savitzky_golay.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>

namespace mppi_dbas
{

std::vector<double> savitzky_golay_kernel(int window, int order)
{
  if (window < 1 || window % 2 == 0 || order < 0 || order >= window) {
    throw std::invalid_argument("Savitzky-Golay window must be odd and larger than the order");
  }
  const int half = window / 2;
  Eigen::MatrixXd vandermonde(window, order + 1);
  for (int i = -half; i <= half; ++i) {
    double power = 1.0;
    for (int j = 0; j <= order; ++j) {
      vandermonde(i + half, j) = power;
      power *= i;
    }
  }
  // Row 0 of the pseudo-inverse gives the fitted constant term, i.e. the value at offset 0.
  const Eigen::MatrixXd pinv =
    vandermonde.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(window, window));
  std::vector<double> kernel(static_cast<std::size_t>(window));
  for (int i = 0; i < window; ++i) {
    kernel[static_cast<std::size_t>(i)] = pinv(0, i);
  }
  return kernel;
}

std::vector<double> savitzky_golay_filter(std::span<const double> values, std::span<const double> kernel)
{
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  if (n == 0 || half == 0 || half >= n) {
    return {values.begin(), values.end()};
  }
  auto sample = [&](std::ptrdiff_t i) {
      if (i < 0) {
        return 2.0 * values[0] - values[static_cast<std::size_t>(-i)];
      }
      if (i >= n) {
        return 2.0 * values[static_cast<std::size_t>(n - 1)] -
               values[static_cast<std::size_t>(2 * (n - 1) - i)];
      }
      return values[static_cast<std::size_t>(i)];
    };

  std::vector<double> out(values.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t j = -half; j <= half; ++j) {
      acc += kernel[static_cast<std::size_t>(j + half)] * sample(i + j);
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

}  // namespace mppi_dbas
