#pragma once

#include <span>
#include <vector>

namespace mppi_dbas
{

/// Central smoothing kernel of a Savitzky-Golay filter: the weights that evaluate,
/// at the window centre, the least-squares polynomial of degree `order` fitted to
/// `window` equally spaced samples. Requires an odd window larger than the order.
std::vector<double> savitzky_golay_kernel(int window, int order);

/// Applies the central kernel to one channel. Ends are padded by point reflection
/// about the first/last sample (x[-j] = 2 x[0] - x[j]), so constant and linear
/// sequences pass through unchanged.
std::vector<double> savitzky_golay_filter(std::span<const double> values, std::span<const double> kernel);

}  // namespace mppi_dbas
