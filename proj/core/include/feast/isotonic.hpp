#pragma once

#include <span>
#include <vector>

namespace feast {

/// Pool-adjacent-violators: the nondecreasing sequence minimizing the sum of
/// squared deviations from `values`. Pooled blocks take their block mean.
std::vector<double> pava_isotonic(std::span<const double> values);

}  // namespace feast
