#include "feast/isotonic.hpp"

namespace feast {

std::vector<double> pava_isotonic(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<double> block_sum(n);
    std::vector<std::size_t> block_len(n);
    std::size_t blocks = 0;

    for (std::size_t i = 0; i < n; ++i) {
        block_sum[blocks] = values[i];
        block_len[blocks] = 1;
        ++blocks;
        // Merge backwards while the last two block means violate monotonicity.
        while (blocks > 1 && block_sum[blocks - 2] * static_cast<double>(block_len[blocks - 1]) >
                                 block_sum[blocks - 1] * static_cast<double>(block_len[blocks - 2])) {
            block_sum[blocks - 2] += block_sum[blocks - 1];
            block_len[blocks - 2] += block_len[blocks - 1];
            --blocks;
        }
    }

    std::vector<double> out;
    out.reserve(n);
    for (std::size_t b = 0; b < blocks; ++b) {
        double mean = block_sum[b] / static_cast<double>(block_len[b]);
        out.insert(out.end(), block_len[b], mean);
    }
    return out;
}

}  // namespace feast
