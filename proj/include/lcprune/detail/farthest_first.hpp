#pragma once

#include <limits>
#include <vector>

namespace lcprune {

template <typename Distance>
std::vector<std::size_t> farthest_first(std::size_t n, std::size_t count, std::size_t initial, Distance&& dist) {
    std::vector<std::size_t> picked;
    if (count == 0) return picked;
    picked.reserve(count);
    std::vector<double> gap(n, std::numeric_limits<double>::infinity());
    std::vector<bool> taken(n, false);
    std::size_t next = initial;
    while (true) {
        picked.push_back(next);
        taken[next] = true;
        if (picked.size() == count) break;
        std::size_t best = n;
        double best_gap = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            gap[i] = std::min(gap[i], dist(next, i));
            if (gap[i] > best_gap) {
                best_gap = gap[i];
                best = i;
            }
        }
        next = best;
    }
    return picked;
}

}  // namespace lcprune
