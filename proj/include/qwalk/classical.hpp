#pragma once

// Classical baselines: the biased random walk on the line and the diabatic
// transition probability of the coin.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "qwalk/core.hpp"
#include "qwalk/distribution.hpp"

namespace qwalk {

struct RWSpec {
    std::int64_t steps = 0;
    double bias = 0.5;  // probability of a step to x+1

    void validate() const {
        if (steps < 0) throw config_error("random-walk steps must be nonnegative");
        if (!(bias >= 0.0 && bias <= 1.0)) throw config_error("random-walk bias must lie in [0, 1]");
    }
};

/// Exact dynamic program over probabilities; support is [-steps, steps] from x=0.
inline Distribution rw_distribution(const RWSpec& spec) {
    spec.validate();
    const auto t = static_cast<std::size_t>(spec.steps);
    std::vector<double> p(2 * t + 1, 0.0), next(2 * t + 1, 0.0);
    p[t] = 1.0;
    const double right = spec.bias, left = 1.0 - spec.bias;
    for (std::size_t s = 0; s < t; ++s) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] == 0.0) continue;
            next[i - 1] += left * p[i];
            next[i + 1] += right * p[i];
        }
        p.swap(next);
    }
    return Distribution(-spec.steps, std::move(p));
}

/// D = cos^2(2 theta).
inline double diabatic_probability(const CoinAngle& coin) {
    const double c = coin_matrix(coin)[0][0];
    return c * c;
}

}  // namespace qwalk
