#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qwalk/core.hpp"

namespace qwalk {

/// Normalized position probabilities on the window [offset, offset + size).
class Distribution {
public:
    static constexpr double kSumTol = 1e-10;

    Distribution() : offset_(0), probs_{1.0} {}

    Distribution(std::int64_t offset, std::vector<double> probs) : offset_(offset), probs_(std::move(probs)) {
        if (probs_.empty()) throw config_error("distribution needs at least one site");
        double sum = 0.0;
        for (double& p : probs_) {
            if (!(p >= -1e-12)) throw config_error("distribution entries must be nonnegative");
            if (p < 0.0) p = 0.0;
            sum += p;
        }
        if (!(std::abs(sum - 1.0) <= kSumTol))
            throw config_error("distribution must sum to 1 (got " + std::to_string(sum) + ")");
    }

    std::int64_t offset() const noexcept { return offset_; }
    std::size_t size() const noexcept { return probs_.size(); }
    std::int64_t first_site() const noexcept { return offset_; }
    std::int64_t last_site() const noexcept { return offset_ + static_cast<std::int64_t>(probs_.size()) - 1; }
    const std::vector<double>& probs() const noexcept { return probs_; }

    double at(std::int64_t x) const noexcept {
        if (x < first_site() || x > last_site()) return 0.0;
        return probs_[static_cast<std::size_t>(x - offset_)];
    }

    double mean() const noexcept {
        double m = 0.0;
        for (std::size_t i = 0; i < probs_.size(); ++i) m += probs_[i] * static_cast<double>(offset_ + static_cast<std::int64_t>(i));
        return m;
    }

    /// Site with the largest probability; lowest site wins ties.
    std::int64_t argmax() const noexcept {
        const auto it = std::max_element(probs_.begin(), probs_.end());
        return offset_ + static_cast<std::int64_t>(it - probs_.begin());
    }

private:
    std::int64_t offset_;
    std::vector<double> probs_;
};

/// Second central moment <x^2> - <x>^2, evaluated in centered form.
inline double variance(const Distribution& dist) {
    const double m = dist.mean();
    double v = 0.0;
    const auto& p = dist.probs();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = static_cast<double>(dist.offset() + static_cast<std::int64_t>(i)) - m;
        v += p[i] * d * d;
    }
    return v;
}

/// Total-variation distance 1/2 sum |a(x) - b(x)| over the union of both windows.
inline double tv_distance(const Distribution& a, const Distribution& b) {
    const std::int64_t lo = std::min(a.first_site(), b.first_site());
    const std::int64_t hi = std::max(a.last_site(), b.last_site());
    double d = 0.0;
    for (std::int64_t x = lo; x <= hi; ++x) d += std::abs(a.at(x) - b.at(x));
    return std::min(1.0, 0.5 * d);
}

}  // namespace qwalk
