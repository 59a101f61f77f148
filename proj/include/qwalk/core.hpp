#pragma once

// Domain types for the coined walk on the line: coin angles, phase defects,
// coin and walker+coin states, and run configurations.
//
// Angles are degrees at every external boundary. Coin index 0 is |H> (moves
// to x-1), index 1 is |V> (moves to x+1).

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qwalk {

using cplx = std::complex<double>;

inline constexpr std::size_t kH = 0;
inline constexpr std::size_t kV = 1;

/// Invalid configuration or arguments (CLI exit code 2).
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Internal numerical consistency failure (CLI exit code 3).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

inline double deg_to_rad(double deg) { return deg * (std::numbers::pi / 180.0); }

/// Half-wave-plate angle of the coin, in degrees, within [0, 45].
class CoinAngle {
public:
    static CoinAngle degrees(double theta_deg) {
        if (!std::isfinite(theta_deg) || theta_deg < 0.0 || theta_deg > 45.0)
            throw config_error("coin angle must lie in [0, 45] degrees, got " +
                               std::to_string(theta_deg));
        return CoinAngle(theta_deg);
    }
    static CoinAngle hadamard() { return CoinAngle(22.5); }

    double deg() const noexcept { return deg_; }
    double rad() const noexcept { return deg_to_rad(deg_); }
    /// 0 and 45 degrees make the walk deterministic transport.
    bool degenerate() const noexcept { return deg_ == 0.0 || deg_ == 45.0; }

    friend bool operator==(const CoinAngle&, const CoinAngle&) = default;

private:
    explicit CoinAngle(double d) : deg_(d) {}
    double deg_;
};

/// Single-point phase defect: amplitudes departing `site` pick up e^{i phase}.
class DefectSpec {
public:
    DefectSpec(std::int64_t site, double phase_deg) : site_(site) {
        if (!std::isfinite(phase_deg)) throw config_error("defect phase must be finite");
        double p = std::fmod(phase_deg, 360.0);
        if (p < 0.0) p += 360.0;
        if (p >= 360.0) p = 0.0;
        phase_deg_ = p;
    }

    std::int64_t site() const noexcept { return site_; }
    double phase_deg() const noexcept { return phase_deg_; }
    double phase_rad() const noexcept { return deg_to_rad(phase_deg_); }
    cplx factor() const {
        if (phase_deg_ == 0.0) return {1.0, 0.0};
        return std::polar(1.0, phase_rad());
    }

    friend bool operator==(const DefectSpec&, const DefectSpec&) = default;

private:
    std::int64_t site_;
    double phase_deg_;
};

/// Normalized polarization (coin) state a_H |H> + a_V |V>.
class CoinState {
public:
    static constexpr double kNormTol = 1e-12;

    CoinState(cplx amp_h, cplx amp_v) : h_(amp_h), v_(amp_v) {
        const double n = std::norm(h_) + std::norm(v_);
        if (!(std::abs(n - 1.0) <= kNormTol))
            throw config_error("coin state must be normalized (|a_H|^2+|a_V|^2 = " +
                               std::to_string(n) + ")");
    }
    /// Normalizes arbitrary nonzero amplitudes.
    static CoinState normalized(cplx amp_h, cplx amp_v) {
        const double n = std::sqrt(std::norm(amp_h) + std::norm(amp_v));
        if (!(n > 0.0) || !std::isfinite(n)) throw config_error("coin amplitudes are zero or not finite");
        const cplx a = amp_h / n, b = amp_v / n;
        // re-normalize once more so the strict check cannot trip on rounding
        const double m = std::sqrt(std::norm(a) + std::norm(b));
        return CoinState(a / m, b / m);
    }

    static CoinState h() { return CoinState({1.0, 0.0}, {0.0, 0.0}); }
    static CoinState v() { return CoinState({0.0, 0.0}, {1.0, 0.0}); }
    /// (|H> - i|V>)/sqrt2, the experiment's antisymmetric input.
    static CoinState antisymmetric() {
        const double r = std::numbers::sqrt2 / 2.0;
        return CoinState({r, 0.0}, {0.0, -r});
    }
    /// (|H> - |V>)/sqrt2, used for the localized-overlap analysis.
    static CoinState minus() {
        const double r = std::numbers::sqrt2 / 2.0;
        return CoinState({r, 0.0}, {-r, 0.0});
    }

    cplx amp_h() const noexcept { return h_; }
    cplx amp_v() const noexcept { return v_; }
    cplx operator[](std::size_t c) const noexcept { return c == kH ? h_ : v_; }

private:
    cplx h_, v_;
};

/// Resolves the CLI/JSON names of the supported initial coin states.
inline CoinState named_coin_state(const std::string& name) {
    if (name == "antisym") return CoinState::antisymmetric();
    if (name == "minus") return CoinState::minus();
    if (name == "h" || name == "H") return CoinState::h();
    if (name == "v" || name == "V") return CoinState::v();
    throw config_error("unknown initial state '" + name + "' (expected antisym, minus, h, v)");
}

/// Real 2x2 coin [[cos2t, sin2t], [sin2t, -cos2t]], row-major, indexed [out][in].
using CoinMatrix = std::array<std::array<double, 2>, 2>;

inline CoinMatrix coin_matrix(const CoinAngle& coin) {
    // exact at the quarter-turn angles
    double c, s;
    const double two_theta = 2.0 * coin.deg();
    if (two_theta == 0.0) {
        c = 1.0; s = 0.0;
    } else if (two_theta == 90.0) {
        c = 0.0; s = 1.0;
    } else if (two_theta == 45.0) {
        c = s = std::numbers::sqrt2 / 2.0;
    } else {
        c = std::cos(deg_to_rad(two_theta));
        s = std::sin(deg_to_rad(two_theta));
    }
    return {{{c, s}, {s, -c}}};
}

/// Walker+coin amplitudes on a contiguous window of sites.
///
/// Row r holds the amplitudes of site offset()+r, column kH/kV the coin.
class PureState {
public:
    using Row = std::array<cplx, 2>;

    PureState() = default;
    PureState(std::int64_t offset, std::vector<Row> rows) : offset_(offset), rows_(std::move(rows)) {}

    std::int64_t offset() const noexcept { return offset_; }
    std::size_t size() const noexcept { return rows_.size(); }
    std::int64_t first_site() const noexcept { return offset_; }
    std::int64_t last_site() const noexcept { return offset_ + static_cast<std::int64_t>(rows_.size()) - 1; }

    const std::vector<Row>& rows() const noexcept { return rows_; }
    std::vector<Row>& rows() noexcept { return rows_; }

    bool contains(std::int64_t x) const noexcept { return x >= first_site() && x <= last_site(); }
    /// Zero outside the stored window.
    cplx amp(std::int64_t x, std::size_t c) const noexcept {
        return contains(x) ? rows_[static_cast<std::size_t>(x - offset_)][c] : cplx{};
    }

    double norm_squared() const noexcept {
        double n = 0.0;
        for (const auto& r : rows_) n += std::norm(r[kH]) + std::norm(r[kV]);
        return n;
    }

private:
    std::int64_t offset_ = 0;
    std::vector<Row> rows_;
};

inline PureState make_initial(std::int64_t site, const CoinState& coin) {
    return PureState(site, {PureState::Row{coin.amp_h(), coin.amp_v()}});
}

inline constexpr std::int64_t kDefaultMaxSteps = 10000;

struct WalkConfig {
    std::int64_t steps = 0;
    CoinAngle coin = CoinAngle::hadamard();
    std::optional<DefectSpec> defect;
    std::int64_t initial_site = 0;
    CoinState initial_coin = CoinState::antisymmetric();
    std::int64_t max_steps = kDefaultMaxSteps;

    /// Set when the coin sits at a degenerate endpoint (0 or 45 degrees).
    bool coin_warning() const noexcept { return coin.degenerate(); }

    void validate() const {
        if (steps < 0) throw config_error("steps must be nonnegative");
        if (steps > max_steps)
            throw config_error("step budget exceeded: " + std::to_string(steps) + " > " +
                               std::to_string(max_steps));
    }

    /// Site whose occupation is tracked as the recurrence probability.
    std::int64_t recurrence_site() const noexcept { return defect ? defect->site() : initial_site; }
};

}  // namespace qwalk
