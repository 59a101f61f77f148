#pragma once

// Exact state-vector evolution of the coined walk with a single-point phase
// defect:
//
//   U = (S_phi ⊗ |H><H| + S_phi^† ⊗ |V><V|) (1 ⊗ C(theta))
//   S_phi |x> = e^{i phi δ(x-n)} |x-1>,   S_phi^† |x> = e^{i phi δ(x-n)} |x+1>
//
// The coin acts first. The defect phase multiplies every amplitude leaving
// site n, for both coin components. The stored window grows by one site on
// each side per step, so it always equals the light cone.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qwalk/core.hpp"
#include "qwalk/distribution.hpp"
#include "qwalk/parallel.hpp"

namespace qwalk {

/// Coin and defect factors for one (theta, phi), computed once and reused.
struct StepKernel {
    CoinMatrix coin;
    std::optional<std::int64_t> defect_site;
    cplx defect_factor{1.0, 0.0};

    StepKernel(const CoinAngle& angle, const std::optional<DefectSpec>& defect) : coin(coin_matrix(angle)) {
        if (defect) {
            defect_site = defect->site();
            defect_factor = defect->factor();
        }
    }
};

namespace detail {

inline void coin_rows(std::vector<PureState::Row>& rows, const CoinMatrix& c) {
    for (auto& r : rows) {
        const cplx h = r[kH], v = r[kV];
        r[kH] = c[0][0] * h + c[0][1] * v;
        r[kV] = c[1][0] * h + c[1][1] * v;
    }
}

// out gets size in.size() + 2 and offset in_offset - 1.
inline void shift_rows(const std::vector<PureState::Row>& in, std::int64_t in_offset, const StepKernel& k,
                       std::vector<PureState::Row>& out) {
    out.assign(in.size() + 2, PureState::Row{});
    for (std::size_t r = 0; r < in.size(); ++r) {
        out[r][kH] = in[r][kH];
        out[r + 2][kV] = in[r][kV];
    }
    if (k.defect_site) {
        const std::int64_t r = *k.defect_site - in_offset;
        if (r >= 0 && r < static_cast<std::int64_t>(in.size())) {
            const auto ur = static_cast<std::size_t>(r);
            out[ur][kH] *= k.defect_factor;
            out[ur + 2][kV] *= k.defect_factor;
        }
    }
}

}  // namespace detail

inline PureState apply_coin(PureState state, const CoinAngle& coin) {
    detail::coin_rows(state.rows(), coin_matrix(coin));
    return state;
}

inline PureState apply_shift(const PureState& state, const std::optional<DefectSpec>& defect) {
    const StepKernel k(CoinAngle::hadamard(), defect);  // coin part unused
    std::vector<PureState::Row> out;
    detail::shift_rows(state.rows(), state.offset(), k, out);
    return PureState(state.offset() - 1, std::move(out));
}

inline PureState step(const PureState& state, const StepKernel& kernel) {
    auto rows = state.rows();
    detail::coin_rows(rows, kernel.coin);
    std::vector<PureState::Row> out;
    detail::shift_rows(rows, state.offset(), kernel, out);
    return PureState(state.offset() - 1, std::move(out));
}

inline PureState step(const PureState& state, const CoinAngle& coin, const std::optional<DefectSpec>& defect) {
    return step(state, StepKernel(coin, defect));
}

inline Distribution position_distribution(const PureState& state) {
    std::vector<double> p(state.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& r = state.rows()[i];
        p[i] = std::norm(r[kH]) + std::norm(r[kV]);
    }
    return Distribution(state.offset(), std::move(p));
}

struct TrajectoryRecord {
    std::int64_t recurrence_site = 0;
    std::vector<Distribution> distributions;  // index = step, 0..steps
    std::vector<double> variances;
    std::vector<double> recurrences;

    const Distribution& final_distribution() const { return distributions.back(); }
    double final_variance() const { return variances.back(); }
    double final_recurrence() const { return recurrences.back(); }
};

/// Runs `steps` steps and also returns the final pure state.
inline PureState evolve_state(const WalkConfig& config, TrajectoryRecord* record = nullptr) {
    config.validate();
    const StepKernel kernel(config.coin, config.defect);
    PureState state = make_initial(config.initial_site, config.initial_coin);

    auto observe = [&](const PureState& s) {
        if (!record) return;
        auto d = position_distribution(s);
        record->variances.push_back(variance(d));
        record->recurrences.push_back(d.at(record->recurrence_site));
        record->distributions.push_back(std::move(d));
    };
    if (record) {
        *record = TrajectoryRecord{};
        record->recurrence_site = config.recurrence_site();
        const auto n = static_cast<std::size_t>(config.steps) + 1;
        record->distributions.reserve(n);
        record->variances.reserve(n);
        record->recurrences.reserve(n);
    }
    observe(state);

    std::vector<PureState::Row> buf;
    for (std::int64_t t = 0; t < config.steps; ++t) {
        detail::coin_rows(state.rows(), kernel.coin);
        detail::shift_rows(state.rows(), state.offset(), kernel, buf);
        state = PureState(state.offset() - 1, std::move(buf));
        buf = {};
        observe(state);
    }
    return state;
}

inline TrajectoryRecord evolve(const WalkConfig& config) {
    TrajectoryRecord rec;
    evolve_state(config, &rec);
    return rec;
}

struct SweepRow {
    double param_deg;
    double variance;
    double recurrence;
};

/// Final variance and recurrence for each defect phase; base.defect fixes the site.
inline std::vector<SweepRow> sweep_phase(const WalkConfig& base, std::span<const double> phases_deg,
                                         std::size_t threads = 1) {
    if (!base.defect) throw config_error("phase sweep needs a defect site");
    if (phases_deg.empty()) throw config_error("empty phase grid");
    base.validate();
    std::vector<SweepRow> out(phases_deg.size());
    detail::parallel_for(out.size(), threads, [&](std::size_t i) {
        WalkConfig cfg = base;
        cfg.defect = DefectSpec(base.defect->site(), phases_deg[i]);
        const auto rec = evolve(cfg);
        out[i] = {phases_deg[i], rec.final_variance(), rec.final_recurrence()};
    });
    return out;
}

inline std::vector<SweepRow> sweep_coin(const WalkConfig& base, std::span<const double> angles_deg,
                                        std::size_t threads = 1) {
    if (angles_deg.empty()) throw config_error("empty coin-angle grid");
    base.validate();
    std::vector<CoinAngle> angles;
    angles.reserve(angles_deg.size());
    for (double a : angles_deg) angles.push_back(CoinAngle::degrees(a));
    std::vector<SweepRow> out(angles.size());
    detail::parallel_for(out.size(), threads, [&](std::size_t i) {
        WalkConfig cfg = base;
        cfg.coin = angles[i];
        const auto rec = evolve(cfg);
        out[i] = {angles_deg[i], rec.final_variance(), rec.final_recurrence()};
    });
    return out;
}

}  // namespace qwalk
