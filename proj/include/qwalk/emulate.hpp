#pragma once

// Emulation of the photon-counting measurement:
//  - imperfect per-step interference modeled as a coin-dephasing channel
//      rho -> (1+v)/2 rho + (1-v)/2 Zc rho Zc,   Zc = 1 ⊗ diag(1, -1)
//    applied after every unitary step, which scales H/V coherences by v;
//  - one multinomial draw of N counts per step, repeated for Monte Carlo
//    error bars.
//
// RNG: std::mt19937_64 (fully specified by the standard) seeded per
// (seed, step, rep) through SplitMix64; uniforms from the top 53 bits;
// categorical draws through a Vose alias table.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "qwalk/core.hpp"
#include "qwalk/distribution.hpp"
#include "qwalk/parallel.hpp"
#include "qwalk/walk.hpp"

namespace qwalk {

inline constexpr const char* kRngAlgorithm =
    "mt19937_64; per-(seed,step,rep) seed = splitmix64 chain; u = (x>>11)*2^-53; Vose alias multinomial";

struct EmulationConfig {
    WalkConfig walk;
    std::int64_t counts_per_step = 18000;  // ~300 coincidences/s over 60 s
    std::int64_t mc_reps = 1000;
    double visibility = 0.998;
    std::uint64_t rng_seed = 0;

    void validate() const {
        walk.validate();
        if (counts_per_step < 1) throw config_error("counts per step must be positive");
        if (mc_reps < 1) throw config_error("Monte Carlo repetitions must be positive");
        if (!(visibility >= 0.0 && visibility <= 1.0)) throw config_error("visibility must lie in [0, 1]");
    }
};

/// Mixed walker+coin state; rho is indexed like PureState rows: 2*(x-offset)+coin.
struct DensityState {
    std::int64_t offset = 0;
    Eigen::MatrixXcd rho;

    std::size_t num_sites() const noexcept { return static_cast<std::size_t>(rho.rows() / 2); }
    double trace() const { return rho.trace().real(); }

    static DensityState from_pure(const PureState& s) {
        Eigen::VectorXcd v(2 * static_cast<Eigen::Index>(s.size()));
        for (std::size_t r = 0; r < s.size(); ++r) {
            v(2 * static_cast<Eigen::Index>(r)) = s.rows()[r][kH];
            v(2 * static_cast<Eigen::Index>(r) + 1) = s.rows()[r][kV];
        }
        return {s.offset(), v * v.adjoint()};
    }

    Distribution position_distribution() const {
        std::vector<double> p(num_sites());
        for (std::size_t r = 0; r < p.size(); ++r) {
            const auto i = 2 * static_cast<Eigen::Index>(r);
            p[r] = rho(i, i).real() + rho(i + 1, i + 1).real();
        }
        return Distribution(offset, std::move(p));
    }
};

namespace detail {

// Window step operator: maps 2r amplitudes at offset o to 2(r+2) at offset o-1.
inline Eigen::MatrixXcd window_step_matrix(std::size_t rows, std::int64_t offset, const StepKernel& k) {
    const auto in_dim = 2 * static_cast<Eigen::Index>(rows);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(in_dim + 4, in_dim);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::int64_t x = offset + static_cast<std::int64_t>(r);
        const cplx f = (k.defect_site && *k.defect_site == x) ? k.defect_factor : cplx{1.0, 0.0};
        const auto out_h = 2 * static_cast<Eigen::Index>(r);        // site x-1, row r of new window
        const auto out_v = 2 * static_cast<Eigen::Index>(r + 2) + 1;  // site x+1
        for (std::size_t in = 0; in < 2; ++in) {
            const auto col = 2 * static_cast<Eigen::Index>(r) + static_cast<Eigen::Index>(in);
            m(out_h, col) = k.coin[kH][in] * f;
            m(out_v, col) = k.coin[kV][in] * f;
        }
    }
    return m;
}

inline void dephase_coin(Eigen::MatrixXcd& rho, double v) {
    if (v == 1.0) return;
    for (Eigen::Index j = 0; j < rho.cols(); ++j)
        for (Eigen::Index i = 0; i < rho.rows(); ++i)
            if ((i & 1) != (j & 1)) rho(i, j) *= v;
}

}  // namespace detail

/// Density-matrix trajectory (step 0..steps) under unitary step + coin dephasing.
inline std::vector<DensityState> evolve_density(const WalkConfig& walk, double visibility) {
    walk.validate();
    if (!(visibility >= 0.0 && visibility <= 1.0)) throw config_error("visibility must lie in [0, 1]");
    const StepKernel kernel(walk.coin, walk.defect);
    std::vector<DensityState> out;
    out.reserve(static_cast<std::size_t>(walk.steps) + 1);
    out.push_back(DensityState::from_pure(make_initial(walk.initial_site, walk.initial_coin)));
    for (std::int64_t t = 0; t < walk.steps; ++t) {
        const DensityState& cur = out.back();
        const Eigen::MatrixXcd m = detail::window_step_matrix(cur.num_sites(), cur.offset, kernel);
        DensityState next{cur.offset - 1, m * cur.rho * m.adjoint()};
        detail::dephase_coin(next.rho, visibility);
        const double drift = std::abs(next.trace() - 1.0);
        if (drift > 1e-8) throw numerical_error("density trace drifted by " + std::to_string(drift), drift);
        out.push_back(std::move(next));
    }
    return out;
}

/// Per-step position distributions with visibility v; v == 1 uses the pure-state engine.
inline std::vector<Distribution> evolve_with_visibility(const EmulationConfig& config) {
    config.validate();
    if (config.visibility == 1.0) return evolve(config.walk).distributions;
    std::vector<Distribution> out;
    for (const auto& d : evolve_density(config.walk, config.visibility)) out.push_back(d.position_distribution());
    return out;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream seed for Monte Carlo repetition `rep` of step `step`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t step, std::uint64_t rep) {
    return splitmix64(splitmix64(splitmix64(seed) ^ step) ^ rep);
}

inline double uniform53(std::mt19937_64& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

/// Vose alias table over the nonzero entries of a probability vector.
class AliasTable {
public:
    explicit AliasTable(const std::vector<double>& probs) {
        for (std::size_t i = 0; i < probs.size(); ++i)
            if (probs[i] > 0.0) index_.push_back(i);
        if (index_.empty()) throw config_error("cannot sample from an all-zero distribution");
        const std::size_t k = index_.size();
        double total = 0.0;
        for (auto i : index_) total += probs[i];
        prob_.assign(k, 0.0);
        alias_.assign(k, 0);
        std::vector<double> scaled(k);
        std::vector<std::size_t> small, large;
        for (std::size_t j = 0; j < k; ++j) {
            scaled[j] = probs[index_[j]] / total * static_cast<double>(k);
            (scaled[j] < 1.0 ? small : large).push_back(j);
        }
        while (!small.empty() && !large.empty()) {
            const std::size_t s = small.back(), l = large.back();
            small.pop_back();
            large.pop_back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            (scaled[l] < 1.0 ? small : large).push_back(l);
        }
        for (auto l : large) prob_[l] = 1.0;
        for (auto s : small) prob_[s] = 1.0;
    }

    /// Index into the original probability vector.
    std::size_t draw(std::mt19937_64& eng) const {
        const auto col = static_cast<std::size_t>(
            (static_cast<unsigned __int128>(eng()) * static_cast<unsigned __int128>(prob_.size())) >> 64);
        const std::size_t j = uniform53(eng) < prob_[col] ? col : alias_[col];
        return index_[j];
    }

private:
    std::vector<std::size_t> index_;
    std::vector<double> prob_;
    std::vector<std::size_t> alias_;
};

/// One multinomial draw of n counts over the distribution's window.
inline std::vector<std::int64_t> sample_counts(const Distribution& dist, std::int64_t n, std::uint64_t seed) {
    if (n < 1) throw config_error("sample size must be positive");
    const AliasTable table(dist.probs());
    std::mt19937_64 eng(seed);
    std::vector<std::int64_t> counts(dist.size(), 0);
    for (std::int64_t i = 0; i < n; ++i) ++counts[table.draw(eng)];
    return counts;
}

inline Distribution counts_to_distribution(std::int64_t offset, const std::vector<std::int64_t>& counts) {
    std::int64_t total = 0;
    for (auto c : counts) total += c;
    if (total <= 0) throw config_error("no counts");
    std::vector<double> p(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return Distribution(offset, std::move(p));
}

struct StepEstimate {
    std::int64_t offset = 0;
    std::vector<std::int64_t> counts;  // repetition 0: the emulated measurement
    std::vector<double> p_exact;       // distribution that was sampled
    std::vector<double> p_mean, p_std;
    double variance_exact = 0.0, variance_mean = 0.0, variance_std = 0.0;
    double recurrence_exact = 0.0, recurrence_mean = 0.0, recurrence_std = 0.0;
    double tv_mean = 0.0, tv_std = 0.0;  // sampled vs p_exact
    double tv_p95 = 0.0;                  // at least 95% of repetitions lie at or below
};

struct CountTable {
    std::int64_t counts_per_step = 0;
    std::int64_t mc_reps = 0;
    std::uint64_t seed = 0;
    std::string rng_algorithm = kRngAlgorithm;
    std::int64_t recurrence_site = 0;
    /// False when mc_reps == 1; all *_std fields are NaN then.
    bool std_available = false;
    std::vector<StepEstimate> steps;
};

namespace detail {

// Welford accumulator.
struct RunningStat {
    double mean_ = 0.0, m2 = 0.0;
    std::int64_t n = 0;
    void add(double x) {
        ++n;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n);
        m2 += d * (x - mean_);
    }
    double mean() const { return mean_; }
    double stddev() const {
        if (n < 2) return std::numeric_limits<double>::quiet_NaN();
        return std::sqrt(m2 / static_cast<double>(n - 1));
    }
};

}  // namespace detail

inline CountTable estimate_with_errors(const EmulationConfig& config, std::size_t threads = 1) {
    config.validate();
    const auto dists = evolve_with_visibility(config);

    CountTable table;
    table.counts_per_step = config.counts_per_step;
    table.mc_reps = config.mc_reps;
    table.seed = config.rng_seed;
    table.recurrence_site = config.walk.recurrence_site();
    table.std_available = config.mc_reps > 1;
    table.steps.resize(dists.size());

    detail::parallel_for(dists.size(), threads, [&](std::size_t s) {
        const Distribution& exact = dists[s];
        StepEstimate est;
        est.offset = exact.offset();
        est.p_exact = exact.probs();
        est.variance_exact = variance(exact);
        est.recurrence_exact = exact.at(table.recurrence_site);

        const AliasTable alias(exact.probs());
        std::vector<detail::RunningStat> site_stats(exact.size());
        detail::RunningStat var_stat, rec_stat, tv_stat;
        std::vector<std::int64_t> counts(exact.size());
        std::vector<double> tvs;
        tvs.reserve(static_cast<std::size_t>(config.mc_reps));
        for (std::int64_t rep = 0; rep < config.mc_reps; ++rep) {
            std::mt19937_64 eng(derive_seed(config.rng_seed, s, static_cast<std::uint64_t>(rep)));
            std::fill(counts.begin(), counts.end(), 0);
            for (std::int64_t i = 0; i < config.counts_per_step; ++i) ++counts[alias.draw(eng)];
            if (rep == 0) est.counts = counts;
            const Distribution sampled = counts_to_distribution(exact.offset(), counts);
            for (std::size_t i = 0; i < counts.size(); ++i) site_stats[i].add(sampled.probs()[i]);
            var_stat.add(variance(sampled));
            rec_stat.add(sampled.at(table.recurrence_site));
            tvs.push_back(tv_distance(sampled, exact));
            tv_stat.add(tvs.back());
        }
        for (const auto& st : site_stats) {
            est.p_mean.push_back(st.mean());
            est.p_std.push_back(st.stddev());
        }
        est.variance_mean = var_stat.mean();
        est.variance_std = var_stat.stddev();
        est.recurrence_mean = rec_stat.mean();
        est.recurrence_std = rec_stat.stddev();
        est.tv_mean = tv_stat.mean();
        est.tv_std = tv_stat.stddev();
        const auto k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(tvs.size()))) - 1;
        std::nth_element(tvs.begin(), tvs.begin() + static_cast<std::ptrdiff_t>(k), tvs.end());
        est.tv_p95 = tvs[k];
        table.steps[s] = std::move(est);
    });
    return table;
}

}  // namespace qwalk
