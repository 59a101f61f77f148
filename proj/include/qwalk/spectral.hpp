#pragma once

// Spectral analysis of the one-step unitary on a finite periodic lattice:
// eigendecomposition, classification of eigenvectors localized at the defect,
// and the projection weight of an initial state onto the localized subspace.
//
// Lattice sites are x = -h..h with h = (L-1)/2; vector index 2*(x+h) + coin.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qwalk/core.hpp"
#include "qwalk/parallel.hpp"

namespace qwalk {

struct LatticeSpec {
    static constexpr std::int64_t kDefaultSites = 129;
    static constexpr std::int64_t kMinAnalysisSites = 33;

    std::int64_t num_sites = kDefaultSites;
    CoinAngle coin = CoinAngle::hadamard();
    DefectSpec defect{0, 0.0};

    std::int64_t half_width() const noexcept { return (num_sites - 1) / 2; }
    std::int64_t dim() const noexcept { return 2 * num_sites; }
    bool contains(std::int64_t x) const noexcept { return x >= -half_width() && x <= half_width(); }
    Eigen::Index index(std::int64_t x, std::size_t c) const noexcept {
        return static_cast<Eigen::Index>(2 * (x + half_width()) + static_cast<std::int64_t>(c));
    }
    /// Sites between x and the periodic seam.
    std::int64_t seam_distance(std::int64_t x) const noexcept { return half_width() - (x < 0 ? -x : x); }
    /// Minimal-image distance on the ring.
    std::int64_t ring_distance(std::int64_t a, std::int64_t b) const noexcept {
        std::int64_t d = a - b;
        if (d < 0) d = -d;
        d %= num_sites;
        return std::min(d, num_sites - d);
    }

    void validate() const {
        if (num_sites < 3 || num_sites % 2 == 0)
            throw config_error("lattice size must be an odd integer >= 3");
        if (!contains(defect.site())) throw config_error("defect site lies outside the lattice");
    }
};

inline Eigen::MatrixXcd build_step_unitary(const LatticeSpec& spec) {
    spec.validate();
    const CoinMatrix c = coin_matrix(spec.coin);
    const cplx phase = spec.defect.factor();
    const std::int64_t h = spec.half_width();
    auto wrap = [&](std::int64_t x) {
        if (x < -h) return x + spec.num_sites;
        if (x > h) return x - spec.num_sites;
        return x;
    };
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(spec.dim(), spec.dim());
    for (std::int64_t x = -h; x <= h; ++x) {
        const cplx f = (x == spec.defect.site()) ? phase : cplx{1.0, 0.0};
        for (std::size_t in = 0; in < 2; ++in) {
            const auto col = spec.index(x, in);
            u(spec.index(wrap(x - 1), kH), col) += c[kH][in] * f;
            u(spec.index(wrap(x + 1), kV), col) += c[kV][in] * f;
        }
    }
    return u;
}

/// Places a walker+coin state on the lattice; throws if any stored site is off-lattice.
inline Eigen::VectorXcd lattice_vector(const LatticeSpec& spec, const PureState& state) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(spec.dim());
    for (std::int64_t x = state.first_site(); x <= state.last_site(); ++x) {
        const cplx a = state.amp(x, kH), b = state.amp(x, kV);
        if (a == cplx{} && b == cplx{}) continue;
        if (!spec.contains(x)) throw config_error("state support leaves the lattice at x=" + std::to_string(x));
        v(spec.index(x, kH)) = a;
        v(spec.index(x, kV)) = b;
    }
    return v;
}

struct Eigenbasis {
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd eigenvectors;  // orthonormal columns
    double max_residual = 0.0;
};

/// Full eigendecomposition of a unitary matrix through its complex Schur form.
/// For a normal matrix the triangular factor is diagonal and the Schur vectors
/// form an orthonormal eigenbasis, including inside degenerate eigenspaces.
inline Eigenbasis eigendecompose(const Eigen::MatrixXcd& u, double tol = 1e-8) {
    if (u.rows() != u.cols()) throw config_error("eigendecompose needs a square matrix");
    const Eigen::Index n = u.rows();
    const double unitarity = (u.adjoint() * u - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (!(unitarity <= tol)) throw config_error("matrix is not unitary within tolerance");

    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(u);
    if (schur.info() != Eigen::Success) throw numerical_error("Schur iteration did not converge");

    Eigenbasis out;
    out.eigenvalues = schur.matrixT().diagonal();
    out.eigenvectors = schur.matrixU();
    for (Eigen::Index k = 0; k < n; ++k) {
        const double r = (u * out.eigenvectors.col(k) - out.eigenvalues(k) * out.eigenvectors.col(k)).norm();
        out.max_residual = std::max(out.max_residual, r);
    }
    if (!(out.max_residual <= tol))
        throw numerical_error("eigenpair residual " + std::to_string(out.max_residual) + " exceeds tolerance",
                              out.max_residual);
    return out;
}

/// Position-marginal probability within `radius` sites (ring distance) of `center`.
inline double mass_near(const LatticeSpec& spec, const Eigen::Ref<const Eigen::VectorXcd>& vec, std::int64_t center,
                        std::int64_t radius) {
    double m = 0.0;
    const std::int64_t h = spec.half_width();
    for (std::int64_t x = -h; x <= h; ++x) {
        if (spec.ring_distance(x, center) > radius) continue;
        m += std::norm(vec(spec.index(x, kH))) + std::norm(vec(spec.index(x, kV)));
    }
    return m;
}

/// Inverse participation ratio of the position marginal. Diagnostic only.
inline double participation_ipr(const LatticeSpec& spec, const Eigen::Ref<const Eigen::VectorXcd>& vec) {
    double s = 0.0;
    const std::int64_t h = spec.half_width();
    for (std::int64_t x = -h; x <= h; ++x) {
        const double p = std::norm(vec(spec.index(x, kH))) + std::norm(vec(spec.index(x, kV)));
        s += p * p;
    }
    return s;
}

struct ClassifyOptions {
    std::int64_t radius = 10;
    double mass_threshold = 0.99;
    /// Masses this close to the threshold mark the classification as marginal.
    double margin = 0.005;
};

inline bool classify_localized(const LatticeSpec& spec, const Eigen::Ref<const Eigen::VectorXcd>& vec,
                               std::int64_t defect_site, std::int64_t radius = 10, double mass_threshold = 0.99) {
    return mass_near(spec, vec, defect_site, radius) >= mass_threshold;
}

struct SpectralReport {
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd eigenvectors;
    std::vector<double> near_defect_mass;
    std::vector<double> ipr;
    std::vector<bool> localized_flags;
    std::size_t localized_count = 0;
    double overlap = 0.0;
    double max_residual = 0.0;
    /// Two localized eigenvalues coincide within 1e-10.
    bool degenerate_localized = false;
    /// Some eigenvector mass lies within ClassifyOptions::margin of the threshold.
    bool near_threshold = false;
    /// phi sits on 45 or 135 degrees, where the count is not pinned down.
    bool boundary_phase = false;
};

inline void check_analysis_guard(const LatticeSpec& spec, const PureState& initial) {
    if (spec.num_sites < LatticeSpec::kMinAnalysisSites)
        throw config_error("spectral analysis needs at least " + std::to_string(LatticeSpec::kMinAnalysisSites) +
                           " sites");
    const std::int64_t guard = spec.num_sites / 4;
    for (std::int64_t x = initial.first_site(); x <= initial.last_site(); ++x) {
        if (initial.amp(x, kH) == cplx{} && initial.amp(x, kV) == cplx{}) continue;
        if (!spec.contains(x) || spec.seam_distance(x) < guard)
            throw config_error("initial state must sit at least L/4 sites from the periodic seam");
    }
}

inline SpectralReport analyze(const LatticeSpec& spec, const PureState& initial, const ClassifyOptions& opts = {}) {
    check_analysis_guard(spec, initial);
    const auto basis = eigendecompose(build_step_unitary(spec));
    const Eigen::VectorXcd psi = lattice_vector(spec, initial);
    const Eigen::VectorXcd coeffs = basis.eigenvectors.adjoint() * psi;

    SpectralReport rep;
    rep.eigenvalues = basis.eigenvalues;
    rep.eigenvectors = basis.eigenvectors;
    rep.max_residual = basis.max_residual;
    const auto n = static_cast<std::size_t>(basis.eigenvalues.size());
    rep.near_defect_mass.resize(n);
    rep.ipr.resize(n);
    rep.localized_flags.resize(n);
    std::vector<cplx> localized_values;
    for (std::size_t k = 0; k < n; ++k) {
        const auto col = basis.eigenvectors.col(static_cast<Eigen::Index>(k));
        const double m = mass_near(spec, col, spec.defect.site(), opts.radius);
        rep.near_defect_mass[k] = m;
        rep.ipr[k] = participation_ipr(spec, col);
        rep.localized_flags[k] = m >= opts.mass_threshold;
        if (std::abs(m - opts.mass_threshold) < opts.margin) rep.near_threshold = true;
        if (rep.localized_flags[k]) {
            ++rep.localized_count;
            rep.overlap += std::norm(coeffs(static_cast<Eigen::Index>(k)));
            localized_values.push_back(basis.eigenvalues(static_cast<Eigen::Index>(k)));
        }
    }
    rep.overlap = std::clamp(rep.overlap, 0.0, 1.0);
    for (std::size_t i = 0; i < localized_values.size(); ++i)
        for (std::size_t j = i + 1; j < localized_values.size(); ++j)
            if (std::abs(localized_values[i] - localized_values[j]) < 1e-10) rep.degenerate_localized = true;
    const double phi = spec.defect.phase_deg();
    rep.boundary_phase = std::abs(phi - 45.0) < 1e-9 || std::abs(phi - 135.0) < 1e-9;
    return rep;
}

/// Projection weight of `initial` onto the localized eigenvectors.
inline double overlap(const LatticeSpec& spec, const PureState& initial, const ClassifyOptions& opts = {}) {
    return analyze(spec, initial, opts).overlap;
}

struct OverlapRow {
    double param_deg;
    double overlap;
    std::size_t localized_count;
    bool near_threshold;
};

inline std::vector<OverlapRow> sweep_overlap_phase(const LatticeSpec& base, std::span<const double> phases_deg,
                                                   const PureState& initial, const ClassifyOptions& opts = {},
                                                   std::size_t threads = 1) {
    if (phases_deg.empty()) throw config_error("empty phase grid");
    std::vector<OverlapRow> out(phases_deg.size());
    detail::parallel_for(out.size(), threads, [&](std::size_t i) {
        LatticeSpec spec = base;
        spec.defect = DefectSpec(base.defect.site(), phases_deg[i]);
        const auto rep = analyze(spec, initial, opts);
        out[i] = {phases_deg[i], rep.overlap, rep.localized_count, rep.near_threshold};
    });
    return out;
}

inline std::vector<OverlapRow> sweep_overlap_coin(const LatticeSpec& base, std::span<const double> angles_deg,
                                                  const PureState& initial, const ClassifyOptions& opts = {},
                                                  std::size_t threads = 1) {
    if (angles_deg.empty()) throw config_error("empty coin-angle grid");
    std::vector<CoinAngle> angles;
    for (double a : angles_deg) angles.push_back(CoinAngle::degrees(a));
    std::vector<OverlapRow> out(angles.size());
    detail::parallel_for(out.size(), threads, [&](std::size_t i) {
        LatticeSpec spec = base;
        spec.coin = angles[i];
        const auto rep = analyze(spec, initial, opts);
        out[i] = {angles_deg[i], rep.overlap, rep.localized_count, rep.near_threshold};
    });
    return out;
}

}  // namespace qwalk
