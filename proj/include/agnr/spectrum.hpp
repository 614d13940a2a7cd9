#pragma once
/// \file spectrum.hpp
/// \brief Ribbon geometry, transverse quantization, thresholds and
///        near-threshold quantities.
///
/// Admissible transverse wavenumbers are kappa(j) = pi + pi*j/L, j integer
/// (the quasi-periodic phase e^{-i 2 pi L} of the armchair boundary conditions
/// quantizes kappa on that lattice).  The energy thresholds are the sorted
/// distinct values of |kappa(j)|; each threshold corresponds to exactly one j
/// because 2L is required to be non-integer.  Consecutive threshold spacings
/// obey d* <= omega_{k+1} - omega_k <= pi/L with
///     d* = (pi/L) * min_{m in Z, 2L+m != 0} |2L + m|.
///
/// Just below a threshold, omega_eps = omega_N - eps, the longitudinal
/// wavenumber of the threshold branch bifurcates into the imaginary pair
/// lambda_eps = +- i sqrt(eps) sqrt(2 omega_N - eps); the derived unit-modulus
/// ratio d = (lambda_eps + 1)/(lambda_eps - 1) = -e^{i sigma},
/// sigma = 2 atan|lambda_eps|, drives the trapped-mode criterion.

#include <algorithm>
#include <optional>

#include "agnr/common.hpp"

namespace agnr {

/// Strip geometry Pi = (0, L) x R plus the potential support half-width R0.
struct RibbonGeometry {
    double L = 1.0;          ///< ribbon width (dimensionless)
    double R0 = 1.0;         ///< potential support half-width in x
    /// Energy unit: multiply by 2t/sqrt(3) for eV.  Metadata only.
    static constexpr const char* energy_unit_note = "2t/sqrt(3)";

    RibbonGeometry() = default;
    explicit RibbonGeometry(double L_, double R0_ = 1.0) : L(L_), R0(R0_) {
        validate();
    }

    /// Reject unsupported geometry: L <= 0 or 2L integer (degenerate
    /// |kappa(j)| collisions, handled by the theory only parenthetically).
    void validate() const {
        if (!(L > 0.0)) throw ValidationError("geometry: L must be positive");
        const double two_L = 2.0 * L;
        if (std::abs(two_L - std::round(two_L)) < 1e-9)
            throw ValidationError("geometry: 2L must not be an integer (got 2L = " +
                                  std::to_string(two_L) + ")");
        if (!(R0 > 0.0)) throw ValidationError("geometry: R0 must be positive");
    }

    /// kappa(j) = pi + pi*j/L.
    [[nodiscard]] double kappa_of(int j) const noexcept { return PI + PI * j / L; }
};

/// One threshold: omega_k = |kappa_k|, kappa_k = pi + pi*j/L.
struct ThresholdEntry {
    int k = 0;          ///< 1-based threshold index, omega strictly increasing
    double omega = 0.0; ///< threshold energy
    double kappa = 0.0; ///< signed transverse wavenumber
    int j_index = 0;    ///< the unique integer j with kappa = pi + pi*j/L
};

/// Ordered threshold list with the spacing constant d* and the admissible
/// near-threshold window eps0.
struct ThresholdTable {
    std::vector<ThresholdEntry> entries;
    double d_star = 0.0;
    double eps0 = 0.0;  ///< for the last listed threshold; see eps0_for()
};

/// d* = (pi/L) * min_{m in Z, 2L+m != 0} |2L + m|.
[[nodiscard]] inline double d_star(const RibbonGeometry& geom) {
    const double two_L = 2.0 * geom.L;
    const double fr = two_L - std::floor(two_L);
    const double dist = std::min(fr, 1.0 - fr);  // > 0 since 2L non-integer
    return PI / geom.L * dist;
}

namespace detail {

/// Brute-force enumeration of the first `count` thresholds over a j-window
/// guaranteed to cover them.  Also the test oracle.
inline std::vector<ThresholdEntry> enumerate_thresholds(const RibbonGeometry& geom,
                                                        int count) {
    // |kappa(j)| <= omega_max needs |L + j| <= L*omega_max/pi; count
    // thresholds fit below omega_max ~ (count + 2) * pi / min(L,1) safely.
    const int J = count + static_cast<int>(std::ceil(2.0 * geom.L)) + 8;
    std::vector<ThresholdEntry> all;
    all.reserve(2 * J + 1);
    for (int j = -J; j <= J; ++j) {
        const double kap = geom.kappa_of(j);
        all.push_back({0, std::abs(kap), kap, j});
    }
    std::sort(all.begin(), all.end(),
              [](const ThresholdEntry& a, const ThresholdEntry& b) { return a.omega < b.omega; });
    all.resize(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) all[static_cast<size_t>(k)].k = k + 1;
    return all;
}

}  // namespace detail

/// Admissible near-threshold window below omega_N.  The first bound keeps the
/// exponential pair inside the analyticity strip (4 eps0^2 + 4 eps0 d* <= d*^2
/// gives eps0 = (sqrt(2)-1)/2 * d*); the second keeps omega_N - eps above the
/// previous threshold with 10% margin.
[[nodiscard]] inline double eps0_for(const RibbonGeometry& geom,
                                     const std::vector<ThresholdEntry>& entries, int N) {
    if (N < 1 || N > static_cast<int>(entries.size()))
        throw ValidationError("eps0_for: threshold index out of range");
    const double ds = d_star(geom);
    const double omN = entries[static_cast<size_t>(N - 1)].omega;
    const double prev = (N >= 2) ? entries[static_cast<size_t>(N - 2)].omega : 0.0;
    return std::min(0.5 * (std::sqrt(2.0) - 1.0) * ds, 0.9 * (omN - prev));
}

/// First `count` thresholds with d_star and eps0 (for the last threshold).
[[nodiscard]] inline ThresholdTable thresholds(const RibbonGeometry& geom, int count) {
    geom.validate();
    if (count < 1) throw ValidationError("thresholds: count must be >= 1");
    ThresholdTable t;
    t.entries = detail::enumerate_thresholds(geom, count);
    t.d_star = d_star(geom);
    t.eps0 = eps0_for(geom, t.entries, count);
    return t;
}

/// One propagating transverse mode at energy omega.
struct ModeSpec {
    int k = 0;            ///< threshold index (1-based, by increasing |kappa|)
    double kappa = 0.0;   ///< signed transverse wavenumber, |kappa| < omega
    double lambda = 0.0;  ///< longitudinal wavenumber sqrt(omega^2 - kappa^2) > 0
    int j_index = 0;      ///< quantization integer
};

/// All propagating modes at omega (|kappa_k| < omega), ordered by threshold
/// index; M = N - 1 for omega in (omega_{N-1}, omega_N).
[[nodiscard]] inline std::vector<ModeSpec> propagating_modes(const RibbonGeometry& geom,
                                                             double omega) {
    geom.validate();
    if (!(omega > 0.0)) throw ValidationError("propagating_modes: omega must be positive");
    const int guess = static_cast<int>(std::ceil(omega * geom.L / PI)) + 2;
    auto entries = detail::enumerate_thresholds(geom, guess + 2);
    std::vector<ModeSpec> out;
    for (const auto& e : entries) {
        if (std::abs(e.omega - omega) < 1e-12)
            throw ValidationError("propagating_modes: omega collides with a threshold; "
                                  "use the near-threshold path");
        if (e.omega < omega)
            out.push_back({e.k, e.kappa, std::sqrt(omega * omega - e.kappa * e.kappa),
                           e.j_index});
    }
    return out;
}

/// Near-threshold bookkeeping at omega = omega_N - eps.
struct NearThresholdData {
    int N = 0;
    double eps = 0.0;
    double omega_N = 0.0;    ///< the threshold itself
    double kappa_N = 0.0;    ///< signed transverse wavenumber of the threshold
    int j_index = 0;
    double omega_eps = 0.0;  ///< omega_N - eps
    cplx lambda_eps{};       ///< i sqrt(eps) sqrt(2 omega_N - eps)
    cplx d{};                ///< (lambda_eps + 1)/(lambda_eps - 1) = -e^{i sigma}
    double sigma = 0.0;      ///< 2 atan |lambda_eps|, in (0, pi)
    double delta_sin = 0.0;  ///< sin(sigma)
    double cal_N = 0.0;      ///< normalization  𝒩 = 2 sqrt(L / omega_eps)
    double eps0 = 0.0;       ///< admissible window for this N
};

/// Compute the near-threshold data for threshold N at 0 < eps <= eps0.
/// eps == 0 is allowed for limit-form construction (lambda_eps = 0, d = -1).
[[nodiscard]] inline NearThresholdData near_threshold(const RibbonGeometry& geom, int N,
                                                      double eps) {
    geom.validate();
    if (N < 1) throw ValidationError("near_threshold: N must be >= 1");
    auto entries = detail::enumerate_thresholds(geom, N);
    NearThresholdData d;
    d.N = N;
    d.eps = eps;
    d.omega_N = entries[static_cast<size_t>(N - 1)].omega;
    d.kappa_N = entries[static_cast<size_t>(N - 1)].kappa;
    d.j_index = entries[static_cast<size_t>(N - 1)].j_index;
    d.eps0 = eps0_for(geom, entries, N);
    if (eps < 0.0 || eps > d.eps0)
        throw ValidationError("near_threshold: eps = " + std::to_string(eps) +
                              " outside (0, eps0], eps0 = " + std::to_string(d.eps0));
    d.omega_eps = d.omega_N - eps;
    const double t = std::sqrt(eps) * std::sqrt(2.0 * d.omega_N - eps);
    d.lambda_eps = cplx(0.0, t);
    d.d = (eps == 0.0) ? cplx(-1.0, 0.0) : (d.lambda_eps + 1.0) / (d.lambda_eps - 1.0);
    d.sigma = 2.0 * std::atan(t);
    d.delta_sin = std::sin(d.sigma);
    d.cal_N = 2.0 * std::sqrt(geom.L / d.omega_eps);
    return d;
}

/// Analyticity-strip half-width gamma_N: midpoint between Im(lambda_eps) and
/// the decay rate of the first evanescent branch beyond the threshold.
[[nodiscard]] inline double strip_gamma(const RibbonGeometry& geom, int N, double eps) {
    const auto ntd = near_threshold(geom, N, eps);
    auto entries = detail::enumerate_thresholds(geom, N + 1);
    const double om_next = entries[static_cast<size_t>(N)].omega;
    const double rate_next =
        std::sqrt(om_next * om_next - ntd.omega_eps * ntd.omega_eps);
    const double rate_N = ntd.lambda_eps.imag();
    if (!(rate_N < rate_next))
        throw SolverError("strip_gamma: no spectral gap above the threshold pair");
    return 0.5 * (rate_N + rate_next);
}

/// One dispersion sample omega(lambda) = sqrt(kappa_j^2 + lambda^2) on the
/// branch of the k-th threshold.
struct DispersionRow {
    int j_index = 0;
    double kappa_sign = 0.0;
    double lambda = 0.0;
    double omega = 0.0;
};

/// Dispersion table for the first `branches` thresholds over a lambda grid.
[[nodiscard]] inline std::vector<DispersionRow> dispersion_curves(
    const RibbonGeometry& geom, const std::vector<double>& lambda_grid, int branches) {
    auto tab = thresholds(geom, branches);
    std::vector<DispersionRow> rows;
    rows.reserve(tab.entries.size() * lambda_grid.size());
    for (const auto& e : tab.entries)
        for (double lam : lambda_grid)
            rows.push_back({e.j_index, sgn(e.kappa), lam,
                            std::hypot(e.kappa, lam)});
    return rows;
}

}  // namespace agnr
