#pragma once
/// \file trapped.hpp
/// \brief Trapped-mode degeneracy criterion and threshold-window scans.
///
/// Just below threshold N a trapped mode (an L^2 eigenfunction at omega =
/// omega_N - eps embedded in the continuous spectrum of the first N-1
/// channels) exists iff the augmented scattering matrix couples the two
/// exponential channels in a degenerate way:
///     K = S_daggerdagger + d(eps) * Upsilon,   Upsilon = [[0,1],[1,0]],
///     d = (lambda_eps + 1)/(lambda_eps - 1),
/// is singular.  det K = 0 is the exact criterion; numerically we report the
/// smallest singular value of K and flag detection below a tolerance.
///
/// Above the threshold (eps < 0 by sign convention) no augmented block
/// exists; there the scan reports the smallest singular value of the full
/// discretized operator (a kernel would mean a bound state of the truncated
/// problem).  That value has a grid-dependent baseline even for P = 0, so
/// detection above threshold is relative: a row is flagged only when the
/// singular value collapses below detect_tol times the zero-coupling
/// baseline of the same discretization.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <vector>

#include "agnr/solver.hpp"

namespace agnr {

/// Evaluation of the degeneracy criterion at one eps.
struct TrappedCriterion {
    Eigen::Matrix2cd K;
    cplx det{};
    double sigma_min = 0.0;
};

/// K = S_daggerdagger + d * Upsilon from a solved augmented matrix.
[[nodiscard]] inline TrappedCriterion trapped_criterion(const AugmentedScatteringMatrix& S,
                                                        const NearThresholdData& nt) {
    if (S.eps <= 0.0)
        throw ValidationError("trapped_criterion: requires a below-threshold matrix");
    TrappedCriterion tc;
    Eigen::Matrix2cd ups;
    ups << 0.0, 1.0, 1.0, 0.0;
    tc.K = S.exp_block() + nt.d * ups;
    tc.det = tc.K.determinant();
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(tc.K);
    tc.sigma_min = svd.singularValues()(1);
    return tc;
}

/// One row of a threshold-window scan.
struct TrapScanRow {
    double eps = 0.0;       ///< signed offset: omega = omega_N - eps
    double delta = 0.0;     ///< coupling used (fixed to the potential's delta)
    double sigma_min = 0.0; ///< criterion sigma_min below, full-operator sigma_min above
    int detect = 0;
};

/// Scan the trapped-mode criterion over a grid of signed eps values.  The
/// potential's own delta is used throughout.  Rows are computed in parallel
/// (one independent solve each) and returned in grid order.
[[nodiscard]] inline std::vector<TrapScanRow> trap_scan(const PotentialSpec& P,
                                                        const RibbonGeometry& geom, int N,
                                                        const std::vector<double>& eps_grid,
                                                        double detect_tol = 1e-4,
                                                        SolverConfig cfg = {}) {
    for (double e : eps_grid)
        if (e == 0.0)
            throw ValidationError("trap_scan: eps grid may not contain 0 (the threshold "
                                  "itself is not a scattering regime)");
    std::vector<TrapScanRow> rows(eps_grid.size());
    parallel_for(static_cast<int>(eps_grid.size()), [&](int i) {
        const double eps = eps_grid[static_cast<size_t>(i)];
        TrapScanRow row;
        row.eps = eps;
        row.delta = P.delta;
        ScatteringSolver solver(P, geom, N, eps, cfg);
        if (eps > 0.0) {
            const auto S = solver.solve();
            const auto tc = trapped_criterion(S, solver.near_data());
            row.sigma_min = tc.sigma_min;
            row.detect = (row.sigma_min < detect_tol) ? 1 : 0;
        } else {
            row.sigma_min = solver.sigma_min_full();
            PotentialSpec base = P;
            base.delta = 0.0;
            ScatteringSolver reference(base, geom, N, eps, cfg);
            row.detect = (row.sigma_min < detect_tol * reference.sigma_min_full()) ? 1 : 0;
        }
        rows[static_cast<size_t>(i)] = row;
    });
    return rows;
}

/// Number of maximal runs of consecutive detect == 1 rows.
[[nodiscard]] inline int count_dips(const std::vector<TrapScanRow>& rows) {
    int dips = 0;
    bool in_dip = false;
    for (const auto& r : rows) {
        if (r.detect && !in_dip) ++dips;
        in_dip = (r.detect != 0);
    }
    return dips;
}

}  // namespace agnr
