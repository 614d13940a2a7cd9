// Tests for the folded-cylinder scattering solver: identity limits at zero
// coupling, solve diagnostics, exact symmetry structure (unitarity, T1,
// parity-induced zeros), delta-scaling invariance, grid-refinement
// convergence, full-operator singular-value baselines, and failure paths.
//
// [DERIVED] magnitude windows were measured on a standalone build of the
// solver before this suite first ran (e.g. the P = 0 identity defect
// ~1.1e-7 from the 4th-order dispersion phase, sigma_min baselines ~1e-5).

#include "agnr/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace {

using agnr::AugmentedScatteringMatrix;
using agnr::PotentialSpec;
using agnr::RibbonGeometry;
using agnr::ScatteringSolver;
using agnr::SolverConfig;

PotentialSpec zero_potential(double L, double R0) {
    PotentialSpec p;
    p.L = L;
    p.R0 = R0;
    p.delta = 0.0;
    return p;
}

double identity_defect(const Eigen::MatrixXcd& S) {
    return (S - Eigen::MatrixXcd::Identity(S.rows(), S.cols())).cwiseAbs().maxCoeff();
}

TEST(Solver, ZeroPotentialIsIdentityBelowThreshold) {
    const RibbonGeometry geom(1.33, 2.0);
    const PotentialSpec zero = zero_potential(1.33, 2.0);
    const struct {
        int N;
        double eps;
        double tol;  // identity tolerance: the FD dispersion phase error
                     // grows like (lambda h)^4 lambda X with the frequency
    } regimes[] = {{1, 5e-3, 1e-6}, {2, 1e-2, 1e-6}, {3, 1e-2, 2e-5}};
    for (const auto& r : regimes) {
        ScatteringSolver solver(zero, geom, r.N, r.eps);
        ASSERT_TRUE(solver.below_threshold());
        const auto out = solver.solve();
        ASSERT_EQ(out.S.rows(), 2 * r.N);
        EXPECT_EQ(out.N, r.N);
        EXPECT_DOUBLE_EQ(out.eps, r.eps);
        EXPECT_DOUBLE_EQ(out.delta, 0.0);
        // Nothing scatters: S = I up to the finite-difference dispersion
        // phase accumulated by the propagating channels over [-X, X].
        EXPECT_LT(identity_defect(out.S), r.tol) << "N=" << r.N;
        // The exponential pair is matched by exact closures: its block is
        // identity far below the propagating phase error.
        EXPECT_LT(identity_defect(out.exp_block()), 1e-9) << "N=" << r.N;
        EXPECT_LT(out.unitarity_defect, 1e-10);
        EXPECT_LT(out.t1_defect, 1e-10);
        EXPECT_LT(out.extraction_consistency, 1e-6);
        EXPECT_LT(out.solve_residual, 1e-10);
        EXPECT_LT(out.remainder_decay_defect, 1e-9);
        EXPECT_LT(out.suppression_factor, 1e-8);
        // End-section decompositions agree with the extracted S rows and
        // carry no evanescent remainder at zero coupling.
        for (int col = 0; col < 2 * r.N; ++col) {
            const auto& rd = out.right_decomp[static_cast<size_t>(col)];
            const auto& ld = out.left_decomp[static_cast<size_t>(col)];
            EXPECT_LT(rd.remainder_norm, 1e-10);
            EXPECT_LT(ld.remainder_norm, 1e-10);
            for (int k = 1; k <= r.N; ++k) {
                EXPECT_LT(std::abs(rd.coefficients[static_cast<size_t>(k - 1)] -
                                   out.S(AugmentedScatteringMatrix::idx(k, +1), col)),
                          1e-12);
                EXPECT_LT(std::abs(ld.coefficients[static_cast<size_t>(k - 1)] -
                                   out.S(AugmentedScatteringMatrix::idx(k, -1), col)),
                          1e-12);
            }
        }
    }
    // The N = 3 phase error is pure grid dispersion: doubling nx restores
    // the low-frequency accuracy (4th order: a factor ~16).
    SolverConfig fine;
    fine.nx = 2 * 769 - 1;
    ScatteringSolver refined(zero, geom, 3, 1e-2, fine);
    EXPECT_LT(identity_defect(refined.solve().S), 1e-6);
}

TEST(Solver, ZeroPotentialIsIdentityAboveThreshold) {
    const RibbonGeometry geom(1.33, 2.0);
    const PotentialSpec zero = zero_potential(1.33, 2.0);
    const struct {
        int N;
        double eps;
    } regimes[] = {{1, -5e-3}, {2, -1e-2}};
    for (const auto& r : regimes) {
        ScatteringSolver solver(zero, geom, r.N, r.eps);
        EXPECT_FALSE(solver.below_threshold());
        EXPECT_THROW(static_cast<void>(solver.near_data()), agnr::ValidationError);
        const auto out = solver.solve();
        ASSERT_EQ(out.S.rows(), 2 * r.N);  // all channels ordinary propagating
        EXPECT_LT(identity_defect(out.S), 1e-6) << "N=" << r.N;
        EXPECT_LT(out.unitarity_defect, 1e-10);
        EXPECT_LT(out.t1_defect, 1e-10);
    }
}

TEST(Solver, AutoConfigFillsDocumentedDefaults) {
    const RibbonGeometry geom(1.33, 2.0);
    const PotentialSpec P = agnr::reference_example_potential();  // support ~5.69
    ScatteringSolver solver(P, RibbonGeometry(1.33, P.R0), 2, 1e-2);
    const auto& cfg = solver.config();
    EXPECT_EQ(cfg.J_modes, 2 + 8);
    EXPECT_NEAR(cfg.X, P.R0 + 4.0, 1e-12);
    EXPECT_EQ(cfg.nx, 2 * static_cast<int>(std::ceil(64.0 * cfg.X)) + 1);
    EXPECT_EQ(cfg.nx % 2, 1);
    static_cast<void>(geom);
}

TEST(Solver, PaperPotentialDiagnosticsAndStructure) {
    const PotentialSpec P = agnr::reference_example_potential();
    const RibbonGeometry geom(1.33, P.R0);
    const auto out = agnr::solve_scattering(P, geom, 2, 1e-2);
    EXPECT_LT(out.unitarity_defect, 1e-10);
    EXPECT_LT(out.t1_defect, 1e-10);
    EXPECT_LT(out.extraction_consistency, 1e-7);
    EXPECT_LT(out.solve_residual, 1e-10);
    EXPECT_LT(out.remainder_decay_defect, 0.5);
    // The potential scatters at the delta * s1 scale without leaving the
    // perturbative window.
    const double dev = identity_defect(out.S);
    EXPECT_GT(dev, 1e-4);
    EXPECT_LT(dev, 1e-2);
    double offdiag = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            if (a != b) offdiag = std::max(offdiag, std::abs(out.S(a, b)));
    EXPECT_GT(offdiag, 1e-6);
    EXPECT_LT(out.S.cwiseAbs().maxCoeff(), 1.0 + 1e-9);
}

TEST(Solver, RepeatedSolveReusesTheFactorization) {
    const PotentialSpec P = agnr::reference_example_potential();
    const RibbonGeometry geom(1.33, P.R0);
    ScatteringSolver solver(P, geom, 2, 1e-2);
    const auto a = solver.solve();
    const auto b = solver.solve();
    EXPECT_LT((a.S - b.S).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Solver, DeltaScalingInvariance) {
    // delta * P is the physical coupling: halving delta while doubling the
    // amplitudes reproduces the same scattering matrix (up to the tiny
    // amplitude dependence of the truncation boxes).
    PotentialSpec P1 = agnr::reference_example_potential();
    PotentialSpec P2 = P1;
    P2.delta = P1.delta / 2.0;
    for (auto& t : P2.terms) t.amp *= 2.0;
    const RibbonGeometry geom(1.33, P1.R0);
    const auto S1 = agnr::solve_scattering(P1, geom, 2, 1e-2);
    const auto S2 = agnr::solve_scattering(P2, geom, 2, 1e-2);
    EXPECT_LT((S1.S - S2.S).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_DOUBLE_EQ(S2.delta, P1.delta / 2.0);
}

TEST(Solver, MidlineSymmetricPotentialDecouplesParities) {
    // At L = 1.33 the first two thresholds sit on j = -1 (odd) and j = -2
    // (even).  A potential symmetric about y = L/2 has p_m = 0 for odd m, so
    // opposite-parity channels cannot couple: the k=1 <-> k=2 blocks vanish.
    const PotentialSpec sym = agnr::reference_example_potential_symmetrized();
    const RibbonGeometry geom(1.33, sym.R0);
    const auto out = agnr::solve_scattering(sym, geom, 2, 1e-2);
    double cross = 0.0;
    for (int a : {0, 1})
        for (int b : {2, 3})
            cross = std::max({cross, std::abs(out.S(a, b)), std::abs(out.S(b, a))});
    EXPECT_LT(cross, 1e-10);
    EXPECT_LT(out.unitarity_defect, 1e-10);

    // The unsymmetrized example does couple the parities.
    const PotentialSpec asym = agnr::reference_example_potential();
    const auto out2 = agnr::solve_scattering(asym, RibbonGeometry(1.33, asym.R0), 2, 1e-2);
    double cross2 = 0.0;
    for (int a : {0, 1})
        for (int b : {2, 3})
            cross2 = std::max({cross2, std::abs(out2.S(a, b)), std::abs(out2.S(b, a))});
    EXPECT_GT(cross2, 1e-7);
}

TEST(Solver, GridRefinementConvergence) {
    PotentialSpec P;
    P.L = 1.33;
    P.delta = 1e-2;
    P.terms = {{0.8, 0.2, 0.5, 0.7, 0.25}, {-0.5, -0.3, 0.4, 0.5, 0.3}};
    P.R0 = std::ceil(P.support_halfwidth_x() * 10.0) / 10.0;
    const RibbonGeometry geom(1.33, P.R0);
    // [DERIVED] measured defect ~1.2e-7, dominated by the coarse grid's
    // propagating-phase error.
    EXPECT_LT(agnr::grid_convergence_defect(P, geom, 2, 1e-2), 1e-6);
}

TEST(Solver, SigmaMinFullHasNoSpuriousKernel) {
    // The zero-coupling operator has no trapped mode, so the smallest
    // singular value of the (row-equilibrated) global system sits at a
    // grid-set baseline well above machine zero.  These baselines justify
    // the relative detection rule used by trap_scan above threshold.
    const RibbonGeometry geom(1.33, 2.0);
    const PotentialSpec zero = zero_potential(1.33, 2.0);
    ScatteringSolver below(zero, geom, 2, 1e-2);
    const double sb = below.sigma_min_full();
    EXPECT_GT(sb, 1e-6);
    EXPECT_LT(sb, 1e-3);
    ScatteringSolver above(zero, geom, 2, -1e-2);
    const double sa = above.sigma_min_full();
    EXPECT_GT(sa, 1e-6);
    EXPECT_LT(sa, 1e-3);
    // A small real potential perturbs the baseline but cannot collapse it.
    const PotentialSpec P = agnr::reference_example_potential();
    ScatteringSolver pert(P, RibbonGeometry(1.33, P.R0), 2, 1e-3);
    const double sp = pert.sigma_min_full();
    EXPECT_GT(sp, 1e-7);
    EXPECT_LT(sp, 1e-3);
}

TEST(Solver, ReconstructUnfoldsTheSolution) {
    const PotentialSpec P = agnr::reference_example_potential();
    const RibbonGeometry geom(1.33, P.R0);
    ScatteringSolver solver(P, geom, 2, 1e-2);
    EXPECT_THROW(static_cast<void>(solver.reconstruct(0)), agnr::SolverError);
    static_cast<void>(solver.solve());
    const auto w = solver.reconstruct(0);
    // The boundary conditions hold exactly per folded mode.
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> ux(-8.0, 8.0);
    std::vector<double> xs;
    for (int i = 0; i < 24; ++i) xs.push_back(ux(rng));
    EXPECT_LT(agnr::bc_residual(w, xs), 1e-10);
    // Outside the potential support the continuum equation is satisfied up
    // to the piecewise-linear interpolation error in x (~h^2).
    std::vector<std::pair<double, double>> pts;
    std::uniform_real_distribution<double> ufar(7.0, 9.0), uy(0.05, 1.28);
    for (int i = 0; i < 24; ++i) pts.emplace_back(ufar(rng), uy(rng));
    EXPECT_LT(agnr::dirac_residual(w, pts), 1e-2);
    // The transmitted wave is present.
    EXPECT_GT(std::abs(w.eval(8.0, 0.7)[0]), 1e-3);
}

TEST(Solver, ValidationAndErrorPaths) {
    const RibbonGeometry geom(1.33, 2.0);
    const PotentialSpec zero = zero_potential(1.33, 2.0);
    EXPECT_THROW(ScatteringSolver(zero, geom, 2, 0.0), agnr::ValidationError);
    EXPECT_THROW(ScatteringSolver(zero, geom, 0, 1e-2), agnr::ValidationError);
    EXPECT_THROW(ScatteringSolver(zero_potential(1.0, 2.0), geom, 2, 1e-2),
                 agnr::ValidationError);
    // eps beyond the admissible window on either side.
    EXPECT_THROW(ScatteringSolver(zero, geom, 2, 0.5), agnr::ValidationError);
    EXPECT_THROW(ScatteringSolver(zero, geom, 2, -1.0), agnr::ValidationError);
    // Config constraints.
    SolverConfig cfg;
    cfg.J_modes = 5;  // < N + 4
    EXPECT_THROW(ScatteringSolver(zero, geom, 2, 1e-2, cfg), agnr::ValidationError);
    cfg = SolverConfig{};
    cfg.X = 1.0;  // inside the declared support
    EXPECT_THROW(ScatteringSolver(zero, geom, 2, 1e-2, cfg), agnr::ValidationError);
    cfg = SolverConfig{};
    cfg.X = 2.4;  // positive margin, but far too thin for margin_decay
    EXPECT_THROW(ScatteringSolver(zero, geom, 2, 1e-2, cfg), agnr::ValidationError);
}

}  // namespace
