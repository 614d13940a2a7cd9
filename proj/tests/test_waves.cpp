// Wave-family oracles: each family must satisfy the Dirac system and the
// armchair boundary conditions to near machine precision, reproduce frozen
// point values, and obey the documented eps -> 0 limits.
//
// [DERIVED] literals were computed independently from the closed forms
// (profiles f, g and the quantized kappa lattice) and frozen here.

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "agnr/waves.hpp"

namespace {

using namespace agnr;

constexpr double kL = 1.33;

[[nodiscard]] std::vector<std::pair<double, double>> random_points(int n, double L,
                                                                   unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ux(-3.0, 3.0), uy(0.0, L);
    std::vector<std::pair<double, double>> pts;
    pts.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pts.emplace_back(ux(rng), uy(rng));
    return pts;
}

[[nodiscard]] std::vector<double> random_xs(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ux(-3.0, 3.0);
    std::vector<double> xs;
    xs.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) xs.push_back(ux(rng));
    return xs;
}

/// Every family member constructible in the (N, eps) regime.
[[nodiscard]] std::vector<SpinorField> family_members(const RibbonGeometry& geom, int N,
                                                      double eps) {
    std::vector<SpinorField> out;
    for (int tau : {+1, -1}) {
        if (N >= 2) {
            out.push_back(make_wave(WaveLabel{WaveFamily::oscillatory, 1, tau}, geom, N, eps));
            out.push_back(
                make_wave(WaveLabel{WaveFamily::oscillatory_normalized, 1, tau}, geom, N, eps));
        }
        out.push_back(make_wave(WaveLabel{WaveFamily::near_exp_raw, N, tau}, geom, N, eps));
        out.push_back(make_wave(WaveLabel{WaveFamily::near_exp_normalized, N, tau}, geom, N, eps));
    }
    out.push_back(make_wave(WaveLabel{WaveFamily::threshold0, N, +1}, geom, N, 0.0));
    out.push_back(make_wave(WaveLabel{WaveFamily::threshold1, N, +1}, geom, N, 0.0));
    out.push_back(make_wave(WaveLabel{WaveFamily::near_exp_analytic_plus, N, +1}, geom, N, eps));
    out.push_back(make_wave(WaveLabel{WaveFamily::near_exp_analytic_minus, N, +1}, geom, N, eps));
    return out;
}

TEST(Waves, AllFamiliesSolveDiracAndBCsAcrossRegimes) {
    // Ten regimes spanning widths, threshold numbers and eps values.
    const std::vector<std::tuple<double, int, double>> regimes{
        {1.33, 1, 0.0},  {1.33, 2, 1e-2}, {1.33, 2, 1e-3}, {1.33, 3, 2e-2}, {0.57, 1, 5e-3},
        {2.71, 2, 1e-2}, {2.71, 4, 0.0},  {4.19, 3, 1e-4}, {7.83, 2, 1e-3}, {7.83, 5, 1e-2}};
    unsigned seed = 100;
    for (const auto& [L, N, eps_req] : regimes) {
        const RibbonGeometry geom{L};
        const double eps = std::min(eps_req, 0.5 * near_threshold(geom, N, 0.0).eps0);
        const auto pts = random_points(200, L, seed);
        const auto xs = random_xs(200, seed + 1);
        seed += 2;
        for (const auto& w : family_members(geom, N, eps)) {
            EXPECT_LT(dirac_residual(w, pts), 1e-10)
                << w.label() << " L=" << L << " N=" << N << " eps=" << eps;
            EXPECT_LT(bc_residual(w, xs), 1e-12)
                << w.label() << " L=" << L << " N=" << N << " eps=" << eps;
        }
    }
}

TEST(Waves, Threshold0PointValue) {
    // [DERIVED] w0 = (E+, -i s E+, -i E-, s E-) with s = sgn(kappa_N); at the
    // corner (0,0) both phases are 1.  For L = 1.33, N = 2: kappa_2 < 0, s = -1.
    const RibbonGeometry geom{kL};
    const auto w0 = make_wave(WaveLabel{WaveFamily::threshold0, 2, +1}, geom, 2, 0.0);
    const Spinor v = w0.eval(0.0, 0.0);
    EXPECT_NEAR(std::abs(v[0] - cplx(1.0, 0.0)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(v[1] - cplx(0.0, 1.0)), 0.0, 1e-14);   // -i s = +i
    EXPECT_NEAR(std::abs(v[2] - cplx(0.0, -1.0)), 0.0, 1e-14);  // -i
    EXPECT_NEAR(std::abs(v[3] - cplx(-1.0, 0.0)), 0.0, 1e-14);  // s = -1
}

TEST(Waves, OscillatoryExponentFrozen) {
    // [DERIVED] at omega = 1.57261 the first branch carries
    // lambda_1 = sqrt(omega^2 - omega_1^2) = 1.365830519885.
    const RibbonGeometry geom{kL};
    const auto w = make_wave(WaveLabel{WaveFamily::oscillatory, 1, +1}, geom, 1.57261);
    const cplx ratio = w.eval(1.0, 0.3)[0] / w.eval(0.0, 0.3)[0];
    EXPECT_NEAR(std::arg(ratio), 1.365830519885, 1e-9);
    EXPECT_NEAR(std::abs(ratio), 1.0, 1e-13);
    // tau = -1 runs the other way.
    const auto wm = make_wave(WaveLabel{WaveFamily::oscillatory, 1, -1}, geom, 1.57261);
    EXPECT_NEAR(std::arg(wm.eval(1.0, 0.3)[0] / wm.eval(0.0, 0.3)[0]), -1.365830519885, 1e-9);
}

TEST(Waves, OscillatoryNormalizationAmplitude) {
    // |u(0,0)| of the normalized branch equals sqrt(omega) / (2 sqrt(L lambda)).
    const RibbonGeometry geom{kL};
    const double omega = 1.57261;
    const double lam = 1.365830519885;  // [DERIVED] above
    const auto w =
        make_wave(WaveLabel{WaveFamily::oscillatory_normalized, 1, +1}, geom, omega);
    EXPECT_NEAR(std::abs(w.eval(0.0, 0.0)[0]),
                std::sqrt(omega) / (2.0 * std::sqrt(kL * lam)), 1e-9);
}

TEST(Waves, FiniteDifferenceJetMatchesAnalytic) {
    const RibbonGeometry geom{kL};
    const auto w = make_wave(WaveLabel{WaveFamily::near_exp_normalized, 2, +1}, geom, 2, 1e-2);
    ASSERT_TRUE(w.has_analytic_gradient());
    for (const auto& [x, y] : random_points(25, kL, 7)) {
        const Spinor a = apply_dirac(w, x, y);
        const Spinor b = apply_dirac_fd(w, x, y);
        for (int c = 0; c < 4; ++c) EXPECT_NEAR(std::abs(a[c] - b[c]), 0.0, 1e-8);
    }
}

TEST(Waves, ResidualDetectsCorruption) {
    // A field that is NOT a solution must light up the Dirac residual.
    const RibbonGeometry geom{kL};
    SpinorField bad(geom, 1.57261, "corrupted", [](double x, double y) {
        return Spinor{std::exp(I * 1.57261 * x) * std::cos(y), 0.0, 0.0, 0.0};
    });
    EXPECT_GT(dirac_residual(bad, random_points(50, kL, 9)), 0.1);
}

TEST(Waves, AnalyticFamiliesHaveFirstOrderLimits) {
    // || w^{eps}(x,y) - w^{0}(x,y) || = O(eps): halving eps halves the error.
    const RibbonGeometry geom{kL};
    const auto pts = random_points(40, kL, 11);
    for (WaveFamily fam :
         {WaveFamily::near_exp_analytic_plus, WaveFamily::near_exp_analytic_minus,
          WaveFamily::near_exp_normalized}) {
        const auto w0 = make_wave(WaveLabel{fam, 2, +1}, geom, 2, 0.0);
        auto err = [&](double eps) {
            const auto we = make_wave(WaveLabel{fam, 2, +1}, geom, 2, eps);
            double m = 0.0;
            for (const auto& [x, y] : pts) {
                const Spinor a = we.eval(x, y), b = w0.eval(x, y);
                for (int c = 0; c < 4; ++c) m = std::max(m, std::abs(a[c] - b[c]));
            }
            return m;
        };
        const double e1 = err(2e-3), e2 = err(1e-3);
        EXPECT_GT(e1, 0.0) << to_string(fam);
        const double ratio = e1 / e2;
        EXPECT_GT(ratio, 1.6) << to_string(fam);
        EXPECT_LT(ratio, 2.4) << to_string(fam);
    }
}

TEST(Waves, AnalyticMinusStableAtTinyEps) {
    // The (w^+ - w^-)/(2 lambda) combination must not blow up for eps >= 1e-12.
    const RibbonGeometry geom{kL};
    const auto w0 =
        make_wave(WaveLabel{WaveFamily::near_exp_analytic_minus, 2, +1}, geom, 2, 0.0);
    const auto w =
        make_wave(WaveLabel{WaveFamily::near_exp_analytic_minus, 2, +1}, geom, 2, 1e-12);
    for (const auto& [x, y] : random_points(20, kL, 13)) {
        const Spinor a = w.eval(x, y), b = w0.eval(x, y);
        for (int c = 0; c < 4; ++c) EXPECT_NEAR(std::abs(a[c] - b[c]), 0.0, 1e-5);
    }
}

TEST(Waves, T1IsAnInvolutionAndPreservesSolutions) {
    const RibbonGeometry geom{kL};
    const auto w = make_wave(WaveLabel{WaveFamily::near_exp_normalized, 2, -1}, geom, 2, 1e-2);
    const auto t1 = apply_T1(w);
    const auto t1t1 = apply_T1(t1);
    for (const auto& [x, y] : random_points(30, kL, 17)) {
        const Spinor a = w.eval(x, y), b = t1t1.eval(x, y), c = t1.eval(x, y);
        for (int comp = 0; comp < 4; ++comp) {
            EXPECT_NEAR(std::abs(a[comp] - b[comp]), 0.0, 1e-12);
            // T1 swaps the valleys with conjugation.
            EXPECT_NEAR(std::abs(c[comp] - std::conj(a[(comp + 2) % 4])), 0.0, 1e-12);
        }
    }
    EXPECT_LT(dirac_residual(t1, random_points(100, kL, 19)), 1e-10);
    EXPECT_LT(bc_residual(t1, random_xs(100, 21)), 1e-12);
}

TEST(Waves, NegateOmegaMapsSolutionsAcrossTheSpectrum) {
    const RibbonGeometry geom{kL};
    const auto w = make_wave(WaveLabel{WaveFamily::oscillatory, 1, +1}, geom, 1.57261);
    const auto neg = negate_omega(w);
    EXPECT_NEAR(neg.omega(), -1.57261, 1e-14);
    EXPECT_LT(dirac_residual(neg, random_points(100, kL, 23)), 1e-10);
    EXPECT_LT(bc_residual(neg, random_xs(100, 25)), 1e-12);
}

TEST(Waves, CombineAndModulatePreserveStructure) {
    const RibbonGeometry geom{kL};
    const auto a = make_wave(WaveLabel{WaveFamily::oscillatory, 1, +1}, geom, 1.57261);
    const auto b = make_wave(WaveLabel{WaveFamily::oscillatory, 1, -1}, geom, 1.57261);
    const auto sum = combine({{cplx(0.3, -0.7), a}, {cplx(1.1, 0.2), b}});
    EXPECT_LT(dirac_residual(sum, random_points(100, kL, 27)), 1e-10);
    EXPECT_LT(bc_residual(sum, random_xs(100, 29)), 1e-12);
    // A Gaussian x-envelope breaks the Dirac equation but not the BCs.
    const auto mod = modulate_x(
        sum, [](double x) { return std::exp(-x * x); },
        [](double x) { return -2.0 * x * std::exp(-x * x); });
    EXPECT_LT(bc_residual(mod, random_xs(100, 31)), 1e-12);
    EXPECT_GT(dirac_residual(mod, random_points(50, kL, 33)), 1e-3);
}

TEST(Waves, SeparablePartsReproduceTheField) {
    const RibbonGeometry geom{kL};
    const auto w = make_wave(WaveLabel{WaveFamily::near_exp_normalized, 2, +1}, geom, 2, 1e-2);
    ASSERT_TRUE(w.separable());
    const auto& p = *w.separable();
    for (const auto& [x, y] : random_points(20, kL, 35)) {
        const cplx Ep = std::polar(1.0, p.kappa * y);
        const cplx Em = std::conj(Ep);
        const Spinor v = w.eval(x, y);
        EXPECT_NEAR(std::abs(v[0] - p.f(x) * Ep), 0.0, 1e-13);
        EXPECT_NEAR(std::abs(v[1] - p.g(x) * Ep), 0.0, 1e-13);
        EXPECT_NEAR(std::abs(v[2] - (-I) * p.f(x) * Em), 0.0, 1e-13);
        EXPECT_NEAR(std::abs(v[3] - I * p.g(x) * Em), 0.0, 1e-13);
    }
}

TEST(Waves, MakeWaveRejectsInvalidRequests) {
    const RibbonGeometry geom{kL};
    // Oscillatory below its threshold.
    EXPECT_THROW(
        static_cast<void>(make_wave(WaveLabel{WaveFamily::oscillatory, 2, +1}, geom, 1.0)),
        ValidationError);
    // Threshold family off the threshold energy.
    EXPECT_THROW(
        static_cast<void>(make_wave(WaveLabel{WaveFamily::threshold0, 2, +1}, geom, 1.5)),
        ValidationError);
    // Near-threshold family above the threshold.
    EXPECT_THROW(
        static_cast<void>(make_wave(WaveLabel{WaveFamily::near_exp_raw, 2, +1}, geom, 1.9)),
        ValidationError);
    // Unknown family names are rejected at parse time.
    EXPECT_THROW(static_cast<void>(family_from_string("warp")), ValidationError);
    EXPECT_EQ(family_from_string("threshold1"), WaveFamily::threshold1);
}

}  // namespace
