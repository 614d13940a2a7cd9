// Tests for the Gaussian-sum potential: point values, truncated support,
// sup-normalization, the exact JSON schema, and the transverse cosine
// coefficients p_m(x) together with their parity structure.
//
// [DERIVED] literals were frozen from an independent Python oracle
// (numpy + leggauss) that replicates the truncated-Gaussian evaluation and
// the per-term y-quadrature, before this suite first ran.

#include "agnr/potential.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

namespace {

using agnr::GaussianTerm;
using agnr::PotentialFourier;
using agnr::PotentialSpec;

TEST(Potential, ReferenceExamplePointValueAndShape) {
    const PotentialSpec p = agnr::reference_example_potential();
    EXPECT_DOUBLE_EQ(p.L, 1.33);
    EXPECT_DOUBLE_EQ(p.delta, 1e-2);
    ASSERT_EQ(p.terms.size(), 3u);
    // [DERIVED] oracle value of the three-bump sum at the central dip's x
    // and the bump line y = 0.67.
    EXPECT_NEAR(p.eval(-0.32, 0.67), 0.047401748659, 1e-9);
    // The x-profile at the bump line: side bumps positive, center negative.
    EXPECT_GT(p.eval(-0.14, 0.67), 0.0);
    EXPECT_GT(p.eval(-0.49, 0.67), 0.0);
    EXPECT_LT(p.eval(-0.32, 0.60), 0.5);  // everything is small in magnitude
    // [DERIVED] grid sup over the truncated support box (801 x 401 nodes).
    EXPECT_NEAR(p.sup_abs(), 0.053504596514, 1e-9);
}

TEST(Potential, SupportHalfwidthAndDeclaredR0) {
    const PotentialSpec p = agnr::reference_example_potential();
    // [DERIVED] max_t |x0_t| + sx_t * sqrt(log(|amp_t| / tol)).
    EXPECT_NEAR(p.support_halfwidth_x(), 5.687579722958, 1e-9);
    // R0 is the support half-width rounded up to the next 0.1.
    EXPECT_NEAR(p.R0, 5.7, 1e-12);
    EXPECT_GE(p.R0, p.support_halfwidth_x());
}

TEST(Potential, TruncationGivesExactCompactSupport) {
    const PotentialSpec p = agnr::reference_example_potential();
    // Outside every per-term box the truncated evaluation is exactly zero.
    EXPECT_EQ(p.eval(10.0, 0.67), 0.0);
    EXPECT_EQ(p.eval(-p.R0 - 0.05, 0.67), 0.0);
    EXPECT_EQ(p.eval(-0.32, 0.67 + 0.2 * 5.3), 0.0);  // beyond every y-radius
    // Just inside the support the value is tiny but nonzero.
    EXPECT_NE(p.eval(-0.32 + 5.0, 0.67), 0.0);
    // term_radius: zero-amplitude terms contribute no box at all.
    EXPECT_EQ(p.term_radius(GaussianTerm{0.0, 0.0, 1.0, 0.0, 1.0}), 0.0);
    const double r1 = p.term_radius(GaussianTerm{1.0, 0.0, 1.0, 0.0, 1.0});
    EXPECT_NEAR(r1, std::sqrt(std::log(1.0 / p.truncation_tol)), 1e-13);
}

TEST(Potential, SupNormalizationFoldsScaleIntoDelta) {
    PotentialSpec p = agnr::reference_example_potential();
    // sup|P| ~ 0.054 <= 1: normalization is a no-op.
    EXPECT_DOUBLE_EQ(p.normalize_sup(), 1.0);
    EXPECT_NEAR(p.eval(-0.32, 0.67), 0.047401748659, 1e-9);
    EXPECT_DOUBLE_EQ(p.delta, 1e-2);

    // Scale amplitudes by 40: sup exceeds 1, so the factor moves into delta.
    // (sup_abs samples a grid over the truncated box, whose extent depends on
    // the amplitudes, so scaled sups agree only to grid resolution.)
    PotentialSpec big = agnr::reference_example_potential();
    for (auto& t : big.terms) t.amp *= 40.0;
    const double sup_before = big.sup_abs();
    EXPECT_NEAR(sup_before, 40.0 * 0.053504596514, 1e-4);
    const double s = big.normalize_sup();
    EXPECT_NEAR(s, sup_before, 1e-12);
    EXPECT_NEAR(big.sup_abs(), 1.0, 1e-5);
    EXPECT_NEAR(big.delta, 1e-2 * sup_before, 1e-14);
    // delta * P is unchanged by the rescaling.
    EXPECT_NEAR(big.delta * big.eval(-0.32, 0.67),
                1e-2 * 40.0 * 0.047401748659, 1e-12);
}

TEST(Potential, JsonSchemaRoundTrip) {
    const PotentialSpec p = agnr::reference_example_potential();
    const nlohmann::json j = p;
    // Exact top-level schema.
    ASSERT_TRUE(j.is_object());
    EXPECT_EQ(j.size(), 4u);
    ASSERT_TRUE(j.contains("L") && j.contains("R0") && j.contains("delta") &&
                j.contains("terms"));
    ASSERT_TRUE(j.at("terms").is_array());
    ASSERT_EQ(j.at("terms").size(), 3u);
    for (const auto& jt : j.at("terms")) {
        EXPECT_EQ(jt.size(), 5u);
        EXPECT_TRUE(jt.contains("amp") && jt.contains("x0") && jt.contains("sx") &&
                    jt.contains("y0") && jt.contains("sy"));
    }
    const auto q = j.get<PotentialSpec>();
    EXPECT_EQ(q.L, p.L);
    EXPECT_EQ(q.R0, p.R0);
    EXPECT_EQ(q.delta, p.delta);
    ASSERT_EQ(q.terms.size(), p.terms.size());
    for (size_t i = 0; i < p.terms.size(); ++i) {
        EXPECT_EQ(q.terms[i].amp, p.terms[i].amp);
        EXPECT_EQ(q.terms[i].x0, p.terms[i].x0);
        EXPECT_EQ(q.terms[i].sx, p.terms[i].sx);
        EXPECT_EQ(q.terms[i].y0, p.terms[i].y0);
        EXPECT_EQ(q.terms[i].sy, p.terms[i].sy);
    }
}

TEST(Potential, FileRoundTripIsByteStable) {
    const PotentialSpec p = agnr::reference_example_potential();
    const auto dir = std::filesystem::temp_directory_path();
    const std::string path1 = (dir / "agnr_pot_rt1.json").string();
    const std::string path2 = (dir / "agnr_pot_rt2.json").string();
    agnr::save_potential(p, path1);
    const PotentialSpec q = agnr::load_potential(path1);
    agnr::save_potential(q, path2);
    std::ifstream f1(path1), f2(path2);
    const std::string s1((std::istreambuf_iterator<char>(f1)),
                         std::istreambuf_iterator<char>());
    const std::string s2((std::istreambuf_iterator<char>(f2)),
                         std::istreambuf_iterator<char>());
    EXPECT_FALSE(s1.empty());
    EXPECT_EQ(s1, s2);  // save(load(save(p))) reproduces the bytes exactly
    std::remove(path1.c_str());
    std::remove(path2.c_str());
}

TEST(Potential, ValidationRejectsBadInputs) {
    EXPECT_THROW(agnr::load_potential("/nonexistent/agnr_missing.json"),
                 agnr::ValidationError);

    PotentialSpec bad = agnr::reference_example_potential();
    bad.terms[0].sx = 0.0;
    EXPECT_THROW(bad.validate(), agnr::ValidationError);
    bad = agnr::reference_example_potential();
    bad.L = -1.0;
    EXPECT_THROW(bad.validate(), agnr::ValidationError);
    bad = agnr::reference_example_potential();
    bad.R0 = 0.0;
    EXPECT_THROW(bad.validate(), agnr::ValidationError);

    // from_json validates too.
    nlohmann::json j = agnr::reference_example_potential();
    j["terms"][1]["sy"] = -0.2;
    EXPECT_THROW(static_cast<void>(j.get<PotentialSpec>()), agnr::ValidationError);
}

TEST(PotentialFourier, FrozenCosineCoefficients) {
    const PotentialSpec p = agnr::reference_example_potential();
    const PotentialFourier pf(p, 8);
    // [DERIVED] oracle GL-128 y-quadrature of (1/L) int P cos(pi m y / L) dy
    // at x = -0.32.
    EXPECT_NEAR(pf.p(0, -0.32), 1.263416430930e-02, 1e-12);
    EXPECT_NEAR(pf.p(1, -0.32), -1.411097232277e-04, 1e-12);
    EXPECT_NEAR(pf.p(2, -0.32), -1.010419625863e-02, 1e-12);
    EXPECT_NEAR(pf.p(3, -0.32), 2.708764491688e-04, 1e-12);
    // Even extension: p_{-m} = p_m exactly.
    EXPECT_EQ(pf.p(-2, -0.32), pf.p(2, -0.32));
    EXPECT_THROW(static_cast<void>(pf.p(9, 0.0)), agnr::ValidationError);
    EXPECT_EQ(pf.max_m(), 8);
}

TEST(PotentialFourier, SymmetrizedPotentialKillsOddCoefficients) {
    const PotentialSpec p = agnr::reference_example_potential_symmetrized();
    for (const auto& t : p.terms) EXPECT_DOUBLE_EQ(t.y0, p.L / 2.0);
    const PotentialFourier pf(p, 9);
    for (const double x : {-0.49, -0.32, -0.14, 0.3}) {
        for (int m = 1; m <= 9; m += 2) {
            EXPECT_LT(std::abs(pf.p(m, x)), 1e-15)
                << "odd coefficient m=" << m << " at x=" << x;
        }
        // Even coefficients survive.
        EXPECT_GT(std::abs(pf.p(0, x)) + std::abs(pf.p(2, x)), 0.0);
    }
}

TEST(PotentialFourier, PartialSumConvergesToThePotential) {
    const PotentialSpec p = agnr::reference_example_potential();
    const PotentialFourier pf24(p, 24);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> ux(-1.5, 1.5), uy(0.0, p.L);
    double worst = 0.0;
    for (int i = 0; i < 12; ++i) {
        const double x = ux(rng), y = uy(rng);
        worst = std::max(worst, std::abs(pf24.partial_sum(x, y) - p.eval(x, y)));
    }
    // [DERIVED] the oracle puts the max truncation error at ~2e-7 for m <= 24.
    EXPECT_LT(worst, 1e-6);

    // Doubling the mode count drives the tail down to the quadrature floor of
    // the GL-128 coefficient integrals (~2e-9 for the fastest cosines).
    const PotentialFourier pf48(p, 48);
    EXPECT_LT(std::abs(pf48.partial_sum(-0.32, 0.4) - p.eval(-0.32, 0.4)), 5e-9);
}

}  // namespace
