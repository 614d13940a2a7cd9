#pragma once
/// \file quadrature.hpp
/// \brief Gauss-Legendre rules and small integration helpers.
///
/// All cross-section integrals in the q-form / biorthogonality machinery are
/// trigonometric polynomials of low order in y, so a single 128-node rule is
/// spectrally exact for them; 2-D overlap integrals use tensorized panels.

#include <functional>
#include <map>
#include <mutex>

#include "agnr/common.hpp"

namespace agnr {

/// A quadrature rule on the reference interval [-1, 1].
struct QuadRule {
    std::vector<double> x;  ///< nodes
    std::vector<double> w;  ///< weights
};

namespace detail {

/// Build the n-point Gauss-Legendre rule by Newton iteration on P_n.
/// Standard textbook construction; accurate to ~1e-15 for n <= 1024.
inline QuadRule build_gauss_legendre(int n) {
    QuadRule r;
    r.x.resize(n);
    r.w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Chebyshev-based initial guess for the i-th positive root.
        double z = std::cos(PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k + 1.0) * z * p1 - k * p2) / (k + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        r.w[n - 1 - i] = r.w[i];
    }
    return r;
}

}  // namespace detail

/// Cached n-point Gauss-Legendre rule on [-1, 1].
[[nodiscard]] inline const QuadRule& gauss_legendre(int n) {
    static std::map<int, QuadRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, detail::build_gauss_legendre(n)).first;
    return it->second;
}

/// Integrate f over [a, b] with one n-point Gauss-Legendre rule.
template <class F>
[[nodiscard]] auto integrate(F&& f, double a, double b, int n) {
    const QuadRule& q = gauss_legendre(n);
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    using R = decltype(f(a));
    R acc{};
    for (int i = 0; i < n; ++i) acc += static_cast<R>(q.w[i] * h) * f(c + h * q.x[i]);
    return acc;
}

/// Integrate f over [a, b] split into `panels` equal panels of n nodes each.
template <class F>
[[nodiscard]] auto integrate_panels(F&& f, double a, double b, int n, int panels) {
    using R = decltype(f(a));
    R acc{};
    const double hp = (b - a) / panels;
    for (int p = 0; p < panels; ++p) acc += integrate(f, a + p * hp, a + (p + 1) * hp, n);
    return acc;
}

}  // namespace agnr
