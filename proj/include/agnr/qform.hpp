#pragma once
/// \file qform.hpp
/// \brief The cross-section symplectic q-form, the two-sided form Q_R,
///        smooth cutoff waves, and the energy-flux classification.
///
/// For two spinor fields w, w~ the section form is
///   q_a(w, w~) = -i  int_0^L [ v conj(u~) + u conj(v~)
///                             - v' conj(u~') - u' conj(v~') ](a, y) dy.
/// It is sesquilinear (linear in the first slot), anti-Hermitian,
/// and independent of the section a whenever both arguments solve the
/// homogeneous Dirac problem.  On the q-normalized basis:
///   q(**w**_j^tau, **w**_k^theta) = tau i delta_jk delta_tautheta,
/// which also classifies energy transport: flux(w) = -i |omega|^2 q(w, w)
/// is +|omega|^2 for rightward movers and 0 for threshold standing waves.
///
/// The two-sided form Q_R(w, w~) = q_R - q_{-R} applied to the smoothly cut
/// incoming/outgoing sets
///   W_k^+ = chi_+ **w**_k^+,  W_k^- = chi_- **w**_k^-,
///   V_k^- = chi_+ **w**_k^-,  V_k^+ = chi_- **w**_k^+
/// reproduces Q(W,W) = +i I, Q(V,V) = -i I, Q(W,V) = 0: the projection
/// machinery behind scattering-coefficient extraction.

#include "agnr/quadrature.hpp"
#include "agnr/waves.hpp"

namespace agnr {

/// One evaluation of the section form.
struct QFormResult {
    cplx value{};
    double section_x = 0.0;
    int quadrature_points = 0;
};

/// Gauss-Legendre evaluation of q_a(w, w~); n_quad nodes across [0, L].
[[nodiscard]] inline QFormResult qform(const SpinorField& w, const SpinorField& wt, double a,
                                       int n_quad = 128) {
    const double L = w.geom().L;
    const auto& rule = gauss_legendre(n_quad);
    cplx acc = 0.0;
    for (size_t i = 0; i < rule.x.size(); ++i) {
        const double y = 0.5 * L * (rule.x[i] + 1.0);
        const Spinor a1 = w.eval(a, y);
        const Spinor a2 = wt.eval(a, y);
        acc += 0.5 * L * rule.w[i] *
               (a1[1] * std::conj(a2[0]) + a1[0] * std::conj(a2[1]) -
                a1[3] * std::conj(a2[2]) - a1[2] * std::conj(a2[3]));
    }
    return {-I * acc, a, n_quad};
}

/// max |q_a - q_b| over all section pairs; vanishes for homogeneous-problem
/// solutions (conservation identity) and is reported, not asserted, otherwise.
[[nodiscard]] inline double q_section_independence(const SpinorField& w, const SpinorField& wt,
                                                   const std::vector<double>& sections,
                                                   int n_quad = 128) {
    double dev = 0.0;
    std::vector<cplx> vals;
    vals.reserve(sections.size());
    for (double a : sections) vals.push_back(qform(w, wt, a, n_quad).value);
    for (size_t i = 0; i < vals.size(); ++i)
        for (size_t j = i + 1; j < vals.size(); ++j)
            dev = std::max(dev, std::abs(vals[i] - vals[j]));
    return dev;
}

/// Two-sided form Q_R(w, w~) = q_R(w, w~) - q_{-R}(w, w~).
[[nodiscard]] inline cplx QR(const SpinorField& w, const SpinorField& wt, double R,
                             int n_quad = 128) {
    return qform(w, wt, R, n_quad).value - qform(w, wt, -R, n_quad).value;
}

/// Energy flux -i |omega|^2 q_0(w, w); real for solutions by anti-Hermiticity.
[[nodiscard]] inline double energy_flux(const SpinorField& w, int n_quad = 128) {
    const cplx q = qform(w, w, 0.0, n_quad).value;
    return std::real(-I * w.omega() * w.omega() * q);
}

/// C-infinity ramp r: 0 below 0, 1 above 1, strictly increasing between,
/// built from f(t) = e^{-1/t} [t > 0] as r = f(t) / (f(t) + f(1-t)).
namespace detail {
[[nodiscard]] inline double bump_f(double t) noexcept {
    return t > 0.0 ? std::exp(-1.0 / t) : 0.0;
}
[[nodiscard]] inline double bump_fp(double t) noexcept {
    return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0;
}
[[nodiscard]] inline double ramp(double t) noexcept {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = bump_f(t), b = bump_f(1.0 - t);
    return a / (a + b);
}
[[nodiscard]] inline double ramp_deriv(double t) noexcept {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double a = bump_f(t), b = bump_f(1.0 - t);
    const double ap = bump_fp(t), bp = bump_fp(1.0 - t);
    // d/dt a/(a+b) = (a' b + a b'(1-t) chain) / (a+b)^2 with db/dt = -bp.
    return (ap * b + a * bp) / ((a + b) * (a + b));
}
}  // namespace detail

/// Smooth cutoff chi_+ (sign=+1): 0 for x <= R0, 1 for x >= R0 + 1;
/// chi_-(x) = chi_+(-x).
struct SmoothCutoff {
    double R0 = 1.0;
    int sign = +1;

    [[nodiscard]] double operator()(double x) const noexcept {
        return detail::ramp(sign > 0 ? x - R0 : -x - R0);
    }
    [[nodiscard]] double deriv(double x) const noexcept {
        const double t = sign > 0 ? x - R0 : -x - R0;
        return (sign > 0 ? 1.0 : -1.0) * detail::ramp_deriv(t);
    }
};

/// The four cutoff-wave sets.  W = outgoing (supported where it radiates
/// away), V = incoming.
enum class CutKind { W, V };

/// Build W_k^tau or V_k^tau for the scattering problem at omega = omega_N - eps.
[[nodiscard]] inline SpinorField cutoff_wave(CutKind kind, int k, int tau,
                                             const RibbonGeometry& geom, int N, double eps) {
    // W^+ and V^- live on the right (chi_+); W^- and V^+ on the left (chi_-).
    const bool right = (kind == CutKind::W) ? (tau > 0) : (tau < 0);
    const SmoothCutoff chi{geom.R0, right ? +1 : -1};
    SpinorField base = normalized_wave(geom, N, eps, k, tau);
    SpinorField out = modulate_x(
        base, [chi](double x) { return chi(x); }, [chi](double x) { return chi.deriv(x); });
    return out;
}

}  // namespace agnr
