#pragma once
/// \file cli.hpp
/// \brief Command-line front end: subcommand dispatch, argument parsing,
///        exit-code mapping, and the identity-check report builders.
///
/// Exit codes: 0 success, 2 invalid input (bad flags, malformed config),
/// 3 solver failure (factorization, divergence, failed identity check).

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "agnr/io.hpp"
#include "agnr/qform.hpp"

namespace agnr {

namespace detail {

/// Parse "min:max:step" (dispersion grids) into an inclusive value list.
[[nodiscard]] inline std::vector<double> parse_range_step(const std::string& text) {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3)
        throw ValidationError("expected range 'min:max:step', got '" + text + "'");
    if (step <= 0) throw ValidationError("range step must be positive");
    if (hi < lo) throw ValidationError("range max must be >= min");
    std::vector<double> vals;
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    vals.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) vals.push_back(lo + step * i);
    return vals;
}

/// Parse "min:max:steps" (trap scans) into `steps` equally spaced values.
[[nodiscard]] inline std::vector<double> parse_range_count(const std::string& text) {
    double lo = 0, hi = 0;
    int n = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3)
        throw ValidationError("expected range 'min:max:steps', got '" + text + "'");
    if (n < 1) throw ValidationError("range needs at least one step");
    std::vector<double> vals;
    vals.reserve(static_cast<size_t>(n));
    if (n == 1) {
        vals.push_back(0.5 * (lo + hi));
        return vals;
    }
    for (int i = 0; i < n; ++i) vals.push_back(lo + (hi - lo) * i / (n - 1));
    return vals;
}

[[nodiscard]] inline std::pair<int, int> parse_grid(const std::string& text) {
    int nx = 0, ny = 0;
    if (std::sscanf(text.c_str(), "%dx%d", &nx, &ny) != 2 || nx < 2 || ny < 2)
        throw ValidationError("expected grid '<nx>x<ny>' with nx, ny >= 2, got '" + text + "'");
    return {nx, ny};
}

[[nodiscard]] inline int parse_tau(const std::string& text) {
    if (text == "+" || text == "+1") return +1;
    if (text == "-" || text == "-1") return -1;
    throw ValidationError("expected --tau <+|->, got '" + text + "'");
}

inline void emit_text(const std::string& out_path, const std::string& text) {
    if (out_path.empty())
        std::cout << text;
    else
        write_text_file(out_path, text);
}

inline void emit_json(const std::string& out_path, const nlohmann::json& j) {
    if (out_path.empty())
        std::cout << j.dump(2) << "\n";
    else
        write_json_file(out_path, j);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Biorthogonality report (qcheck)
// ---------------------------------------------------------------------------

struct QCheckEntry {
    std::string label;
    cplx value{};
    cplx expected{};
    double deviation = 0.0;
};

namespace detail {

inline void push_q(std::vector<QCheckEntry>& rows, std::string label, cplx value,
                   cplx expected) {
    rows.push_back({std::move(label), value, expected, std::abs(value - expected)});
}

[[nodiscard]] inline std::string tau_text(int tau) { return tau > 0 ? "+" : "-"; }

}  // namespace detail

/// Full biorthogonality table.  Always contains the propagating block at
/// `omega`; when N >= 1 and eps is finite it adds the near-threshold block
/// (normalized pair, raw/analytic exponential identities, threshold pair)
/// and the two-sided cutoff tables.
[[nodiscard]] inline std::vector<QCheckEntry> qcheck_entries(const RibbonGeometry& geom,
                                                             double omega, int N, double eps,
                                                             int n_quad = 128) {
    std::vector<QCheckEntry> rows;
    const double L = geom.L;

    struct Tagged {
        std::string name;
        int tau;
        SpinorField w;
    };

    // Propagating oscillatory block at the requested energy, section x = 0.
    {
        std::vector<Tagged> fields;
        for (const auto& m : propagating_modes(geom, omega))
            for (int tau : {+1, -1})
                fields.push_back(
                    {"w" + std::to_string(m.k) + detail::tau_text(tau), tau,
                     make_wave(WaveLabel{WaveFamily::oscillatory_normalized, m.k, tau}, geom,
                               omega)});
        for (size_t a = 0; a < fields.size(); ++a)
            for (size_t b = 0; b < fields.size(); ++b) {
                const cplx expect = (a == b) ? cplx(0.0, fields[a].tau) : cplx(0.0, 0.0);
                detail::push_q(rows, "prop q(" + fields[a].name + "," + fields[b].name + ")",
                               qform(fields[a].w, fields[b].w, 0.0, n_quad).value, expect);
            }
    }

    if (N < 1 || !std::isfinite(eps)) return rows;

    const auto nt = near_threshold(geom, N, eps);

    // Normalized family (oscillatory for k < N, exponential pair at k = N).
    {
        struct NTagged {
            int k, tau;
            SpinorField w;
        };
        std::vector<NTagged> fields;
        for (int k = 1; k <= N; ++k)
            for (int tau : {+1, -1})
                fields.push_back({k, tau, normalized_wave(geom, N, eps, k, tau)});
        for (const auto& fa : fields)
            for (const auto& fb : fields) {
                const bool diag = fa.k == fb.k && fa.tau == fb.tau;
                const cplx expect = diag ? cplx(0.0, fa.tau) : cplx(0.0, 0.0);
                detail::push_q(rows,
                               "norm q(w" + std::to_string(fa.k) + detail::tau_text(fa.tau) +
                                   ",w" + std::to_string(fb.k) + detail::tau_text(fb.tau) + ")",
                               qform(fa.w, fb.w, 0.0, n_quad).value, expect);
            }
    }

    // Threshold pair at eps = 0: q(w0, w1) = -2L/omega_N, q(w0, w0) = 0.
    {
        const auto w0 = make_wave(WaveLabel{WaveFamily::threshold0, N, +1}, geom, N, 0.0);
        const auto w1 = make_wave(WaveLabel{WaveFamily::threshold1, N, +1}, geom, N, 0.0);
        detail::push_q(rows, "thr q(w0,w1)", qform(w0, w1, 0.0, n_quad).value,
                       cplx(-2.0 * L / nt.omega_N, 0.0));
        detail::push_q(rows, "thr q(w0,w0)", qform(w0, w0, 0.0, n_quad).value, cplx(0.0, 0.0));
    }

    // Raw and analytic exponential identities just below the threshold.
    if (eps > 0.0) {
        const auto wp = make_wave(WaveLabel{WaveFamily::near_exp_raw, N, +1}, geom, N, eps);
        const auto wm = make_wave(WaveLabel{WaveFamily::near_exp_raw, N, -1}, geom, N, eps);
        const cplx pair = 4.0 * L * nt.lambda_eps / nt.omega_eps * I;
        detail::push_q(rows, "raw q(w+,w-)", qform(wp, wm, 0.0, n_quad).value, pair);
        detail::push_q(rows, "raw q(w-,w+)", qform(wm, wp, 0.0, n_quad).value, -pair);
        detail::push_q(rows, "raw q(w+,w+)", qform(wp, wp, 0.0, n_quad).value, cplx(0.0, 0.0));
        detail::push_q(rows, "raw q(w-,w-)", qform(wm, wm, 0.0, n_quad).value, cplx(0.0, 0.0));

        const auto ap =
            make_wave(WaveLabel{WaveFamily::near_exp_analytic_plus, N, +1}, geom, N, eps);
        const auto am =
            make_wave(WaveLabel{WaveFamily::near_exp_analytic_minus, N, +1}, geom, N, eps);
        const cplx cross = 2.0 * L / nt.omega_eps * I;
        detail::push_q(rows, "ana q(w^e+,w^e-)", qform(ap, am, 0.0, n_quad).value, cross);
        detail::push_q(rows, "ana q(w^e-,w^e+)", qform(am, ap, 0.0, n_quad).value, cross);
        detail::push_q(rows, "ana q(w^e+,w^e+)", qform(ap, ap, 0.0, n_quad).value,
                       cplx(0.0, 0.0));
        detail::push_q(rows, "ana q(w^e-,w^e-)", qform(am, am, 0.0, n_quad).value,
                       cplx(0.0, 0.0));
    }

    // Two-sided cutoff tables: Q(W,W) = +i I, Q(V,V) = -i I, Q(W,V) = 0.
    if (eps > 0.0) {
        const double R = geom.R0 + 2.0;
        std::vector<std::pair<std::string, SpinorField>> Ws, Vs;
        for (int k = 1; k <= N; ++k)
            for (int tau : {+1, -1}) {
                const std::string suffix = std::to_string(k) + detail::tau_text(tau);
                Ws.emplace_back("W" + suffix, cutoff_wave(CutKind::W, k, tau, geom, N, eps));
                Vs.emplace_back("V" + suffix, cutoff_wave(CutKind::V, k, tau, geom, N, eps));
            }
        for (size_t a = 0; a < Ws.size(); ++a)
            for (size_t b = 0; b < Ws.size(); ++b) {
                const cplx diag = (a == b) ? I : cplx(0.0, 0.0);
                detail::push_q(rows, "cut Q(" + Ws[a].first + "," + Ws[b].first + ")",
                               QR(Ws[a].second, Ws[b].second, R, n_quad), diag);
                detail::push_q(rows, "cut Q(" + Vs[a].first + "," + Vs[b].first + ")",
                               QR(Vs[a].second, Vs[b].second, R, n_quad), -diag);
                detail::push_q(rows, "cut Q(" + Ws[a].first + "," + Vs[b].first + ")",
                               QR(Ws[a].second, Vs[b].second, R, n_quad), cplx(0.0, 0.0));
            }
    }

    return rows;
}

[[nodiscard]] inline nlohmann::json qcheck_json(const RibbonGeometry& geom, double omega, int N,
                                                double eps, int n_quad = 128) {
    const auto rows = qcheck_entries(geom, omega, N, eps, n_quad);
    double max_dev = 0.0;
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& r : rows) {
        max_dev = std::max(max_dev, r.deviation);
        entries.push_back({{"label", r.label},
                           {"value", {r.value.real(), r.value.imag()}},
                           {"expected", {r.expected.real(), r.expected.imag()}},
                           {"deviation", r.deviation}});
    }
    nlohmann::json j;
    j["L"] = geom.L;
    j["omega"] = omega;
    if (N >= 1) j["N"] = N;
    if (std::isfinite(eps)) j["eps"] = eps;
    j["n_quad"] = n_quad;
    j["entries"] = entries;
    j["max_deviation"] = max_dev;
    return j;
}

// ---------------------------------------------------------------------------
// Identity verification (verify-identities)
// ---------------------------------------------------------------------------

struct CheckRow {
    std::string name;
    double value = 0.0;  ///< measured deviation (or margin, see sign checks)
    double tol = 0.0;
    bool pass = false;
};

namespace detail {

/// Random mode-sum field with Gaussian x-envelopes: satisfies the boundary
/// conditions exactly and decays in x, as the norm identity requires.
[[nodiscard]] inline SpinorField random_envelope_field(const RibbonGeometry& geom, double omega,
                                                       std::mt19937& rng) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const auto modes = propagating_modes(geom, omega);
    std::vector<std::pair<cplx, SpinorField>> parts;
    for (const auto& m : modes)
        for (int tau : {+1, -1}) {
            const cplx coef(unif(rng), unif(rng));
            const double c = 0.8 * unif(rng);
            const double s = 0.6 + 0.3 * std::abs(unif(rng));
            auto base =
                make_wave(WaveLabel{WaveFamily::oscillatory, m.k, tau}, geom, omega);
            auto env = [c, s](double x) { return std::exp(-(x - c) * (x - c) / (s * s)); };
            auto env_dx = [c, s](double x) {
                return -2.0 * (x - c) / (s * s) * std::exp(-(x - c) * (x - c) / (s * s));
            };
            parts.emplace_back(coef, modulate_x(base, env, env_dx));
        }
    return combine(std::move(parts));
}

}  // namespace detail

/// Run the analytic identity suites and return one row per check.
[[nodiscard]] inline std::vector<CheckRow> verify_identities(const RibbonGeometry& geom, int N,
                                                             double eps, int norm_panels = 256,
                                                             int norm_fields = 3) {
    std::vector<CheckRow> checks;
    const auto nt = near_threshold(geom, N, eps);

    // 1. Biorthogonality + cutoff tables.
    {
        double max_dev = 0.0;
        for (const auto& r : qcheck_entries(geom, nt.omega_eps, N, eps))
            max_dev = std::max(max_dev, r.deviation);
        checks.push_back({"biorthogonality-tables", max_dev, 1e-9, max_dev < 1e-9});
    }

    // 2/3. Dirac equation and boundary conditions across every wave family.
    {
        std::mt19937 rng(2024);
        std::uniform_real_distribution<double> ux(-3.0, 3.0), uy(0.0, geom.L);
        std::vector<std::pair<double, double>> pts;
        std::vector<double> xs;
        for (int i = 0; i < 200; ++i) {
            pts.emplace_back(ux(rng), uy(rng));
            xs.push_back(ux(rng));
        }
        std::vector<SpinorField> fields;
        for (int tau : {+1, -1}) {
            if (N >= 2) {
                fields.push_back(
                    make_wave(WaveLabel{WaveFamily::oscillatory, 1, tau}, geom, N, eps));
                fields.push_back(make_wave(
                    WaveLabel{WaveFamily::oscillatory_normalized, 1, tau}, geom, N, eps));
            }
            fields.push_back(
                make_wave(WaveLabel{WaveFamily::near_exp_raw, N, tau}, geom, N, eps));
            fields.push_back(normalized_wave(geom, N, eps, N, tau));
        }
        fields.push_back(make_wave(WaveLabel{WaveFamily::threshold0, N, +1}, geom, N, 0.0));
        fields.push_back(make_wave(WaveLabel{WaveFamily::threshold1, N, +1}, geom, N, 0.0));
        fields.push_back(
            make_wave(WaveLabel{WaveFamily::near_exp_analytic_plus, N, +1}, geom, N, eps));
        fields.push_back(
            make_wave(WaveLabel{WaveFamily::near_exp_analytic_minus, N, +1}, geom, N, eps));
        double dres = 0.0, bres = 0.0;
        for (const auto& w : fields) {
            dres = std::max(dres, dirac_residual(w, pts));
            bres = std::max(bres, bc_residual(w, xs));
        }
        checks.push_back({"dirac-residual-families", dres, 1e-10, dres < 1e-10});
        checks.push_back({"bc-residual-families", bres, 1e-12, bres < 1e-12});
    }

    // 4. Section independence of the q-form.
    {
        const auto wp = normalized_wave(geom, N, eps, N, +1);
        const auto wm = normalized_wave(geom, N, eps, N, -1);
        const std::vector<double> sections{-1.7, -0.3, 0.0, 0.8, 2.1};
        const double dev = std::max(q_section_independence(wp, wm, sections),
                                    q_section_independence(wp, wp, sections));
        checks.push_back({"q-section-independence", dev, 1e-9, dev < 1e-9});
    }

    // 5. Energy flux: positive for tau = +, negative for tau = -, zero at the
    //    bounded threshold solution.
    {
        double margin = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= N; ++k) {
            margin = std::min(margin, energy_flux(normalized_wave(geom, N, eps, k, +1)));
            margin = std::min(margin, -energy_flux(normalized_wave(geom, N, eps, k, -1)));
        }
        checks.push_back({"energy-flux-signs", margin, 0.0, margin > 0.0});
        const auto w0 = make_wave(WaveLabel{WaveFamily::threshold0, N, +1}, geom, N, 0.0);
        const double f0 = std::abs(energy_flux(w0));
        checks.push_back({"energy-flux-threshold-zero", f0, 1e-9, f0 < 1e-9});
    }

    // 6. Norm identity on random boundary-condition mode sums (needs at least
    //    one propagating mode below the threshold).
    if (!propagating_modes(geom, nt.omega_eps).empty()) {
        std::mt19937 rng(777);
        double worst = 0.0;
        for (int rep = 0; rep < norm_fields; ++rep) {
            const auto w = detail::random_envelope_field(geom, nt.omega_eps, rng);
            worst = std::max(worst,
                             norm_identity_gap(w, -4.0, 4.0, norm_panels, norm_panels).gap);
        }
        checks.push_back({"norm-identity-mode-sum", worst, 1e-6, worst < 1e-6});
    }

    return checks;
}

// ---------------------------------------------------------------------------
// Subcommand dispatch
// ---------------------------------------------------------------------------

/// Run the CLI on already-split arguments (argv[1..]); returns the exit code.
inline int run_command(std::vector<std::string> args) {
    CLI::App app{"Spectral and scattering toolkit for the armchair-ribbon Dirac model"};
    app.require_subcommand(1);
    app.set_version_flag("--version",
                         std::string("agnr ") + VERSION + " (interface 1.0.0)");
    // Applied while options are processed, i.e. before any subcommand runs.
    app.add_option_function<int>(
           "--threads", [](const int& n) { thread_cap() = n; },
           "cap the number of worker threads")
        ->check(CLI::PositiveNumber);

    int rc = 0;

    // --- thresholds ---------------------------------------------------------
    {
        auto* sub = app.add_subcommand("thresholds", "tabulate spectral thresholds");
        auto L = std::make_shared<double>(0.0);
        auto count = std::make_shared<int>(8);
        auto out = std::make_shared<std::string>();
        sub->add_option("--L", *L, "ribbon width")->required();
        sub->add_option("--count", *count, "number of thresholds")->check(CLI::PositiveNumber);
        sub->add_option("--out", *out, "output CSV path (stdout if omitted)");
        sub->callback([=]() {
            const RibbonGeometry geom{*L};
            detail::emit_text(*out, thresholds_csv(thresholds(geom, *count)));
        });
    }

    // --- dispersion ---------------------------------------------------------
    {
        auto* sub = app.add_subcommand("dispersion", "sample dispersion branches");
        auto L = std::make_shared<double>(0.0);
        auto range = std::make_shared<std::string>();
        auto branches = std::make_shared<int>(4);
        auto out = std::make_shared<std::string>();
        sub->add_option("--L", *L, "ribbon width")->required();
        sub->add_option("--lambda", *range, "longitudinal grid min:max:step")->required();
        sub->add_option("--branches", *branches, "number of branches")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", *out, "output CSV path (stdout if omitted)");
        sub->callback([=]() {
            const RibbonGeometry geom{*L};
            const auto grid = detail::parse_range_step(*range);
            detail::emit_text(*out, dispersion_csv(dispersion_curves(geom, grid, *branches)));
        });
    }

    // --- wave ---------------------------------------------------------------
    {
        auto* sub = app.add_subcommand("wave", "sample one wave on a plot grid");
        auto L = std::make_shared<double>(0.0);
        auto omega = std::make_shared<double>(0.0);
        auto family = std::make_shared<std::string>();
        auto j = std::make_shared<int>(1);
        auto tau = std::make_shared<std::string>("+");
        auto grid = std::make_shared<std::string>("61x41");
        auto out = std::make_shared<std::string>();
        sub->add_option("--L", *L, "ribbon width")->required();
        sub->add_option("--omega", *omega, "spectral parameter")->required();
        sub->add_option("--family", *family, "wave family name")->required();
        sub->add_option("--j", *j, "mode / threshold index");
        sub->add_option("--tau", *tau, "direction + or -");
        sub->add_option("--grid", *grid, "sample grid <nx>x<ny>");
        sub->add_option("--out", *out, "output CSV path (stdout if omitted)");
        sub->callback([=]() {
            const RibbonGeometry geom{*L};
            const WaveLabel label{family_from_string(*family), *j, detail::parse_tau(*tau)};
            const auto [nx, ny] = detail::parse_grid(*grid);
            const auto w = make_wave(label, geom, *omega);
            detail::emit_text(*out, wave_csv(w, nx, ny, -3.0, 3.0));
        });
    }

    // --- qcheck --------------------------------------------------------------
    {
        auto* sub = app.add_subcommand("qcheck", "biorthogonality table with deviations");
        auto L = std::make_shared<double>(0.0);
        auto omega = std::make_shared<double>(0.0);
        auto N = std::make_shared<int>(0);
        auto eps = std::make_shared<double>(std::numeric_limits<double>::quiet_NaN());
        auto n_quad = std::make_shared<int>(128);
        auto out = std::make_shared<std::string>();
        sub->add_option("--L", *L, "ribbon width")->required();
        sub->add_option("--omega", *omega, "spectral parameter")->required();
        sub->add_option("--N", *N, "threshold number for the near-threshold block");
        sub->add_option("--eps", *eps, "distance below threshold N");
        sub->add_option("--n-quad", *n_quad, "transverse quadrature nodes")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", *out, "output JSON path (stdout if omitted)");
        sub->callback([=]() {
            const RibbonGeometry geom{*L};
            detail::emit_json(*out, qcheck_json(geom, *omega, *N, *eps, *n_quad));
        });
    }

    // --- born -----------------------------------------------------------------
    {
        auto* sub = app.add_subcommand("born", "first Born approximation of the S-matrix");
        auto config = std::make_shared<std::string>();
        auto N = std::make_shared<int>(0);
        auto eps = std::make_shared<double>(std::numeric_limits<double>::quiet_NaN());
        auto out = std::make_shared<std::string>();
        sub->add_option("--config", *config, "run config or potential JSON")->required();
        sub->add_option("--N", *N, "threshold number (bare potential configs)");
        sub->add_option("--eps", *eps, "distance below threshold (bare potential configs)");
        sub->add_option("--out", *out, "output JSON path (stdout if omitted)");
        sub->callback([=]() {
            const auto cfg = load_run_config(*config, *N, *eps);
            if (cfg.N < 1) throw ValidationError("born: threshold number N not specified");
            const auto P = cfg.potential_or_zero();
            const auto b =
                born_first_order(P, cfg.geom, cfg.N, cfg.resolved_eps(), cfg.n_quad, cfg.panels);
            detail::emit_json(*out, born_to_json(b, P.delta, cfg.geom));
        });
    }

    // --- smatrix ---------------------------------------------------------------
    {
        auto* sub = app.add_subcommand("smatrix", "augmented scattering matrix");
        auto config = std::make_shared<std::string>();
        auto N = std::make_shared<int>(0);
        auto eps = std::make_shared<double>(std::numeric_limits<double>::quiet_NaN());
        auto out = std::make_shared<std::string>();
        sub->add_option("--config", *config, "run config or potential JSON")->required();
        sub->add_option("--N", *N, "threshold number (bare potential configs)");
        sub->add_option("--eps", *eps, "distance below threshold (bare potential configs)");
        sub->add_option("--out", *out, "output JSON path (stdout if omitted)");
        sub->callback([=]() {
            const auto cfg = load_run_config(*config, *N, *eps);
            if (cfg.N < 1) throw ValidationError("smatrix: threshold number N not specified");
            const auto P = cfg.potential_or_zero();
            const auto S =
                solve_scattering(P, cfg.geom, cfg.N, cfg.resolved_eps(), cfg.solver);
            detail::emit_json(*out, smatrix_to_json(S, cfg.geom));
        });
    }

    // --- trapscan ---------------------------------------------------------------
    {
        auto* sub = app.add_subcommand("trapscan", "trapped-mode detection scan in eps");
        auto config = std::make_shared<std::string>();
        auto range = std::make_shared<std::string>();
        auto N = std::make_shared<int>(0);
        auto tol = std::make_shared<double>(1e-4);
        auto out = std::make_shared<std::string>();
        sub->add_option("--config", *config, "run config or potential JSON")->required();
        sub->add_option("--eps", *range, "scan grid min:max:steps")->required();
        sub->add_option("--N", *N, "threshold number (bare potential configs)");
        sub->add_option("--detect-tol", *tol, "detection threshold on sigma_min");
        sub->add_option("--out", *out, "output CSV path (stdout if omitted)");
        sub->callback([=]() {
            const auto cfg = load_run_config(*config, *N);
            if (cfg.N < 1) throw ValidationError("trapscan: threshold number N not specified");
            const auto grid = detail::parse_range_count(*range);
            const auto rows =
                trap_scan(cfg.potential_or_zero(), cfg.geom, cfg.N, grid, *tol, cfg.solver);
            detail::emit_text(*out, trapscan_csv(rows));
        });
    }

    // --- synthesize ---------------------------------------------------------------
    {
        auto* sub = app.add_subcommand("synthesize",
                                       "construct a potential trapping a mode below threshold N");
        auto L = std::make_shared<double>(0.0);
        auto R0 = std::make_shared<double>(2.0);
        auto N = std::make_shared<int>(0);
        auto eps = std::make_shared<double>(0.0);
        auto bumps = std::make_shared<int>(0);
        auto out = std::make_shared<std::string>("potential.json");
        auto report = std::make_shared<std::string>("report.json");
        sub->add_option("--L", *L, "ribbon width")->required();
        sub->add_option("--N", *N, "threshold number")->required();
        sub->add_option("--eps", *eps, "target distance below the threshold")->required();
        sub->add_option("--R0", *R0, "potential support half-width");
        sub->add_option("--bumps", *bumps, "number of symmetric bump functions");
        sub->add_option("--out", *out, "output potential JSON path");
        sub->add_option("--report", *report, "output report JSON path");
        sub->callback([=]() {
            const RibbonGeometry geom{*L, *R0};
            SynthesisConfig cfg;
            cfg.bumps_sym = *bumps;
            const auto result = synthesize(geom, *N, *eps, cfg);
            save_potential(result.potential, *out);
            write_json_file(*report, synthesis_report_json(result));
        });
    }

    // --- verify-identities ----------------------------------------------------
    {
        auto* sub = app.add_subcommand("verify-identities",
                                       "check the analytic identity suites, report pass/fail");
        auto L = std::make_shared<double>(1.33);
        auto N = std::make_shared<int>(2);
        auto eps = std::make_shared<double>(1e-2);
        auto panels = std::make_shared<int>(256);
        auto fields = std::make_shared<int>(3);
        auto out = std::make_shared<std::string>();
        sub->add_option("--L", *L, "ribbon width");
        sub->add_option("--N", *N, "threshold number");
        sub->add_option("--eps", *eps, "distance below threshold N");
        sub->add_option("--panels", *panels, "norm-identity panel count per axis");
        sub->add_option("--fields", *fields, "number of random norm-identity fields");
        sub->add_option("--out", *out, "optional JSON report path");
        sub->callback([=, &rc]() {
            const RibbonGeometry geom{*L};
            const auto checks = verify_identities(geom, *N, *eps, *panels, *fields);
            bool all = true;
            nlohmann::json jrows = nlohmann::json::array();
            for (const auto& c : checks) {
                all = all && c.pass;
                std::printf("%s  %-28s  value=%.3e  tol=%.1e\n", c.pass ? "PASS" : "FAIL",
                            c.name.c_str(), c.value, c.tol);
                jrows.push_back({{"name", c.name},
                                 {"value", c.value},
                                 {"tol", c.tol},
                                 {"pass", c.pass}});
            }
            std::printf("%s\n", all ? "ALL IDENTITIES PASS" : "IDENTITY CHECKS FAILED");
            if (!out->empty())
                write_json_file(*out, {{"checks", jrows}, {"all_pass", all}});
            if (!all) rc = 3;
        });
    }

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return rc;
}

}  // namespace agnr
