#pragma once
/// \file io.hpp
/// \brief Deterministic CSV / JSON artifact emission and run configuration.
///
/// All floating-point output uses a fixed "%.15e" format so that artifacts
/// are byte-reproducible given the same configuration.  Structured artifacts
/// are JSON; plot data is CSV with fixed column schemas.

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "agnr/born.hpp"
#include "agnr/solver.hpp"
#include "agnr/synthesis.hpp"
#include "agnr/trapped.hpp"

namespace agnr {

/// Fixed scientific formatting for every CSV / report number.
[[nodiscard]] inline std::string fmt_sci(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15e", v);
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open output file: " + path);
    out << text;
    if (!out) throw ValidationError("failed writing output file: " + path);
}

namespace detail {

[[nodiscard]] inline std::vector<std::vector<double>> matrix_part(const Eigen::MatrixXcd& M,
                                                                  bool real) {
    std::vector<std::vector<double>> rows(static_cast<size_t>(M.rows()));
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        auto& row = rows[static_cast<size_t>(r)];
        row.resize(static_cast<size_t>(M.cols()));
        for (Eigen::Index c = 0; c < M.cols(); ++c)
            row[static_cast<size_t>(c)] = real ? M(r, c).real() : M(r, c).imag();
    }
    return rows;
}

/// Channel labels "1+", "1-", ..., "N-" in the flat (k, tau) order.
[[nodiscard]] inline std::vector<std::string> channel_labels(int N) {
    std::vector<std::string> lab;
    lab.reserve(static_cast<size_t>(2 * N));
    for (int k = 1; k <= N; ++k) {
        lab.push_back(std::to_string(k) + "+");
        lab.push_back(std::to_string(k) + "-");
    }
    return lab;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV artifacts
// ---------------------------------------------------------------------------

[[nodiscard]] inline std::string thresholds_csv(const ThresholdTable& table) {
    std::string text = "k,omega,kappa,j\n";
    for (const auto& e : table.entries)
        text += std::to_string(e.k) + "," + fmt_sci(e.omega) + "," + fmt_sci(e.kappa) + "," +
                std::to_string(e.j_index) + "\n";
    return text;
}

[[nodiscard]] inline std::string dispersion_csv(const std::vector<DispersionRow>& rows) {
    std::string text = "j,kappa_sign,lambda,omega\n";
    for (const auto& r : rows)
        text += std::to_string(r.j_index) + "," + std::to_string(static_cast<int>(r.kappa_sign)) +
                "," + fmt_sci(r.lambda) + "," + fmt_sci(r.omega) + "\n";
    return text;
}

/// Spinor samples on an nx-by-ny grid over [x0, x1] x [0, L].
[[nodiscard]] inline std::string wave_csv(const SpinorField& w, int nx, int ny, double x0,
                                          double x1) {
    if (nx < 2 || ny < 2) throw ValidationError("wave grid must be at least 2x2");
    std::string text = "x,y,Re_u,Im_u,Re_v,Im_v,Re_up,Im_up,Re_vp,Im_vp\n";
    const double L = w.geom().L;
    for (int i = 0; i < nx; ++i) {
        const double x = x0 + (x1 - x0) * i / (nx - 1);
        for (int j = 0; j < ny; ++j) {
            const double y = L * j / (ny - 1);
            const Spinor s = w.eval(x, y);
            text += fmt_sci(x) + "," + fmt_sci(y);
            for (const cplx& c : s) text += "," + fmt_sci(c.real()) + "," + fmt_sci(c.imag());
            text += "\n";
        }
    }
    return text;
}

[[nodiscard]] inline std::string trapscan_csv(const std::vector<TrapScanRow>& rows) {
    std::string text = "eps,delta,sigma_min,detect\n";
    for (const auto& r : rows)
        text += fmt_sci(r.eps) + "," + fmt_sci(r.delta) + "," + fmt_sci(r.sigma_min) + "," +
                std::to_string(r.detect) + "\n";
    return text;
}

// ---------------------------------------------------------------------------
// JSON artifacts
// ---------------------------------------------------------------------------

[[nodiscard]] inline nlohmann::json smatrix_to_json(const AugmentedScatteringMatrix& S,
                                                    const RibbonGeometry& geom) {
    nlohmann::json j;
    j["L"] = geom.L;
    j["N"] = S.N;
    j["eps"] = S.eps;
    j["delta"] = S.delta;
    j["omega"] = S.omega;
    j["index"] = detail::channel_labels(S.N);
    j["S_re"] = detail::matrix_part(S.S, true);
    j["S_im"] = detail::matrix_part(S.S, false);
    j["diagnostics"] = {{"unitarity_defect", S.unitarity_defect},
                        {"t1_defect", S.t1_defect},
                        {"extraction_consistency", S.extraction_consistency},
                        {"remainder_decay_defect", S.remainder_decay_defect},
                        {"solve_residual", S.solve_residual},
                        {"suppression_factor", S.suppression_factor},
                        {"condition_estimate", S.condition_estimate}};
    return j;
}

[[nodiscard]] inline nlohmann::json born_to_json(const BornResult& b, double delta,
                                                 const RibbonGeometry& geom) {
    nlohmann::json j;
    j["L"] = geom.L;
    j["N"] = b.N;
    j["eps"] = b.eps;
    j["omega"] = b.omega;
    j["delta"] = delta;
    j["index"] = detail::channel_labels(b.N);
    j["s1_re"] = detail::matrix_part(b.s1, true);
    j["s1_im"] = detail::matrix_part(b.s1, false);
    j["quad_defect"] = b.quad_defect;
    return j;
}

[[nodiscard]] inline nlohmann::json synthesis_report_json(const SynthesisResult& r) {
    nlohmann::json j;
    j["N"] = r.N;
    j["eps"] = r.eps;
    j["omega"] = r.omega;
    j["delta0"] = r.delta0;
    j["delta_final"] = r.delta_final;
    j["sup_scale"] = r.sup_scale;
    j["final_sigma_min"] = r.final_sigma_min;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    nlohmann::json idx = nlohmann::json::array();
    for (const auto& a : r.ind.entries)
        idx.push_back({{"j", a.j}, {"tau", a.tau}, {"xi", a.xi == 0 ? "Re" : "Im"}});
    j["index_set"] = idx;
    j["eta"] = std::vector<double>(r.eta.data(), r.eta.data() + r.eta.size());
    j["final_moments"] = std::vector<double>(r.final_moments.data(),
                                             r.final_moments.data() + r.final_moments.size());
    j["moment_residual"] = r.moment_residual;
    j["moment_condition"] = r.moment_condition;
    j["moment_singular_values"] = std::vector<double>(
        r.moment_singular_values.data(),
        r.moment_singular_values.data() + r.moment_singular_values.size());
    j["gram_eigenvalues"] = std::vector<double>(
        r.gram_eigenvalues.data(), r.gram_eigenvalues.data() + r.gram_eigenvalues.size());
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : r.history)
        hist.push_back({{"step_norm", h.step_norm}, {"sigma_min", h.sigma_min}});
    j["iteration_history"] = hist;
    return j;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

/// Parsed configuration of a solver run.  The config file may be either a
/// full run config (geometry / regime / solver / quadrature blocks) or a bare
/// potential JSON (detected by its "terms" key), in which case the regime
/// comes from command-line flags.
struct RunConfig {
    RibbonGeometry geom{};
    int N = 0;
    double eps = std::numeric_limits<double>::quiet_NaN();    ///< regime offset if given
    double omega = std::numeric_limits<double>::quiet_NaN();  ///< alternative regime spec
    SolverConfig solver{};
    int n_quad = 32;
    int panels = 8;
    std::optional<PotentialSpec> potential;

    /// Resolve the regime to a signed eps (omega - form converts through the
    /// threshold table; omega above the threshold yields eps < 0).
    [[nodiscard]] double resolved_eps() const {
        if (!std::isnan(eps)) return eps;
        if (std::isnan(omega)) throw ValidationError("config: regime needs eps or omega");
        if (N < 1) throw ValidationError("config: regime needs N");
        const auto tab = detail::enumerate_thresholds(geom, N);
        return tab[static_cast<size_t>(N - 1)].omega - omega;
    }

    /// The potential to use: the loaded one, or P = 0 on this geometry.
    [[nodiscard]] PotentialSpec potential_or_zero() const {
        if (potential) return *potential;
        PotentialSpec P;
        P.L = geom.L;
        P.R0 = geom.R0;
        P.delta = 0.0;
        return P;
    }
};

/// Load a run config or bare potential file; `flag_N` / `flag_eps` supply or
/// override the regime from the command line.
[[nodiscard]] inline RunConfig load_run_config(const std::string& path, int flag_N = 0,
                                               double flag_eps =
                                                   std::numeric_limits<double>::quiet_NaN()) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config file does not exist: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError("config file is not valid JSON: " + path + " (" + e.what() + ")");
    }
    RunConfig cfg;
    if (j.contains("terms")) {
        // Bare potential schema.
        cfg.potential = j.get<PotentialSpec>();
        cfg.geom.L = cfg.potential->L;
        cfg.geom.R0 = cfg.potential->R0;
    } else {
        if (!j.contains("geometry"))
            throw ValidationError("config: missing geometry block (or potential terms)");
        const auto& g = j.at("geometry");
        cfg.geom.L = g.at("L").get<double>();
        if (g.contains("R0")) cfg.geom.R0 = g.at("R0").get<double>();
        if (j.contains("regime")) {
            const auto& r = j.at("regime");
            if (r.contains("N")) cfg.N = r.at("N").get<int>();
            if (r.contains("eps")) cfg.eps = r.at("eps").get<double>();
            if (r.contains("omega")) cfg.omega = r.at("omega").get<double>();
        }
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            if (s.contains("J_modes")) cfg.solver.J_modes = s.at("J_modes").get<int>();
            if (s.contains("nx")) cfg.solver.nx = s.at("nx").get<int>();
            if (s.contains("X")) cfg.solver.X = s.at("X").get<double>();
            if (s.contains("tol")) cfg.solver.tol = s.at("tol").get<double>();
            if (s.contains("margin_decay"))
                cfg.solver.margin_decay = s.at("margin_decay").get<double>();
        }
        if (j.contains("quadrature")) {
            const auto& q = j.at("quadrature");
            if (q.contains("n_quad")) cfg.n_quad = q.at("n_quad").get<int>();
            if (q.contains("panels")) cfg.panels = q.at("panels").get<int>();
        }
        if (j.contains("potential_path")) {
            cfg.potential = load_potential(j.at("potential_path").get<std::string>());
            if (std::abs(cfg.potential->L - cfg.geom.L) > 1e-12)
                throw ValidationError("config: potential L does not match geometry L");
        }
    }
    if (flag_N > 0) cfg.N = flag_N;
    if (!std::isnan(flag_eps)) cfg.eps = flag_eps;
    cfg.geom.validate();
    return cfg;
}

}  // namespace agnr
