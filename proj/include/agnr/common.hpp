#pragma once
/// \file common.hpp
/// \brief Shared scalar types, constants and error taxonomy for the agnr library.
///
/// The library computes the spectral / scattering structure of the continuum
/// Dirac model of an armchair graphene nanoribbon on the strip
/// Pi = (0,L) x R.  Fields are 4-spinors w = (u, v, u', v') where the primed
/// pair lives in the second valley.  Everything is dimensionless; energies are
/// measured in units of 2t/sqrt(3) (metadata only, never applied).

#include <algorithm>
#include <complex>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>
#include <cstdint>

namespace agnr {

using cplx = std::complex<double>;

inline constexpr double PI = 3.141592653589793238462643383279502884;
inline constexpr cplx I{0.0, 1.0};

inline constexpr const char* VERSION = "1.0.0";

/// Thrown for bad user input / unsupported geometry (CLI exit code 2).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when a numerical stage fails to meet its contract (CLI exit code 3).
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

/// sign(x) with sign(0) = 0.  The geometries we accept (2L not an integer)
/// never produce kappa = 0, so the 0 branch is an internal error guard only.
[[nodiscard]] inline double sgn(double x) noexcept {
    return (x > 0.0) - (x < 0.0);
}

/// Worker cap for the few embarrassingly parallel loops (scan rows, moment
/// tables).  Parallelization never reorders reductions, so results are
/// bit-identical for any thread count.
inline int& thread_cap() {
    static int cap = 4;
    return cap;
}

/// Run body(i) for i in [0, n) on up to thread_cap() workers.  Each index is
/// handled exactly once and writes only its own output slot, so the result is
/// independent of the thread count.
template <typename F>
inline void parallel_for(int n, F&& body) {
    const int workers = std::max(1, std::min(thread_cap(), n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&body, &errors, w, n, workers] {
            try {
                for (int i = w; i < n; i += workers) body(i);
            } catch (...) {
                errors[static_cast<size_t>(w)] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace agnr
