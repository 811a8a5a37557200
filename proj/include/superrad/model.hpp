#pragma once

// Domain types shared by every solver path. All quantities are expressed in
// units of the atomic transition frequency omega0 (omega0 = 1 after
// validation), so times are in units of 1/omega0 and intensities in omega0^2.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "superrad/errors.hpp"

namespace superrad {

using cdouble = std::complex<double>;

// Stopping rule for open-ended simulations: stop once <n> < excitation_fraction * N,
// or at the time cap (see horizon_cap), whichever comes first.
struct HorizonPolicy {
    double excitation_fraction = 1e-3;
    double cap_multiple = 50.0;
};

struct SystemParams {
    int n_atoms = 1;
    double gamma0 = 1e-3;  // coupling strength
    double lambda = 0.0;   // spectral width; 0 is the lossless cavity
    double omega0 = 1.0;
    // Integrator tolerances; unset means the size-dependent default.
    std::optional<double> abs_tol;
    std::optional<double> rel_tol;
    HorizonPolicy horizon;

    static SystemParams from_ratio(int n, double lambda_over_gamma0, double gamma0 = 1e-3) {
        SystemParams p;
        p.n_atoms = n;
        p.gamma0 = gamma0;
        p.lambda = lambda_over_gamma0 * gamma0;
        return p;
    }
};

// Square roots of lambda^2 - k gamma0^2 for k = 2, 4, 8. Purely imaginary
// when the radicand is negative.
struct DerivedFrequencies {
    cdouble omega1;
    cdouble omega;
    cdouble omega_tilde;
};

struct TraceMeta {
    std::string solver;
    SystemParams params;
    double abs_tol = 0.0;
    double rel_tol = 0.0;
    std::string stop_reason;
};

// Sampled radiated intensity and atomic excitation <n>.
struct IntensityTrace {
    std::vector<double> times;
    std::vector<double> intensity;
    std::vector<double> excitation;
    TraceMeta meta;

    std::size_t size() const noexcept { return times.size(); }
};

// Returns p (with gamma0, lambda rescaled so omega0 = 1) if every invariant
// holds; throws ParamError naming the first violated invariant otherwise.
SystemParams validate_params(const SystemParams& p);

// gamma0^2 / lambda. Throws UndefinedRateError for lambda = 0.
double markovian_rate(const SystemParams& p);

DerivedFrequencies derived_frequencies(const SystemParams& p);

double effective_abs_tol(const SystemParams& p);
double effective_rel_tol(const SystemParams& p);

// Time cap of the horizon policy.
double horizon_cap(const SystemParams& p);

// Throws ParamError("grid") unless the grid is non-empty, finite, starts at
// t >= 0 and is strictly increasing.
void validate_grid(const std::vector<double>& grid);

// n points from t0 to t1 inclusive (n >= 2).
std::vector<double> uniform_grid(double t0, double t1, std::size_t n);

// Real part of z after checking |Im z| <= 1e-9 * max(|Re z|, scale).
double checked_real(cdouble z, double scale, const char* what);

}  // namespace superrad
