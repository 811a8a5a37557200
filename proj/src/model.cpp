#include "superrad/model.hpp"

#include <cmath>
#include <sstream>

namespace superrad {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& invariant, double got) {
    std::ostringstream os;
    os << "invariant violated: " << invariant << " (got " << got << ")";
    throw ParamError(field, os.str());
}

}  // namespace

SystemParams validate_params(const SystemParams& p) {
    if (p.n_atoms < 1) fail("n_atoms", "n_atoms ≥ 1", p.n_atoms);
    if (!std::isfinite(p.gamma0) || p.gamma0 <= 0.0) fail("gamma0", "gamma0 > 0", p.gamma0);
    if (!std::isfinite(p.lambda) || p.lambda < 0.0) fail("lambda", "lambda ≥ 0", p.lambda);
    if (!std::isfinite(p.omega0) || p.omega0 <= 0.0) fail("omega0", "omega0 > 0", p.omega0);
    if (p.abs_tol && !(*p.abs_tol > 0.0)) fail("abs_tol", "abs_tol > 0", *p.abs_tol);
    if (p.rel_tol && !(*p.rel_tol > 0.0)) fail("rel_tol", "rel_tol > 0", *p.rel_tol);
    const double frac = p.horizon.excitation_fraction;
    if (!(frac > 0.0 && frac < 1.0)) fail("horizon.excitation_fraction", "0 < excitation_fraction < 1", frac);
    if (!(p.horizon.cap_multiple > 0.0)) fail("horizon.cap_multiple", "cap_multiple > 0", p.horizon.cap_multiple);

    SystemParams out = p;
    out.gamma0 = p.gamma0 / p.omega0;
    out.lambda = p.lambda / p.omega0;
    out.omega0 = 1.0;
    return out;
}

double markovian_rate(const SystemParams& p) {
    if (p.lambda <= 0.0) {
        throw UndefinedRateError("markovian rate gamma0^2/lambda is undefined for lambda = 0");
    }
    return p.gamma0 * p.gamma0 / p.lambda;
}

DerivedFrequencies derived_frequencies(const SystemParams& p) {
    const double l2 = p.lambda * p.lambda;
    const double g2 = p.gamma0 * p.gamma0;
    return {std::sqrt(cdouble(l2 - 2.0 * g2)), std::sqrt(cdouble(l2 - 4.0 * g2)),
            std::sqrt(cdouble(l2 - 8.0 * g2))};
}

double effective_abs_tol(const SystemParams& p) {
    if (p.abs_tol) return *p.abs_tol;
    return p.n_atoms <= 100 ? 1e-9 : 1e-7;
}

double effective_rel_tol(const SystemParams& p) {
    if (p.rel_tol) return *p.rel_tol;
    return p.n_atoms <= 100 ? 1e-9 : 1e-7;
}

double horizon_cap(const SystemParams& p) {
    const double lossless =
        p.horizon.cap_multiple * std::sqrt(2.0) / (p.gamma0 * std::sqrt(static_cast<double>(p.n_atoms)));
    if (p.lambda <= 0.0) return lossless;
    // 50/gamma_M collapses to zero as lambda -> 0; the lossless cap is a floor.
    return std::max(p.horizon.cap_multiple / markovian_rate(p), lossless);
}

void validate_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw ParamError("grid", "invariant violated: grid is non-empty");
    if (!std::isfinite(grid.front()) || grid.front() < 0.0) fail("grid", "grid[0] ≥ 0", grid.front());
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!std::isfinite(grid[k]) || !(grid[k] > grid[k - 1])) fail("grid", "grid strictly increasing", grid[k]);
    }
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
    if (n < 2) throw ParamError("grid", "invariant violated: n_samples ≥ 2");
    if (!(t1 > t0)) fail("grid", "t_end > t_start", t1);
    std::vector<double> g(n);
    const double dt = (t1 - t0) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) g[k] = t0 + dt * static_cast<double>(k);
    g.back() = t1;
    return g;
}

double checked_real(cdouble z, double scale, const char* what) {
    const double bound = 1e-9 * std::max(std::abs(z.real()), scale);
    if (std::abs(z.imag()) > bound) {
        std::ostringstream os;
        os << what << ": imaginary residue " << z.imag() << " exceeds " << bound;
        throw ImaginaryResidueError(os.str());
    }
    return z.real();
}

}  // namespace superrad
