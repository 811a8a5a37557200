#include "superrad/analytic.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "superrad/dopri5.hpp"

namespace superrad {

namespace {

// sinh(x)/x, finite at x = 0.
cdouble sinhc(cdouble x) {
    if (std::abs(x) < 1e-4) {
        const cdouble x2 = x * x;
        return 1.0 + x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sinh(x) / x;
}

// atanh(u)/u, finite at u = 0.
cdouble atanhc(cdouble u) {
    if (std::abs(u) < 1e-4) {
        const cdouble u2 = u * u;
        return 1.0 + u2 / 3.0 + u2 * u2 / 5.0;
    }
    return std::atanh(u) / u;
}

// Half-angle argument Omega1 t / 2 and whether its real part is large enough
// that cosh/sinh must be factored as e^x (1 +- e^{-2x})/2 to avoid overflow.
struct HalfAngle {
    cdouble omega1;
    cdouble x;
    bool large;
};

HalfAngle half_angle(const SystemParams& p, double t) {
    const cdouble om = derived_frequencies(p).omega1;
    const cdouble x = 0.5 * om * t;
    return {om, x, x.real() > 1.0};
}

// lambda - Omega1 for real Omega1 without cancellation.
double lambda_minus_omega1(const SystemParams& p, double omega1) {
    return 2.0 * p.gamma0 * p.gamma0 / (p.lambda + omega1);
}

}  // namespace

double single_decay_rate(const SystemParams& raw, double t) {
    const SystemParams p = validate_params(raw);
    if (t < 0.0) throw ParamError("t", "invariant violated: t ≥ 0");
    if (t == 0.0) return 0.0;
    const double g2 = p.gamma0 * p.gamma0;
    const auto [om, x, large] = half_angle(p, t);

    if (p.lambda * p.lambda < 2.0 * g2) {
        const double w = std::abs(om);
        const double phase = std::atan2(w, p.lambda);  // acot(lambda/w)
        const double n = std::max(1.0, std::round((0.5 * w * t + phase) / M_PI));
        const double tn = (2.0 / w) * (M_PI * n - phase);
        const double guard = 1e-6 / w;
        if (std::abs(t - tn) < guard) {
            std::ostringstream os;
            os << "single_decay_rate: t = " << t << " lies within " << guard << " of the pole t_" << n << " = " << tn;
            throw PoleError(tn, os.str());
        }
    }

    cdouble rate;
    if (large) {
        const cdouble tt = std::tanh(x) / x;
        rate = 2.0 * g2 * t * tt / (p.lambda * t * tt + 2.0);
    } else {
        const cdouble s = sinhc(x);
        rate = 2.0 * g2 * t * s / (p.lambda * t * s + 2.0 * std::cosh(x));
    }
    return checked_real(rate, p.gamma0, "single_decay_rate");
}

std::vector<double> single_rate_poles(const SystemParams& raw, double t_end) {
    const SystemParams p = validate_params(raw);
    std::vector<double> out;
    if (!(p.lambda * p.lambda < 2.0 * p.gamma0 * p.gamma0)) return out;
    const double w = std::sqrt(2.0 * p.gamma0 * p.gamma0 - p.lambda * p.lambda);
    const double phase = std::atan2(w, p.lambda);
    for (int n = 1;; ++n) {
        const double tn = (2.0 / w) * (M_PI * n - phase);
        if (tn > t_end) break;
        out.push_back(tn);
    }
    return out;
}

double single_excitation(const SystemParams& raw, double t) {
    const SystemParams p = validate_params(raw);
    if (t < 0.0) throw ParamError("t", "invariant violated: t ≥ 0");
    const auto [om, x, large] = half_angle(p, t);
    cdouble amp;
    if (large) {
        const cdouble q = std::exp(-2.0 * x);
        const double decay = -0.5 * t * lambda_minus_omega1(p, om.real());
        amp = std::exp(decay) * (0.5 * (1.0 + q) + 0.5 * p.lambda * (1.0 - q) / om);
    } else {
        amp = std::exp(-0.5 * p.lambda * t) * (std::cosh(x) + 0.5 * p.lambda * t * sinhc(x));
    }
    const double a = checked_real(amp, 1.0, "single_excitation");
    return a * a;
}

double single_intensity(const SystemParams& raw, double t) {
    const SystemParams p = validate_params(raw);
    if (t < 0.0) throw ParamError("t", "invariant violated: t ≥ 0");
    const double g2 = p.gamma0 * p.gamma0;
    const auto [om, x, large] = half_angle(p, t);
    cdouble val;
    if (large) {
        const cdouble q = std::exp(-2.0 * x);
        const double decay = -t * lambda_minus_omega1(p, om.real());
        val = 2.0 * g2 * std::exp(decay) * (0.25 * (1.0 - q * q) / om + 0.25 * p.lambda * (1.0 - q) * (1.0 - q) / (om * om));
    } else {
        const cdouble s = 0.5 * t * sinhc(x);  // sinh(x)/Omega1
        val = 2.0 * g2 * std::exp(-p.lambda * t) * (std::cosh(x) * s + p.lambda * s * s);
    }
    return p.omega0 * checked_real(val, p.gamma0, "single_intensity");
}

SingleExtrema single_extrema(const SystemParams& raw) {
    const SystemParams p = validate_params(raw);
    const double g2 = p.gamma0 * p.gamma0;
    const double s = std::sqrt(p.lambda * p.lambda + 2.0 * g2);
    const cdouble om = derived_frequencies(p).omega1;
    SingleExtrema out;
    const double t_max = checked_real((2.0 / s) * atanhc(om / s), 1.0 / p.gamma0, "single_extrema t_max");
    out.max = {t_max, 0.5 * p.omega0 * (p.lambda + s) * std::exp(-p.lambda * t_max)};
    if (p.lambda * p.lambda < 2.0 * g2) {
        const double w = std::sqrt(2.0 * g2 - p.lambda * p.lambda);
        const double t_min = (2.0 / w) * (M_PI - std::atan(w / s));
        out.min = Extremum{t_min, -0.5 * p.omega0 * (s - p.lambda) * std::exp(-p.lambda * t_min)};
    }
    return out;
}

double meanfield_peak_time(const SystemParams& raw) {
    const SystemParams p = validate_params(raw);
    const double n = p.n_atoms;
    return std::log(n + 1.0) / (n * markovian_rate(p));
}

double meanfield_intensity(const SystemParams& raw, double t) {
    const SystemParams p = validate_params(raw);
    const double gm = markovian_rate(p);
    const double n = p.n_atoms;
    const double t0 = std::log(n + 1.0) / (n * gm);
    const double c = std::cosh(0.5 * gm * n * (t - t0));
    return p.omega0 * gm * n * n / 4.0 / (c * c);
}

IntensityTrace markovian_cascade(const SystemParams& raw, const std::vector<double>& grid, const CascadeOptions& opt) {
    const SystemParams p = validate_params(raw);
    validate_grid(grid);
    const double gm = markovian_rate(p);
    const int n = p.n_atoms;

    // down[m] = gamma_M m (N - m + 1): rate out of |m> into |m-1>.
    std::vector<double> down(n + 1);
    for (int m = 0; m <= n; ++m) down[m] = gm * m * (n - m + 1.0);

    auto rhs = [&](double, const double* y, double* dy) {
        for (int m = 0; m <= n; ++m) {
            const double in = m < n ? down[m + 1] * y[m + 1] : 0.0;
            dy[m] = in - down[m] * y[m];
        }
    };

    IntensityTrace tr;
    tr.meta.solver = "markovian_cascade";
    tr.meta.params = p;
    tr.meta.abs_tol = opt.abs_tol;
    tr.meta.rel_tol = opt.rel_tol;
    tr.meta.stop_reason = "grid_end";
    tr.times.reserve(grid.size());
    tr.intensity.reserve(grid.size());
    tr.excitation.reserve(grid.size());

    std::vector<double> y(n + 1, 0.0);
    y[n] = 1.0;
    double running_max = 0.0;
    auto observe = [&](std::size_t, double t, const std::vector<double>& state, const std::vector<double>& dstate) {
        double ex = 0.0, dex = 0.0;
        for (int m = 1; m <= n; ++m) {
            ex += m * state[m];
            dex += m * dstate[m];
        }
        const double intensity = -p.omega0 * dex;
        tr.times.push_back(t);
        tr.intensity.push_back(intensity);
        tr.excitation.push_back(ex);
        running_max = std::max(running_max, intensity);
        if (opt.stop_below_peak_fraction > 0.0 && running_max > 0.0 &&
            intensity < opt.stop_below_peak_fraction * running_max) {
            tr.meta.stop_reason = "past_peak";
            return false;
        }
        return true;
    };

    Dopri5Options dopt;
    dopt.abs_tol = opt.abs_tol;
    dopt.rel_tol = opt.rel_tol;
    dopri5_integrate(rhs, y, grid, dopt, observe);
    return tr;
}

CanonicalRates canonical_rates(const GammaValues& g) {
    const double mean = 0.5 * (g.g11 + g.g22);
    const double half = 0.5 * (g.g11 - g.g22);
    const double r = std::hypot(half, g.g12);
    return {mean + r, mean - r, g.g33};
}

CanonicalRates canonical_rates(const GammaMatrix& g, double t) { return canonical_rates(g(t)); }

NonCanonicalRates noncanonical_rates(const GammaValues& g) {
    return {g.g12, g.g33, g.g11 - g.g12, g.g22 - g.g12};
}

NonCanonicalRates noncanonical_rates(const GammaMatrix& g, double t) { return noncanonical_rates(g(t)); }

}  // namespace superrad
