#pragma once

// Dormand-Prince 5(4) with embedded error estimate, FSAL, and step clamping
// so that every requested sample time is hit exactly. Works on flat arrays of
// double or std::complex<double>.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <vector>

#include "superrad/errors.hpp"

namespace superrad {

struct Dopri5Options {
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    double initial_step = 0.0;  // 0 = automatic
    double max_step = 0.0;      // 0 = unbounded
    std::size_t max_steps = 0;  // 0 = unbounded
};

struct Dopri5Stats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_calls = 0;
    double last_step = 0.0;
};

namespace detail {

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const std::complex<double>& z) {
    // Max-norm per component keeps the error test cheap for complex data.
    return std::max(std::abs(z.real()), std::abs(z.imag()));
}

}  // namespace detail

// Integrates y' = f(t, y) from grid[0] through grid.back(). `f(t, y, dydt)`
// writes the derivative into dydt (raw pointers, length n). `observe(k, t, y,
// dydt)` is called at every grid point k with the state and its derivative
// there; returning false stops the integration early. Returns the stats.
template <class T, class F, class Obs>
Dopri5Stats dopri5_integrate(F&& f, std::vector<T>& y, const std::vector<double>& grid, const Dopri5Options& opt,
                             Obs&& observe) {
    // Butcher tableau.
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    Dopri5Stats st;
    if (grid.empty()) return st;
    const std::size_t n = y.size();
    std::vector<T> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), yt(n);
    // k7 reuses k2: the fifth-order weights and the error weights skip stage 2.
    std::vector<T>& k7 = k2;

    auto rhs = [&](double t, const std::vector<T>& in, std::vector<T>& out) {
        f(t, in.data(), out.data());
        ++st.rhs_calls;
    };

    double t = grid.front();
    rhs(t, y, k1);
    if (!observe(std::size_t{0}, t, y, k1)) return st;
    if (grid.size() == 1) return st;

    const double span = grid.back() - grid.front();
    auto err_scale = [&](const T& a, const T& b) {
        return opt.abs_tol + opt.rel_tol * std::max(detail::magnitude(a), detail::magnitude(b));
    };

    double h = opt.initial_step;
    if (h <= 0.0) {
        // Hairer-Norsett-Wanner starting step.
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc = err_scale(y[i], y[i]);
            d0 = std::max(d0, detail::magnitude(y[i]) / sc);
            d1 = std::max(d1, detail::magnitude(k1[i]) / sc);
        }
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
        h0 = std::min(h0, span);
        for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h0 * k1[i];
        rhs(t + h0, yt, k2);
        double d2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc = err_scale(y[i], y[i]);
            d2 = std::max(d2, detail::magnitude(k2[i] - k1[i]) / sc);
        }
        d2 /= h0;
        const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6 * span, h0 * 1e-3)
                                                    : std::pow(0.01 / std::max(d1, d2), 0.2);
        h = std::min(100.0 * h0, h1);
    }
    if (opt.max_step > 0.0) h = std::min(h, opt.max_step);

    const T* Y = nullptr;
    std::size_t next = 1;
    while (next < grid.size()) {
        const double target = grid[next];
        const double remaining = target - t;
        const bool clamped = h >= remaining;
        const double hs = clamped ? remaining : h;
        if (hs <= 1e-14 * std::max(std::abs(t), span)) {
            std::ostringstream os;
            os << "step size underflow at t = " << t << " (h = " << hs
               << "); the problem is too stiff for the requested tolerances (abs_tol = " << opt.abs_tol
               << ", rel_tol = " << opt.rel_tol << "), try relaxing them";
            throw StiffnessError(os.str());
        }
        if (opt.max_steps && st.accepted + st.rejected >= opt.max_steps) break;

        Y = y.data();
        T* yp = yt.data();
        const T *K1 = k1.data(), *K2 = k2.data(), *K3 = k3.data(), *K4 = k4.data(), *K5 = k5.data(),
                *K6 = k6.data();
        for (std::size_t i = 0; i < n; ++i) yp[i] = Y[i] + hs * (a21 * K1[i]);
        rhs(t + c2 * hs, yt, k2);
        for (std::size_t i = 0; i < n; ++i) yp[i] = Y[i] + hs * (a31 * K1[i] + a32 * K2[i]);
        rhs(t + c3 * hs, yt, k3);
        for (std::size_t i = 0; i < n; ++i) yp[i] = Y[i] + hs * (a41 * K1[i] + a42 * K2[i] + a43 * K3[i]);
        rhs(t + c4 * hs, yt, k4);
        for (std::size_t i = 0; i < n; ++i)
            yp[i] = Y[i] + hs * (a51 * K1[i] + a52 * K2[i] + a53 * K3[i] + a54 * K4[i]);
        rhs(t + c5 * hs, yt, k5);
        for (std::size_t i = 0; i < n; ++i)
            yp[i] = Y[i] + hs * (a61 * K1[i] + a62 * K2[i] + a63 * K3[i] + a64 * K4[i] + a65 * K5[i]);
        rhs(t + hs, yt, k6);
        for (std::size_t i = 0; i < n; ++i)
            yp[i] = Y[i] + hs * (b1 * K1[i] + b3 * K3[i] + b4 * K4[i] + b5 * K5[i] + b6 * K6[i]);
        const double t_new = clamped ? target : t + hs;
        rhs(t_new, yt, k7);
        const T* K7 = k7.data();

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const T e = hs * (e1 * K1[i] + e3 * K3[i] + e4 * K4[i] + e5 * K5[i] + e6 * K6[i] + e7 * K7[i]);
            err = std::max(err, detail::magnitude(e) / err_scale(Y[i], yp[i]));
        }

        if (!(err <= 1.0)) {
            ++st.rejected;
            if (!std::isfinite(err)) {
                h = 0.1 * hs;
            } else {
                h = hs * std::max(0.2, 0.9 * std::pow(err, -0.2));
            }
            // k2 was overwritten by k7; stage 2 is recomputed on the next attempt.
            continue;
        }

        ++st.accepted;
        st.last_step = hs;
        y.swap(yt);
        k1.swap(k7);
        t = t_new;
        const double grow = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
        // A clamped step says nothing about how large a free step could be.
        const double h_next = clamped ? std::max(h, hs * grow) : hs * grow;
        h = opt.max_step > 0.0 ? std::min(h_next, opt.max_step) : h_next;
        if (clamped) {
            if (!observe(next, t, y, k1)) return st;
            ++next;
        }
    }
    return st;
}

}  // namespace superrad
