#pragma once

// Independent reference computations for the tests. Nothing here reuses the
// library's block layout or integrator.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace oracle {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;

// Adaptive Gauss-Kronrod on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                        unsigned depth = 8) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, depth, tol);
}

// Atoms (Dicke ladder |m>, m = 0..N) times a Fock mode truncated at K quanta,
// evolving under H = g (J+ b + J- b^dag) and L = sqrt(2 lambda) b, with
// g = gamma0/sqrt2. Index of |m>|k> is m (K+1) + k.
struct DickeFockModel {
    int n = 1, k = 1;
    double gamma0 = 1e-3, lambda = 0.0;
    Mat h, l, n_atoms;

    DickeFockModel(int n_atoms_, int k_max, double g0, double lam) : n(n_atoms_), k(k_max), gamma0(g0), lambda(lam) {
        const int d = (n + 1) * (k + 1);
        h = Mat::Zero(d, d);
        l = Mat::Zero(d, d);
        n_atoms = Mat::Zero(d, d);
        const double g = gamma0 / std::sqrt(2.0);
        for (int m = 0; m <= n; ++m)
            for (int q = 0; q <= k; ++q) {
                const int i = idx(m, q);
                n_atoms(i, i) = m;
                if (q >= 1) l(idx(m, q - 1), i) = std::sqrt(2.0 * lambda * q);
                // J+ b : |m>|q> -> sqrt((m+1)(N-m)) sqrt(q) |m+1>|q-1>
                if (m < n && q >= 1) {
                    const double amp = g * std::sqrt((m + 1.0) * (n - m)) * std::sqrt(static_cast<double>(q));
                    h(idx(m + 1, q - 1), i) += amp;
                    h(i, idx(m + 1, q - 1)) += amp;
                }
            }
    }

    int idx(int m, int q) const { return m * (k + 1) + q; }
    int dim() const { return (n + 1) * (k + 1); }

    Mat generator(const Mat& rho) const {
        const cd I(0, 1);
        Mat out = -I * (h * rho - rho * h);
        const Mat ld = l.adjoint();
        out += l * rho * ld - 0.5 * (ld * l * rho + rho * ld * l);
        return out;
    }

    // Classical RK4 with a fixed step; returns states at the requested times.
    std::vector<Mat> evolve(Mat rho, const std::vector<double>& times, double dt) const {
        std::vector<Mat> out;
        double t = 0.0;
        for (double target : times) {
            while (t < target - 1e-12) {
                const double h_ = std::min(dt, target - t);
                const Mat k1 = generator(rho);
                const Mat k2 = generator(rho + 0.5 * h_ * k1);
                const Mat k3 = generator(rho + 0.5 * h_ * k2);
                const Mat k4 = generator(rho + h_ * k3);
                rho += (h_ / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                t += h_;
            }
            out.push_back(rho);
        }
        return out;
    }

    // |N>|0><N|0|.
    Mat excited() const {
        Mat r = Mat::Zero(dim(), dim());
        r(idx(n, 0), idx(n, 0)) = 1.0;
        return r;
    }

    // Partial trace over the mode; (N+1)x(N+1) atomic state.
    Mat atoms(const Mat& rho) const {
        Mat r = Mat::Zero(n + 1, n + 1);
        for (int a = 0; a <= n; ++a)
            for (int b = 0; b <= n; ++b)
                for (int q = 0; q <= k; ++q) r(a, b) += rho(idx(a, q), idx(b, q));
        return r;
    }

    double intensity(const Mat& rho) const { return -(n_atoms * generator(rho)).trace().real(); }
};

}  // namespace oracle
