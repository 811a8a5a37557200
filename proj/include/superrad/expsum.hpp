#pragma once

// Closed-form algebra over exponential sums
//
//     f(t) = sum_k c_k t^{p_k} exp(mu_k t)
//
// with complex coefficients and exponents. Products, primitives on [0, t] and
// the double integral against exp(-lambda |t' - t''|) stay inside the family,
// which is enough to write every two-atom propagator and overlap integral in
// closed form. A small polynomial power p_k appears only at degenerate
// exponents (mu -> 0 under integration, or collided characteristic roots).
//
// The scalar type is a template parameter so the same algebra can run in
// double, long double or quad precision (boost::multiprecision::complex128).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

namespace superrad {

namespace detail {

using std::abs;
template <class C>
using real_of = std::decay_t<decltype(abs(std::declval<const C&>()))>;

template <class C>
struct merge_factor {
    // Relative merge tolerance; tighter for scalars wider than long double.
    static double value() {
        return sizeof(real_of<C>) > sizeof(long double) || std::numeric_limits<real_of<C>>::digits > 64
                   ? 1e-20
                   : 1e-10;
    }
};

}  // namespace detail

template <class C>
struct ExpTerm {
    C coef;
    C exponent;
    int power = 0;
};

template <class C>
class BasicExpSum {
public:
    using complex_type = C;
    using real_type = detail::real_of<C>;
    using term_type = ExpTerm<C>;

    BasicExpSum() = default;

    explicit BasicExpSum(std::vector<term_type> terms) : terms_(std::move(terms)) { merge(); }

    static BasicExpSum constant(C c) { return BasicExpSum(std::vector<term_type>{{c, C(0), 0}}); }

    static BasicExpSum exponential(C coef, C exponent, int power = 0) {
        return BasicExpSum(std::vector<term_type>{{coef, exponent, power}});
    }

    const std::vector<term_type>& terms() const noexcept { return terms_; }
    std::size_t size() const noexcept { return terms_.size(); }
    bool empty() const noexcept { return terms_.empty(); }

    real_type max_abs_exponent() const {
        using std::abs;
        real_type m(0);
        for (const auto& tr : terms_) m = std::max<real_type>(m, abs(tr.exponent));
        return m;
    }

    // Exponents closer than this are treated as equal.
    real_type merge_tolerance() const { return real_type(detail::merge_factor<C>::value()) * max_abs_exponent(); }

    C operator()(real_type t) const { return eval(t); }

    C eval(real_type t) const {
        using std::exp;
        C sum(0);
        const C ct(t);
        for (const auto& tr : terms_) {
            C v = tr.coef * exp(tr.exponent * ct);
            for (int k = 0; k < tr.power; ++k) v *= ct;
            sum += v;
        }
        return sum;
    }

    // sum_k |c_k| t^{p_k} e^{Re(mu_k) t}: the magnitude scale against which
    // cancellation in eval(t) is measured.
    real_type envelope(real_type t) const {
        using std::abs;
        using std::exp;
        real_type sum(0);
        for (const auto& tr : terms_) {
            real_type v = abs(tr.coef) * exp(tr.exponent.real() * t);
            for (int k = 0; k < tr.power; ++k) v *= t;
            sum += v;
        }
        return sum;
    }

    BasicExpSum derivative() const {
        std::vector<term_type> out;
        out.reserve(2 * terms_.size());
        for (const auto& tr : terms_) {
            out.push_back({tr.coef * tr.exponent, tr.exponent, tr.power});
            if (tr.power > 0) out.push_back({tr.coef * C(tr.power), tr.exponent, tr.power - 1});
        }
        return BasicExpSum(std::move(out));
    }

    // F(t) = int_0^t f(s) ds.
    BasicExpSum integrate_0_to_t() const {
        using std::abs;
        const real_type zero_tol = merge_tolerance();
        std::vector<term_type> out;
        for (const auto& tr : terms_) {
            const int p = tr.power;
            if (abs(tr.exponent) <= zero_tol) {
                out.push_back({tr.coef / C(p + 1), C(0), p + 1});
                continue;
            }
            // int_0^t s^p e^{mu s} ds
            //   = e^{mu t} sum_k (-1)^k p!/(p-k)! t^{p-k} / mu^{k+1}  -  (-1)^p p! / mu^{p+1}
            const C inv_mu = C(1) / tr.exponent;
            C falling(1);  // p!/(p-k)!
            C inv_pow = inv_mu;
            for (int k = 0; k <= p; ++k) {
                const C sign = (k % 2 == 0) ? C(1) : C(-1);
                out.push_back({tr.coef * sign * falling * inv_pow, tr.exponent, p - k});
                if (k < p) {
                    falling *= C(p - k);
                    inv_pow *= inv_mu;
                }
            }
            const C sign_p = (p % 2 == 0) ? C(1) : C(-1);
            out.push_back({-tr.coef * sign_p * falling * inv_pow, C(0), 0});
        }
        return BasicExpSum(std::move(out));
    }

    // f(t) e^{shift t}
    BasicExpSum times_exponential(C shift) const {
        std::vector<term_type> out = terms_;
        for (auto& tr : out) tr.exponent += shift;
        return BasicExpSum(std::move(out));
    }

    BasicExpSum& operator+=(const BasicExpSum& o) {
        terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
        merge();
        return *this;
    }
    BasicExpSum& operator*=(C s) {
        for (auto& tr : terms_) tr.coef *= s;
        return *this;
    }

    friend BasicExpSum operator+(BasicExpSum a, const BasicExpSum& b) { return a += b; }
    friend BasicExpSum operator-(BasicExpSum a, const BasicExpSum& b) {
        BasicExpSum nb = b;
        nb *= C(-1);
        return a += nb;
    }
    friend BasicExpSum operator*(BasicExpSum a, C s) { return a *= s; }
    friend BasicExpSum operator*(C s, BasicExpSum a) { return a *= s; }

    friend BasicExpSum operator*(const BasicExpSum& f, const BasicExpSum& g) {
        std::vector<term_type> out;
        out.reserve(f.terms_.size() * g.terms_.size());
        for (const auto& a : f.terms_)
            for (const auto& b : g.terms_) out.push_back({a.coef * b.coef, a.exponent + b.exponent, a.power + b.power});
        return BasicExpSum(std::move(out));
    }

private:
    void merge() {
        using std::abs;
        const real_type tol = merge_tolerance();
        std::vector<term_type> merged;
        merged.reserve(terms_.size());
        for (const auto& tr : terms_) {
            auto it = std::find_if(merged.begin(), merged.end(), [&](const term_type& m) {
                return m.power == tr.power && abs(m.exponent - tr.exponent) <= tol;
            });
            if (it == merged.end()) {
                merged.push_back(tr);
            } else {
                it->coef += tr.coef;
            }
        }
        std::erase_if(merged, [](const term_type& m) { return m.coef == C(0); });
        terms_ = std::move(merged);
    }

    std::vector<term_type> terms_;
};

using ExpSum = BasicExpSum<std::complex<double>>;

// K(t) = e^{-lambda t} int_0^t e^{lambda s} g(s) ds, the causal exponential
// smoothing of g.
template <class C>
BasicExpSum<C> causal_exponential_filter(const BasicExpSum<C>& g, C lambda) {
    return g.times_exponential(lambda).integrate_0_to_t().times_exponential(-lambda);
}

// D(t) = int_0^t int_0^t f(t') e^{-lambda |t' - t''|} g(t'') dt' dt'' in closed
// form. The square is split along the diagonal so each half has an ordered
// kernel without the absolute value.
template <class C>
BasicExpSum<C> abs_kernel_double_integral(const BasicExpSum<C>& f, const BasicExpSum<C>& g, C lambda) {
    auto upper = (f * causal_exponential_filter(g, lambda)).integrate_0_to_t();
    auto lower = (g * causal_exponential_filter(f, lambda)).integrate_0_to_t();
    return upper + lower;
}

template <class C>
C convolve_abs_kernel(const BasicExpSum<C>& f, const BasicExpSum<C>& g, typename BasicExpSum<C>::real_type lambda,
                      typename BasicExpSum<C>::real_type t) {
    if (lambda < 0) throw std::invalid_argument("convolve_abs_kernel: lambda must be non-negative");
    if (t < 0) throw std::invalid_argument("convolve_abs_kernel: t must be non-negative");
    return abs_kernel_double_integral(f, g, C(lambda))(t);
}

namespace detail {

// Dense Gaussian elimination with partial pivoting; a is row-major n x n.
template <class C>
std::vector<C> solve_dense(std::vector<C> a, std::vector<C> b) {
    using std::abs;
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (abs(a[r * n + col]) > abs(a[piv * n + col])) piv = r;
        if (a[piv * n + col] == C(0)) throw std::runtime_error("solve_dense: singular system");
        if (piv != col) {
            for (std::size_t k = 0; k < n; ++k) std::swap(a[piv * n + k], a[col * n + k]);
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const C f = a[r * n + col] / a[col * n + col];
            if (f == C(0)) continue;
            for (std::size_t k = col; k < n; ++k) a[r * n + k] -= f * a[col * n + k];
            b[r] -= f * b[col];
        }
    }
    std::vector<C> x(n);
    for (std::size_t i = n; i-- > 0;) {
        C s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i * n + k] * x[k];
        x[i] = s / a[i * n + i];
    }
    return x;
}

}  // namespace detail

// Root with multiplicity after clustering.
template <class C>
struct RootCluster {
    C root;
    int multiplicity = 1;
};

// Groups roots closer than rel_tol * max|root| (absolute floor abs_floor).
template <class C>
std::vector<RootCluster<C>> cluster_roots(const std::vector<C>& roots, double rel_tol, double abs_floor = 0.0) {
    using std::abs;
    using R = detail::real_of<C>;
    R scale(0);
    for (const auto& r : roots) scale = std::max<R>(scale, abs(r));
    const R tol = std::max<R>(R(rel_tol) * scale, R(abs_floor));
    std::vector<RootCluster<C>> out;
    std::vector<C> sums;
    for (const auto& r : roots) {
        bool joined = false;
        for (std::size_t k = 0; k < out.size(); ++k) {
            if (abs(out[k].root - r) <= tol) {
                sums[k] += r;
                ++out[k].multiplicity;
                out[k].root = sums[k] / C(out[k].multiplicity);
                joined = true;
                break;
            }
        }
        if (!joined) {
            out.push_back({r, 1});
            sums.push_back(r);
        }
    }
    return out;
}

// Solution of the constant-coefficient linear ODE whose characteristic roots
// are `clusters`, matching f^{(n)}(0) = initial[n] for n = 0..order-1.
// Repeated roots contribute t^k e^{rt} terms.
template <class C>
BasicExpSum<C> linear_ode_solution(const std::vector<RootCluster<C>>& clusters, const std::vector<C>& initial) {
    struct Basis {
        C root;
        int power;
    };
    std::vector<Basis> basis;
    for (const auto& c : clusters)
        for (int k = 0; k < c.multiplicity; ++k) basis.push_back({c.root, k});
    const std::size_t n = basis.size();
    if (initial.size() != n) throw std::invalid_argument("linear_ode_solution: need one initial value per root");

    std::vector<C> a(n * n, C(0));
    for (std::size_t row = 0; row < n; ++row) {
        for (std::size_t col = 0; col < n; ++col) {
            const int k = basis[col].power;
            const int m = static_cast<int>(row);
            if (m < k) continue;
            // d^m/dt^m [t^k e^{rt}] at 0 = m!/(m-k)! r^{m-k}
            C falling(1);
            for (int j = 0; j < k; ++j) falling *= C(m - j);
            C rp(1);
            for (int j = 0; j < m - k; ++j) rp *= basis[col].root;
            a[row * n + col] = falling * rp;
        }
    }
    const auto x = detail::solve_dense(a, initial);
    std::vector<ExpTerm<C>> terms;
    for (std::size_t col = 0; col < n; ++col) terms.push_back({x[col], basis[col].root, basis[col].power});
    return BasicExpSum<C>(std::move(terms));
}

}  // namespace superrad
