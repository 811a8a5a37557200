#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "superrad/analytic.hpp"

namespace superrad {

namespace {

// Roots closer than this (relative to the largest) are treated as repeated.
constexpr double kClusterTol = 1e-8;

template <class C>
using Real = typename BasicExpSum<C>::real_type;

// Roots of s^2 + b s + c with the small root taken from the product so that
// b >> sqrt(c) loses nothing to cancellation.
template <class C>
std::vector<C> quadratic_roots(C b, C c) {
    using std::sqrt;
    const C disc = sqrt(b * b - C(4) * c);
    const C big = -(b + disc) / C(2);
    return {big, c / big};
}

template <class C>
C cubic_value(const std::array<C, 4>& a, C z) {
    return ((z + a[2]) * z + a[1]) * z + a[0];
}

// Roots of z^3 + 3 l z^2 + (2 l^2 + 3) z + 2 l in units of gamma0
// (l = lambda / gamma0): companion-matrix eigenvalues in double, then Newton
// in the target precision.
template <class C>
std::array<C, 3> zeta_cubic_roots(double l) {
    using std::abs;
    const std::array<C, 4> a{C(2) * C(l), C(2) * C(l) * C(l) + C(3), C(3) * C(l), C(1)};
    Eigen::Matrix3d comp;
    comp << -3.0 * l, -(2.0 * l * l + 3.0), -2.0 * l, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
    Eigen::EigenSolver<Eigen::Matrix3d> es(comp, false);
    const auto ev = es.eigenvalues();

    const Real<C> eps = std::numeric_limits<Real<C>>::epsilon();
    std::array<C, 3> roots;
    for (int k = 0; k < 3; ++k) {
        C z(ev[k].real(), ev[k].imag());
        // A double-precision seed needs more than one step to reach quad accuracy;
        // iterate while the correction keeps shrinking.
        Real<C> last = std::numeric_limits<Real<C>>::infinity();
        for (int it = 0; it < 6; ++it) {
            const C dp = (C(3) * z + C(2) * a[2]) * z + a[1];
            if (dp == C(0)) break;
            const C dz = cubic_value(a, z) / dp;
            const Real<C> m = abs(dz);
            if (!(m < last)) break;
            z -= dz;
            last = m;
            if (m <= Real<C>(4) * eps * abs(z)) break;
        }
        const Real<C> az = abs(z);
        const Real<C> scale = az * az * az + Real<C>(3 * l) * az * az + Real<C>(2 * l * l + 3) * az + Real<C>(2 * l);
        if (abs(cubic_value(a, z)) > Real<C>(1e-10) * scale) {
            std::ostringstream os;
            os << "zeta cubic root residual too large at lambda/gamma0 = " << l;
            throw InvariantError(os.str());
        }
        roots[k] = z;
    }
    return roots;
}

template <class C>
void check_near(const C& got, double want, double scale, const char* what) {
    using std::abs;
    if (abs(got - C(want)) > Real<C>(1e-10 * scale)) {
        std::ostringstream os;
        os << "pair propagator invariant violated: " << what << " = " << to_cdouble(got) << ", expected " << want;
        throw InvariantError(os.str());
    }
}

template <class C>
Real<C> checked(const BasicExpSum<C>& f, Real<C> t, const char* what) {
    using std::abs;
    const C v = f(t);
    const Real<C> env = f.envelope(t);
    if (abs(v.imag()) > Real<C>(1e-9) * std::max<Real<C>>(abs(v.real()), env)) {
        std::ostringstream os;
        os << what << ": imaginary residue " << static_cast<double>(v.imag()) << " at t = " << static_cast<double>(t);
        throw ImaginaryResidueError(os.str());
    }
    return v.real();
}

// f(t - s) h(s) = sum_a A_a(t) B_a(s).
template <class C>
void separate(const BasicExpSum<C>& f, const BasicExpSum<C>& h,
              std::vector<std::pair<BasicExpSum<C>, BasicExpSum<C>>>& out) {
    using E = BasicExpSum<C>;
    for (const auto& tr : f.terms()) {
        const int p = tr.power;
        long long binom = 1;  // C(p, k)
        for (int k = 0; k <= p; ++k) {
            const C sign = ((p - k) % 2 == 0) ? C(1) : C(-1);
            out.emplace_back(E::exponential(tr.coef * C(static_cast<double>(binom)), tr.exponent, k),
                             E::exponential(sign, -tr.exponent, p - k) * h);
            binom = binom * (p - k) / (k + 1);
        }
    }
}

}  // namespace

double degenerate_lambda_sq_over_gamma0_sq() {
    return 1.5 * (2.0 + std::cbrt(3.0 - 2.0 * std::sqrt(2.0)) + std::cbrt(3.0 + 2.0 * std::sqrt(2.0)));
}

template <class C>
BasicPairPropagators<C> build_pair_propagators_t(const SystemParams& raw, DegeneratePolicy policy) {
    const SystemParams p = validate_params(raw);
    const C g0(p.gamma0);
    const C lam(p.lambda);
    const C g2 = g0 * g0;

    BasicPairPropagators<C> out;
    const auto ups_roots = cluster_roots(quadratic_roots(lam, g2), kClusterTol);
    out.upsilon = linear_ode_solution(ups_roots, {C(1), C(0)});
    out.eta = linear_ode_solution(ups_roots, {C(0), C(1)});
    out.phi = linear_ode_solution(cluster_roots(quadratic_roots(lam, C(2) * g2), kClusterTol), {C(1), C(0)});

    const auto w = zeta_cubic_roots<C>(p.lambda / p.gamma0);
    std::vector<C> z(3);
    for (int k = 0; k < 3; ++k) {
        z[k] = w[k] * g0;
        out.roots[k] = z[k];
    }
    const auto clusters = cluster_roots(z, kClusterTol);
    out.degenerate = clusters.size() < 3;
    if (out.degenerate && policy == DegeneratePolicy::strict) {
        const double crit = degenerate_lambda_sq_over_gamma0_sq();
        std::ostringstream os;
        os << "two roots of the zeta cubic coincide at lambda/gamma0 = " << p.lambda / p.gamma0
           << " (critical lambda^2 = " << crit << " gamma0^2)";
        throw DegenerateParametersError(crit, os.str());
    }
    out.zeta = linear_ode_solution(clusters, {C(1), C(0), -g2});

    const double rate = p.gamma0;
    check_near(out.upsilon(0), 1.0, 1.0, "upsilon(0)");
    check_near(out.zeta(0), 1.0, 1.0, "zeta(0)");
    check_near(out.phi(0), 1.0, 1.0, "phi(0)");
    check_near(out.eta(0), 0.0, 1.0 / rate, "eta(0)");
    const auto dz = out.zeta.derivative();
    check_near(dz(0), 0.0, rate, "zeta'(0)");
    check_near(dz.derivative()(0), -p.gamma0 * p.gamma0, rate * rate, "zeta''(0)");
    return out;
}

template <class C>
BasicPairSolution<C>::BasicPairSolution(const SystemParams& raw, DegeneratePolicy policy)
    : params_(validate_params(raw)), prop_(build_pair_propagators_t<C>(raw, policy)) {
    using E = BasicExpSum<C>;
    const C lam(params_.lambda);
    const C g2 = C(params_.gamma0) * C(params_.gamma0);

    dupsilon_ = prop_.upsilon.derivative();
    dzeta_ = prop_.zeta.derivative();

    // Kernel K(t, s) = upsilon(t - s) zeta(s) + eta(t - s) zeta'(s) in separable form.
    std::vector<std::pair<E, E>> k;
    separate(prop_.upsilon, prop_.zeta, k);
    separate(prop_.eta, dzeta_, k);

    E i2, i1;
    for (std::size_t a = 0; a < k.size(); ++a) {
        i1 += k[a].first * abs_kernel_double_integral(prop_.upsilon, k[a].second, lam);
        for (std::size_t b = a; b < k.size(); ++b) {
            E d = k[a].first * k[b].first * abs_kernel_double_integral(k[a].second, k[b].second, lam);
            if (b != a) d *= C(2);
            i2 += d;
        }
    }
    i1_ = g2 * i1;
    i2_ = g2 * i2;
    di1_ = i1_.derivative();
    di2_ = i2_.derivative();
    excitation_ = C(2) * prop_.zeta * prop_.zeta + i2_;
    intensity_ = C(-params_.omega0) * excitation_.derivative();
}

template <class C>
typename BasicPairSolution<C>::Sample BasicPairSolution<C>::sample(real_type t) const {
    using std::abs;
    Sample s{};
    s.upsilon = checked(prop_.upsilon, t, "upsilon");
    s.dupsilon = checked(dupsilon_, t, "upsilon'");
    s.zeta = checked(prop_.zeta, t, "zeta");
    s.dzeta = checked(dzeta_, t, "zeta'");
    s.i1 = checked(i1_, t, "I1");
    s.di1 = checked(di1_, t, "I1'");
    s.i2 = checked(i2_, t, "I2");
    s.di2 = checked(di2_, t, "I2'");
    // A propagator is treated as vanishing when it has cancelled to 1e-12 of
    // its term envelope; ordinary exponential decay does not trigger this.
    const real_type guard(1e-12);
    s.upsilon_vanishes = abs(s.upsilon) < guard * prop_.upsilon.envelope(t);
    s.zeta_vanishes = abs(s.zeta) < guard * prop_.zeta.envelope(t);
    s.singular = s.upsilon_vanishes || s.zeta_vanishes;
    return s;
}

template <class C>
GammaValues gamma_values(const BasicPairSolution<C>& sol, double t) {
    using R = typename BasicPairSolution<C>::real_type;
    const auto s = sol.sample(R(t));
    const R r = s.dupsilon / s.upsilon;
    const R g11 = (s.di2 - R(2) * r * s.i2) / (s.zeta * s.zeta);
    const R g22 = R(-2) * r;
    const R g33 = R(-2) * s.dzeta / s.zeta - g11;
    const R g12 = (s.di1 - r * s.i1) / (s.zeta * s.upsilon);
    GammaValues out{static_cast<double>(g11), static_cast<double>(g22), static_cast<double>(g33),
                    static_cast<double>(g12), s.singular};
    if (out.singular) {
        // Entries that divide by a vanished propagator are reported as signed infinities.
        auto inf = [](double v) { return std::copysign(std::numeric_limits<double>::infinity(), v); };
        out.g11 = inf(out.g11);
        out.g33 = inf(out.g33);
        out.g12 = inf(out.g12);
        if (s.upsilon_vanishes) out.g22 = inf(out.g22);
    }
    return out;
}

template struct BasicPairPropagators<ExtComplex>;
template struct BasicPairPropagators<QuadComplex>;
template BasicPairPropagators<ExtComplex> build_pair_propagators_t<ExtComplex>(const SystemParams&, DegeneratePolicy);
template BasicPairPropagators<QuadComplex> build_pair_propagators_t<QuadComplex>(const SystemParams&,
                                                                                DegeneratePolicy);
template class BasicPairSolution<ExtComplex>;
template class BasicPairSolution<QuadComplex>;
template GammaValues gamma_values<ExtComplex>(const BasicPairSolution<ExtComplex>&, double);
template GammaValues gamma_values<QuadComplex>(const BasicPairSolution<QuadComplex>&, double);

PairPropagators build_pair_propagators(const SystemParams& p, DegeneratePolicy policy) {
    return build_pair_propagators_t<ExtComplex>(p, policy);
}

OverlapIntegrals pair_overlap_integrals(const PairSolution& sol, double t) {
    if (t < 0.0) throw ParamError("t", "invariant violated: t ≥ 0");
    return {static_cast<double>(checked(sol.i1(), static_cast<long double>(t), "I1")),
            static_cast<double>(checked(sol.i2(), static_cast<long double>(t), "I2"))};
}

PairPopulations pair_populations(const PairSolution& sol, double t) {
    if (t < 0.0) throw ParamError("t", "invariant violated: t ≥ 0");
    const long double lt = t;
    const long double z = checked(sol.propagators().zeta, lt, "zeta");
    const long double i2 = checked(sol.i2(), lt, "I2");
    return {static_cast<double>(z * z), static_cast<double>(i2), static_cast<double>(1.0L - z * z - i2)};
}

double pair_excitation(const PairSolution& sol, double t) {
    if (t < 0.0) throw ParamError("t", "invariant violated: t ≥ 0");
    return static_cast<double>(checked(sol.excitation(), static_cast<long double>(t), "excitation"));
}

double pair_intensity(const PairSolution& sol, double t) {
    if (t < 0.0) throw ParamError("t", "invariant violated: t ≥ 0");
    return static_cast<double>(checked(sol.intensity(), static_cast<long double>(t), "intensity"));
}

GammaMatrix::GammaMatrix(const SystemParams& p, Precision precision, DegeneratePolicy policy) {
    if (precision == Precision::quad) {
        auto sol = std::make_shared<const QuadPairSolution>(p, policy);
        degenerate_ = sol->propagators().degenerate;
        eval_ = [sol](double t) { return gamma_values(*sol, t); };
    } else {
        auto sol = std::make_shared<const PairSolution>(p, policy);
        degenerate_ = sol->propagators().degenerate;
        eval_ = [sol](double t) { return gamma_values(*sol, t); };
    }
}

}  // namespace superrad
