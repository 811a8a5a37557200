#pragma once

// Closed-form dynamics: the single emitter, the emitter pair started in |2>,
// and the Markovian references (mean-field burst and Dicke cascade).

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "superrad/expsum.hpp"
#include "superrad/model.hpp"
#include "superrad/precision.hpp"

namespace superrad {

// ---- single emitter -------------------------------------------------------

// Time-dependent decay rate 2 gamma0^2 / (lambda + Omega1 coth(Omega1 t / 2)).
// Throws PoleError within 1e-6/|Omega1| of a pole (only for lambda < sqrt2 gamma0).
double single_decay_rate(const SystemParams& p, double t);

// Pole times t_n <= t_end of the single-emitter rate; empty unless lambda < sqrt2 gamma0.
std::vector<double> single_rate_poles(const SystemParams& p, double t_end);

// Excited-state population |c(t)|^2 and the radiated intensity -omega0 d|c|^2/dt.
double single_excitation(const SystemParams& p, double t);
double single_intensity(const SystemParams& p, double t);

struct Extremum {
    double t = 0.0;
    double intensity = 0.0;
};

struct SingleExtrema {
    Extremum max;
    std::optional<Extremum> min;  // present only when lambda < sqrt2 gamma0
};

SingleExtrema single_extrema(const SystemParams& p);

// ---- emitter pair ---------------------------------------------------------

enum class DegeneratePolicy {
    confluent,  // collided cubic roots become t e^{zt} terms and are flagged
    strict,     // collided cubic roots raise DegenerateParametersError
};

// lambda^2 / gamma0^2 at which two roots of the zeta characteristic cubic coincide.
double degenerate_lambda_sq_over_gamma0_sq();

template <class C>
struct BasicPairPropagators {
    BasicExpSum<C> upsilon;  // single-excitation amplitude, roots of s^2 + lambda s + gamma0^2
    BasicExpSum<C> zeta;     // doubly excited amplitude
    BasicExpSum<C> eta;      // inverse Laplace transform of 1/(s^2 + lambda s + gamma0^2)
    BasicExpSum<C> phi;      // roots of s^2 + lambda s + 2 gamma0^2
    std::array<C, 3> roots{};  // roots of the zeta cubic
    bool degenerate = false;   // two cubic roots merged
};

template <class C>
BasicPairPropagators<C> build_pair_propagators_t(const SystemParams& p,
                                                DegeneratePolicy policy = DegeneratePolicy::confluent);

// All closed forms for the pair started in |2><2| with the field in vacuum.
template <class C>
class BasicPairSolution {
public:
    using complex_type = C;
    using real_type = typename BasicExpSum<C>::real_type;

    explicit BasicPairSolution(const SystemParams& p, DegeneratePolicy policy = DegeneratePolicy::confluent);

    const SystemParams& params() const noexcept { return params_; }
    const BasicPairPropagators<C>& propagators() const noexcept { return prop_; }
    const BasicExpSum<C>& i1() const noexcept { return i1_; }
    const BasicExpSum<C>& i2() const noexcept { return i2_; }
    const BasicExpSum<C>& di1() const noexcept { return di1_; }
    const BasicExpSum<C>& di2() const noexcept { return di2_; }
    const BasicExpSum<C>& excitation() const noexcept { return excitation_; }
    const BasicExpSum<C>& intensity() const noexcept { return intensity_; }

    struct Sample {
        real_type upsilon, dupsilon, zeta, dzeta, i1, di1, i2, di2;
        bool upsilon_vanishes = false;
        bool zeta_vanishes = false;
        bool singular = false;  // either propagator below the zero guard
    };

    // Real values at t, each checked for imaginary residue.
    Sample sample(real_type t) const;

private:
    SystemParams params_;
    BasicPairPropagators<C> prop_;
    BasicExpSum<C> dupsilon_, dzeta_;
    BasicExpSum<C> i1_, i2_, di1_, di2_, excitation_, intensity_;
};

using PairPropagators = BasicPairPropagators<ExtComplex>;
using PairSolution = BasicPairSolution<ExtComplex>;
using QuadPairSolution = BasicPairSolution<QuadComplex>;

extern template class BasicPairSolution<ExtComplex>;
extern template class BasicPairSolution<QuadComplex>;

PairPropagators build_pair_propagators(const SystemParams& p, DegeneratePolicy policy = DegeneratePolicy::confluent);

struct OverlapIntegrals {
    double i1 = 0.0;
    double i2 = 0.0;
};

OverlapIntegrals pair_overlap_integrals(const PairSolution& sol, double t);

struct PairPopulations {
    double p2 = 0.0;  // zeta^2
    double p1 = 0.0;  // I2
    double p0 = 0.0;
};

PairPopulations pair_populations(const PairSolution& sol, double t);
double pair_excitation(const PairSolution& sol, double t);
double pair_intensity(const PairSolution& sol, double t);

struct GammaValues {
    double g11 = 0.0, g22 = 0.0, g33 = 0.0, g12 = 0.0;
    bool singular = false;  // a propagator vanished; affected entries are +-inf
};

// Time-local master-equation coefficients of the pair. Gamma13 = Gamma23 = 0
// and Gamma21 = Gamma12.
class GammaMatrix {
public:
    explicit GammaMatrix(const SystemParams& p, Precision precision = Precision::extended,
                         DegeneratePolicy policy = DegeneratePolicy::confluent);
    GammaValues operator()(double t) const { return eval_(t); }
    bool degenerate() const noexcept { return degenerate_; }

private:
    std::function<GammaValues(double)> eval_;
    bool degenerate_ = false;
};

template <class C>
GammaValues gamma_values(const BasicPairSolution<C>& sol, double t);

struct CanonicalRates {
    double g1 = 0.0, g2 = 0.0, g3 = 0.0;  // g1 >= g2
};

struct NonCanonicalRates {
    double g1 = 0.0, g2 = 0.0, g3 = 0.0, g4 = 0.0;
};

CanonicalRates canonical_rates(const GammaValues& g);
CanonicalRates canonical_rates(const GammaMatrix& g, double t);
NonCanonicalRates noncanonical_rates(const GammaValues& g);
NonCanonicalRates noncanonical_rates(const GammaMatrix& g, double t);

// ---- Markovian references ---------------------------------------------------

// omega0 gamma_M N^2/4 sech^2(gamma_M N (t - t0)/2), t0 = ln(N+1)/(N gamma_M).
double meanfield_intensity(const SystemParams& p, double t);
double meanfield_peak_time(const SystemParams& p);

struct CascadeOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    // Stop once the intensity has fallen below this fraction of its running
    // maximum (0 disables). Used when only the first burst matters.
    double stop_below_peak_fraction = 0.0;
};

// Dicke-ladder population cascade under the Markovian master equation.
IntensityTrace markovian_cascade(const SystemParams& p, const std::vector<double>& grid,
                                 const CascadeOptions& opt = {});

}  // namespace superrad
