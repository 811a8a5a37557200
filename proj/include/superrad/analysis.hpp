#pragma once

// Derived quantities built on the solvers: regime classification, critical
// spectral width, local peak exponents, reabsorption scans, relaxation time
// and the large-lambda eternal non-Markovianity check.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "superrad/analytic.hpp"
#include "superrad/model.hpp"
#include "superrad/pseudomode.hpp"

namespace superrad {

enum class Regime { markovian, critical_pulsed, non_markovian };

const char* regime_name(Regime r);

struct RegimeReport {
    Regime regime = Regime::markovian;
    double min_intensity = 0.0;
    double t_min = 0.0;
    double max_intensity = 0.0;
    double t_max = 0.0;
    std::vector<double> zero_touch_times;  // interior minima inside [-eps, eps]
    double eps_intensity = 0.0;
};

// Intensity threshold 1e-5 omega0 gamma0 N separating a touch from a dip.
double default_intensity_threshold(const SystemParams& p);

// Search window: the shorter of the horizon cap and five collective Rabi
// periods 2 pi / (sqrt(N) gamma0).
double analysis_window(const SystemParams& p);

RegimeReport classify_regime(const IntensityTrace& trace, double eps_intensity);

// Where a trace for analysis comes from.
enum class TraceSource {
    automatic,   // closed forms for N <= 2, pseudomode otherwise
    analytic,
    pseudomode,
};

struct AnalysisOptions {
    TraceSource source = TraceSource::automatic;
    std::size_t n_samples = 2001;
    std::optional<double> eps_intensity;  // default_intensity_threshold when unset
    EvolveOptions evolve;                 // used by the pseudomode path
    std::size_t threads = 0;              // sweep parallelism; 0 = SUPERRAD_THREADS or hardware
};

// Trace over the analysis window from the chosen source.
IntensityTrace analysis_trace(const SystemParams& p, const AnalysisOptions& opt = {});

// Convenience: trace + classification.
RegimeReport regime_of(const SystemParams& p, const AnalysisOptions& opt = {});

struct CriticalLambdaResult {
    double lambda_crit = 0.0;  // absolute, units of omega0
    double lambda_crit_over_gamma0 = 0.0;
    double lo = 0.0, hi = 0.0;  // final bracket, absolute
    int evaluations = 0;
    double eps_intensity = 0.0;
    std::string method;
};

struct Bracket {
    double lo_over_gamma0 = 0.1;
    double hi_over_gamma0 = 0.0;  // 0 = 2 sqrt(N)
};

// Bisection on "the first reabsorption dip goes below -eps" down to a
// relative bracket width rel_width. N = 1 uses the closed-form minimum, which
// exists exactly for lambda < sqrt2 gamma0.
CriticalLambdaResult find_critical_lambda(const SystemParams& p_base, const Bracket& bracket = {},
                                          const AnalysisOptions& opt = {}, double rel_width = 1e-3);

// Critical widths for several N, run in parallel; results follow n_list order.
std::vector<CriticalLambdaResult> critical_lambda_scan(const SystemParams& p_base, const std::vector<int>& n_list,
                                                       const AnalysisOptions& opt = {}, double rel_width = 1e-3);

enum class ExponentSource { pseudomode, markovian_cascade };

struct ExponentRow {
    int n_m = 0, n_m1 = 0;
    double max_intensity_m = 0.0, max_intensity_m1 = 0.0;
    double nu = 0.0;
};

struct ExponentTable {
    std::vector<ExponentRow> rows;
    std::vector<double> peak_times;  // per entry of n_list
};

// Peak of the first burst for one N, refined by a parabola through the grid maximum.
Extremum peak_intensity(const SystemParams& p, ExponentSource source, const AnalysisOptions& opt = {});

ExponentTable local_exponent(const SystemParams& p_base, const std::vector<int>& n_list,
                             ExponentSource source = ExponentSource::pseudomode, const AnalysisOptions& opt = {});

struct ReabsorptionRow {
    int n = 0;
    double lambda_over_gamma0 = 0.0;
    double abs_min_intensity = 0.0;
    double t_min = 0.0;
    std::optional<double> slope;  // log-log slope in N from the previous N at the same lambda
};

std::vector<ReabsorptionRow> reabsorption_scan(const SystemParams& p_base, const std::vector<int>& n_list,
                                               const std::vector<double>& lambda_over_gamma0_list,
                                               const AnalysisOptions& opt = {});

struct RelaxationTime {
    double tau_r = 0.0;              // 2 / (N gamma_M)
    double markov_indicator = 0.0;   // lambda / (sqrt(N) gamma0); < 1 means non-Markovian behaviour expected
};

RelaxationTime relaxation_time(const SystemParams& p);

// G(tau) = e^{-3tau}/3 {1 + e^tau [2tau - 5 + e^tau (4tau^2 - 2tau + 7)]} - 1,
// evaluated from the series of e^{3tau} G(tau) near 0 to avoid cancellation.
double eternal_g(double tau);

struct EternalNmSample {
    double t = 0.0;
    double tau = 0.0;
    double gamma3 = 0.0;
    double leading = 0.0;  // 3 gamma0^6/lambda^5 G(lambda t)
    double rel_residual = 0.0;
};

struct EternalNmReport {
    double gamma0 = 0.0, lambda = 0.0;
    double g_at_zero = 0.0;
    double g_at_large = 0.0;  // G(200)
    bool g_negative = true;   // G < 0 on every tau grid point > 0
    double g_max = 0.0;       // largest G on the grid (tau > 0)
    bool gamma3_negative = true;
    double residual_at_tau1 = 0.0;
    std::vector<EternalNmSample> samples;
};

// Uniform tau grid on (0, 20] with n points.
std::vector<double> default_tau_grid(std::size_t n = 1000);

// Exact gamma3 (quad precision) against the leading-order expansion on the
// given times, plus the sign checks on G.
EternalNmReport eternal_nm_check(double gamma0, double lambda, const std::vector<double>& t_grid);

// Worker count: explicit value, else SUPERRAD_THREADS, else hardware threads.
std::size_t resolve_threads(std::size_t requested);

// Runs job(i) for i in [0, n) on up to `threads` workers. Exceptions are
// rethrown on the calling thread (first failing index wins).
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job);

// Extremum of samples around index k by a parabola through k-1, k, k+1.
Extremum refine_extremum(const std::vector<double>& t, const std::vector<double>& y, std::size_t k);

}  // namespace superrad
