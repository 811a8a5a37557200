#include "superrad/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace superrad {

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::markovian: return "markovian";
        case Regime::critical_pulsed: return "critical_pulsed";
        default: return "non_markovian";
    }
}

double default_intensity_threshold(const SystemParams& raw) {
    const SystemParams p = validate_params(raw);
    return 1e-5 * p.omega0 * p.gamma0 * p.n_atoms;
}

double analysis_window(const SystemParams& raw) {
    const SystemParams p = validate_params(raw);
    const double periods = 5.0 * 2.0 * M_PI / (std::sqrt(static_cast<double>(p.n_atoms)) * p.gamma0);
    return std::min(horizon_cap(p), periods);
}

Extremum refine_extremum(const std::vector<double>& t, const std::vector<double>& y, std::size_t k) {
    if (k == 0 || k + 1 >= t.size()) return {t[k], y[k]};
    const double t0 = t[k - 1], t1 = t[k], t2 = t[k + 1];
    const double y0 = y[k - 1], y1 = y[k], y2 = y[k + 1];
    // Divided differences of the interpolating parabola.
    const double d01 = (y1 - y0) / (t1 - t0);
    const double d12 = (y2 - y1) / (t2 - t1);
    const double a = (d12 - d01) / (t2 - t0);
    if (a == 0.0) return {t1, y1};
    const double b = d01 - a * (t0 + t1);
    double tv = -b / (2.0 * a);
    tv = std::clamp(tv, t0, t2);
    const double yv = y1 + (tv - t1) * (d01 + a * (tv - t0));
    return {tv, yv};
}

RegimeReport classify_regime(const IntensityTrace& tr, double eps) {
    const auto& t = tr.times;
    const auto& y = tr.intensity;
    const std::size_t n = y.size();
    if (n < 3) throw IncompleteTraceError("trace has fewer than three samples");

    std::size_t kmax = 0;
    for (std::size_t k = 1; k < n; ++k)
        if (y[k] > y[kmax]) kmax = k;
    if (kmax + 1 >= n || y[kmax] <= 0.0) {
        throw IncompleteTraceError("trace ends before the first intensity maximum; extend the horizon");
    }

    RegimeReport rep;
    rep.eps_intensity = eps;
    const Extremum mx = refine_extremum(t, y, kmax);
    rep.max_intensity = mx.intensity;
    rep.t_max = mx.t;

    std::size_t kmin = 0;
    for (std::size_t k = 1; k < n; ++k)
        if (y[k] < y[kmin]) kmin = k;
    const Extremum mn = refine_extremum(t, y, kmin);
    rep.min_intensity = std::min(mn.intensity, y[kmin]);
    rep.t_min = mn.t;

    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (t[k] <= rep.t_max) continue;
        if (y[k] <= y[k - 1] && y[k] <= y[k + 1] && (y[k] < y[k - 1] || y[k] < y[k + 1])) {
            const Extremum e = refine_extremum(t, y, k);
            if (std::abs(e.intensity) <= eps) rep.zero_touch_times.push_back(e.t);
        }
    }

    if (rep.min_intensity < -eps) {
        rep.regime = Regime::non_markovian;
    } else if (!rep.zero_touch_times.empty()) {
        rep.regime = Regime::critical_pulsed;
    } else {
        rep.regime = Regime::markovian;
    }
    return rep;
}

namespace {

TraceSource resolve_source(const SystemParams& p, TraceSource s) {
    if (s != TraceSource::automatic) return s;
    return p.n_atoms <= 2 ? TraceSource::analytic : TraceSource::pseudomode;
}

IntensityTrace analytic_trace(const SystemParams& p, const std::vector<double>& grid) {
    IntensityTrace tr;
    tr.meta.params = p;
    tr.meta.stop_reason = "grid_end";
    tr.times = grid;
    tr.intensity.resize(grid.size());
    tr.excitation.resize(grid.size());
    if (p.n_atoms == 1) {
        tr.meta.solver = "analytic/single";
        for (std::size_t k = 0; k < grid.size(); ++k) {
            tr.intensity[k] = single_intensity(p, grid[k]);
            tr.excitation[k] = single_excitation(p, grid[k]);
        }
    } else if (p.n_atoms == 2) {
        tr.meta.solver = "analytic/pair";
        const PairSolution sol(p);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            tr.intensity[k] = pair_intensity(sol, grid[k]);
            tr.excitation[k] = pair_excitation(sol, grid[k]);
        }
    } else {
        throw ParamError("n_atoms", "closed forms exist only for n_atoms = 1 or 2");
    }
    return tr;
}

}  // namespace

IntensityTrace analysis_trace(const SystemParams& raw, const AnalysisOptions& opt) {
    const SystemParams p = validate_params(raw);
    const auto grid = uniform_grid(0.0, analysis_window(p), opt.n_samples);
    if (resolve_source(p, opt.source) == TraceSource::analytic) return analytic_trace(p, grid);
    EvolveOptions eo = opt.evolve;
    eo.keep_final_state = false;
    return evolve(p, grid, eo).trace;
}

RegimeReport regime_of(const SystemParams& raw, const AnalysisOptions& opt) {
    const SystemParams p = validate_params(raw);
    const double eps = opt.eps_intensity.value_or(default_intensity_threshold(p));
    return classify_regime(analysis_trace(p, opt), eps);
}

// ---- critical width ---------------------------------------------------------

namespace {

// True when the intensity at index k (or the parabola through its
// neighbours, if k is a local minimum) lies below -eps.
bool dips_at(const IntensityTrace& tr, std::size_t k, double eps) {
    const auto& y = tr.intensity;
    if (y[k] < -eps) return true;
    return k > 0 && k + 1 < y.size() && y[k] <= y[k - 1] && y[k] <= y[k + 1] &&
           refine_extremum(tr.times, y, k).intensity < -eps;
}

// True when the intensity dips below -eps inside the analysis window. The
// pseudomode run stops as soon as the dip is seen.
bool reabsorbs(const SystemParams& p, const AnalysisOptions& opt, double eps) {
    const auto grid = uniform_grid(0.0, analysis_window(p), opt.n_samples);
    if (resolve_source(p, opt.source) == TraceSource::analytic) {
        const auto tr = analytic_trace(p, grid);
        for (std::size_t k = 1; k < tr.size(); ++k)
            if (dips_at(tr, k, eps)) return true;
        return false;
    }
    EvolveOptions eo = opt.evolve;
    eo.keep_final_state = false;
    // Atomic excitation can nearly vanish between reabsorption cycles, so the
    // excitation-threshold stop is not used here.
    eo.apply_horizon_policy = false;
    eo.stop_below_peak_fraction = 0.0;
    bool found = false;
    eo.stop_when = [&](const IntensityTrace& tr) {
        // The sample just recorded completes the neighbourhood of the one before it.
        const std::size_t n = tr.size();
        if (n >= 1 && tr.intensity[n - 1] < -eps) found = true;
        if (n >= 3 && dips_at(tr, n - 2, eps)) found = true;
        return found;
    };
    evolve(p, grid, eo);
    return found;
}

}  // namespace

CriticalLambdaResult find_critical_lambda(const SystemParams& raw, const Bracket& br, const AnalysisOptions& opt,
                                          double rel_width) {
    const SystemParams base = validate_params(raw);
    const double g0 = base.gamma0;
    const int n = base.n_atoms;
    CriticalLambdaResult out;
    double lo = br.lo_over_gamma0 * g0;
    double hi = (br.hi_over_gamma0 > 0.0 ? br.hi_over_gamma0 : 2.0 * std::sqrt(static_cast<double>(n))) * g0;
    if (!(lo > 0.0) || !(hi > lo)) throw ParamError("bracket", "invariant violated: 0 < lambda_lo < lambda_hi");

    std::function<bool(double)> below;  // true when lambda is below the critical width
    double eps = 0.0;
    if (n == 1) {
        // The single-emitter dip is exponentially small near the critical width,
        // so a threshold would bias the answer; its existence is exact here.
        out.method = "closed_form_minimum";
        below = [&](double lam) {
            SystemParams p = base;
            p.lambda = lam;
            return single_extrema(p).min.has_value();
        };
    } else {
        eps = opt.eps_intensity.value_or(default_intensity_threshold(base));
        out.method = resolve_source(base, opt.source) == TraceSource::analytic ? "closed_form_bisection"
                                                                                 : "pseudomode_bisection";
        below = [&](double lam) {
            SystemParams p = base;
            p.lambda = lam;
            return reabsorbs(p, opt, eps);
        };
    }
    out.eps_intensity = eps;

    const bool lo_below = below(lo);
    const bool hi_below = below(hi);
    out.evaluations = 2;
    if (!lo_below || hi_below) {
        std::ostringstream os;
        os << "no reabsorption sign change in bracket [" << lo / g0 << ", " << hi / g0 << "] gamma0 for N = " << n
           << " (reabsorbs at lo: " << lo_below << ", at hi: " << hi_below << ")";
        throw BracketError(os.str());
    }
    while ((hi - lo) > rel_width * 0.5 * (hi + lo)) {
        const double mid = 0.5 * (lo + hi);
        if (below(mid)) lo = mid;
        else hi = mid;
        ++out.evaluations;
    }
    out.lo = lo;
    out.hi = hi;
    out.lambda_crit = 0.5 * (lo + hi);
    out.lambda_crit_over_gamma0 = out.lambda_crit / g0;
    return out;
}

std::vector<CriticalLambdaResult> critical_lambda_scan(const SystemParams& base, const std::vector<int>& n_list,
                                                       const AnalysisOptions& opt, double rel_width) {
    std::vector<CriticalLambdaResult> out(n_list.size());
    parallel_for(n_list.size(), resolve_threads(opt.threads), [&](std::size_t i) {
        SystemParams p = base;
        p.n_atoms = n_list[i];
        out[i] = find_critical_lambda(p, {}, opt, rel_width);
    });
    return out;
}

// ---- exponents --------------------------------------------------------------

Extremum peak_intensity(const SystemParams& raw, ExponentSource source, const AnalysisOptions& opt) {
    const SystemParams p = validate_params(raw);
    IntensityTrace tr;
    if (source == ExponentSource::markovian_cascade) {
        // The cascade burst lasts a few relaxation times 2/(N gamma_M).
        const double gm = markovian_rate(p);
        const double t_end = 10.0 * (std::log(p.n_atoms + 1.0) + 2.0) / (p.n_atoms * gm);
        CascadeOptions co;
        co.stop_below_peak_fraction = 0.5;
        tr = markovian_cascade(p, uniform_grid(0.0, t_end, opt.n_samples), co);
    } else {
        EvolveOptions eo = opt.evolve;
        eo.keep_final_state = false;
        eo.stop_below_peak_fraction = 0.5;
        tr = evolve(p, uniform_grid(0.0, analysis_window(p), opt.n_samples), eo).trace;
    }
    std::size_t k = 0;
    for (std::size_t j = 1; j < tr.size(); ++j)
        if (tr.intensity[j] > tr.intensity[k]) k = j;
    if (k + 1 >= tr.size()) throw IncompleteTraceError("peak not reached inside the window");
    return refine_extremum(tr.times, tr.intensity, k);
}

ExponentTable local_exponent(const SystemParams& raw, const std::vector<int>& n_list, ExponentSource source,
                             const AnalysisOptions& opt) {
    const SystemParams base = validate_params(raw);
    if (n_list.size() < 2) throw ParamError("n_list", "invariant violated: at least two N values");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (!(n_list[i] > n_list[i - 1]))
            throw ParamError("n_list", "invariant violated: N values strictly increasing (log ratio would be zero)");
    if (source == ExponentSource::markovian_cascade) {
        const double need = 10.0 * std::sqrt(static_cast<double>(n_list.back())) * base.gamma0;
        if (base.lambda < need) {
            std::ostringstream os;
            os << "cascade reference requires lambda >= 10 sqrt(N) gamma0 = " << need << " (got " << base.lambda << ")";
            throw ParamError("lambda", os.str());
        }
    }

    std::vector<Extremum> peaks(n_list.size());
    parallel_for(n_list.size(), resolve_threads(opt.threads), [&](std::size_t i) {
        SystemParams p = base;
        p.n_atoms = n_list[i];
        peaks[i] = peak_intensity(p, source, opt);
    });

    ExponentTable tab;
    for (const auto& e : peaks) tab.peak_times.push_back(e.t);
    for (std::size_t i = 0; i + 1 < n_list.size(); ++i) {
        const double a = peaks[i].intensity, b = peaks[i + 1].intensity;
        if (!(a > 0.0) || !(b > 0.0)) throw DataError("non-positive peak intensity; exponent undefined");
        ExponentRow r;
        r.n_m = n_list[i];
        r.n_m1 = n_list[i + 1];
        r.max_intensity_m = a;
        r.max_intensity_m1 = b;
        r.nu = std::log(b / a) / std::log(static_cast<double>(n_list[i + 1]) / n_list[i]);
        tab.rows.push_back(r);
    }
    return tab;
}

// ---- reabsorption -----------------------------------------------------------

std::vector<ReabsorptionRow> reabsorption_scan(const SystemParams& raw, const std::vector<int>& n_list,
                                               const std::vector<double>& lam_list, const AnalysisOptions& opt) {
    const SystemParams base = validate_params(raw);
    const std::size_t nl = lam_list.size();
    std::vector<ReabsorptionRow> rows(n_list.size() * nl);
    parallel_for(rows.size(), resolve_threads(opt.threads), [&](std::size_t idx) {
        const std::size_t i = idx / nl, j = idx % nl;
        SystemParams p = base;
        p.n_atoms = n_list[i];
        p.lambda = lam_list[j] * base.gamma0;
        const auto tr = analysis_trace(p, opt);
        std::size_t k = 0;
        for (std::size_t s = 1; s < tr.size(); ++s)
            if (tr.intensity[s] < tr.intensity[k]) k = s;
        const Extremum e = refine_extremum(tr.times, tr.intensity, k);
        ReabsorptionRow r;
        r.n = n_list[i];
        r.lambda_over_gamma0 = lam_list[j];
        // Rows without reabsorption report zero rather than the noise floor.
        const double eps = opt.eps_intensity.value_or(default_intensity_threshold(p));
        const double m = std::min(e.intensity, tr.intensity[k]);
        r.abs_min_intensity = m < -eps ? -m : 0.0;
        r.t_min = m < -eps ? e.t : 0.0;
        rows[idx] = r;
    });
    for (std::size_t i = 1; i < n_list.size(); ++i) {
        for (std::size_t j = 0; j < nl; ++j) {
            auto& cur = rows[i * nl + j];
            const auto& prev = rows[(i - 1) * nl + j];
            if (cur.abs_min_intensity > 0.0 && prev.abs_min_intensity > 0.0)
                cur.slope = std::log(cur.abs_min_intensity / prev.abs_min_intensity) /
                            std::log(static_cast<double>(cur.n) / prev.n);
        }
    }
    return rows;
}

RelaxationTime relaxation_time(const SystemParams& raw) {
    const SystemParams p = validate_params(raw);
    const double gm = markovian_rate(p);
    return {2.0 / (p.n_atoms * gm), p.lambda / (std::sqrt(static_cast<double>(p.n_atoms)) * p.gamma0)};
}

// ---- eternal non-Markovianity ----------------------------------------------

namespace {

// Taylor coefficients of H(tau) = e^{3tau} G(tau)
//   = 1/3 + e^tau (2tau - 5)/3 + e^{2tau} (4tau^2 - 2tau + 7)/3 - e^{3tau}.
std::vector<double> h_series(int order) {
    std::vector<double> h(order + 1, 0.0);
    const double p1[] = {-5.0, 2.0};
    const double p2[] = {7.0, -2.0, 4.0};
    std::vector<double> inv_fact(order + 1, 1.0);
    for (int k = 1; k <= order; ++k) inv_fact[k] = inv_fact[k - 1] / k;
    for (int k = 0; k <= order; ++k) {
        double s = k == 0 ? 1.0 : 0.0;
        for (int j = 0; j <= std::min(k, 1); ++j) s += p1[j] * inv_fact[k - j];
        for (int j = 0; j <= std::min(k, 2); ++j) s += p2[j] * std::pow(2.0, k - j) * inv_fact[k - j];
        h[k] = s / 3.0 - std::pow(3.0, k) * inv_fact[k];
    }
    // The first five vanish identically; drop the rounding residue.
    for (int k = 0; k < 5 && k <= order; ++k) h[k] = 0.0;
    return h;
}

}  // namespace

double eternal_g(double tau) {
    if (tau < 0.0) throw ParamError("tau", "invariant violated: tau ≥ 0");
    if (tau < 0.5) {
        static const std::vector<double> h = h_series(40);
        double s = 0.0;
        for (int k = static_cast<int>(h.size()) - 1; k >= 0; --k) s = s * tau + h[k];
        return std::exp(-3.0 * tau) * s;
    }
    const double e = std::exp(tau);
    return std::exp(-3.0 * tau) / 3.0 * (1.0 + e * (2.0 * tau - 5.0 + e * (4.0 * tau * tau - 2.0 * tau + 7.0))) - 1.0;
}

std::vector<double> default_tau_grid(std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = 20.0 * static_cast<double>(k + 1) / static_cast<double>(n);
    return g;
}

EternalNmReport eternal_nm_check(double gamma0, double lambda, const std::vector<double>& t_grid) {
    SystemParams p;
    p.n_atoms = 2;
    p.gamma0 = gamma0;
    p.lambda = lambda;
    p = validate_params(p);
    if (!(p.lambda > 0.0)) throw ParamError("lambda", "invariant violated: lambda > 0");
    EternalNmReport rep;
    rep.gamma0 = p.gamma0;
    rep.lambda = p.lambda;
    rep.g_at_zero = eternal_g(0.0);
    rep.g_at_large = eternal_g(200.0);
    rep.g_max = -std::numeric_limits<double>::infinity();
    for (double tau : default_tau_grid(1000)) {
        const double g = eternal_g(tau);
        rep.g_max = std::max(rep.g_max, g);
        if (!(g < 0.0)) rep.g_negative = false;
    }

    const GammaMatrix gm(p, Precision::quad);
    const double scale = 3.0 * std::pow(p.gamma0, 6) / std::pow(p.lambda, 5);
    for (double t : t_grid) {
        if (!(t > 0.0)) continue;
        EternalNmSample s;
        s.t = t;
        s.tau = p.lambda * t;
        s.gamma3 = canonical_rates(gm, t).g3;
        s.leading = scale * eternal_g(s.tau);
        s.rel_residual = std::abs(s.gamma3 - s.leading) / std::abs(s.leading);
        if (!(s.gamma3 < 0.0)) rep.gamma3_negative = false;
        rep.samples.push_back(s);
    }
    {
        const double t1 = 1.0 / p.lambda;
        const double g3 = canonical_rates(gm, t1).g3;
        const double lead = scale * eternal_g(1.0);
        rep.residual_at_tau1 = std::abs(g3 - lead) / std::abs(lead);
    }
    return rep;
}

// ---- parallel sweeps --------------------------------------------------------

std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SUPERRAD_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr first;
    std::size_t first_index = n;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                job(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (i < first_index) {
                    first_index = i;
                    first = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first) std::rethrow_exception(first);
}

}  // namespace superrad
