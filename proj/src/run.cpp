// Pipelines behind each CLI command.

#include <cmath>
#include <sstream>

#include "superrad/analysis.hpp"
#include "superrad/cli_config.hpp"
#include "superrad/output.hpp"

namespace superrad {

namespace {

std::vector<double> time_grid(const RunConfig& c) {
    const double t1 = c.grid.t_end.value_or(horizon_cap(c.params));
    if (!(t1 > c.grid.t_start)) throw ConfigError("t-end", 0, "t-end must exceed t-start");
    return uniform_grid(c.grid.t_start, t1, c.grid.n_samples);
}

AnalysisOptions analysis_options(const RunConfig& c) {
    AnalysisOptions o;
    o.source = c.analysis_source;
    o.n_samples = c.grid.n_samples;
    o.eps_intensity = c.eps_intensity;
    o.evolve.engine = c.engine;
    o.evolve.memory_budget_bytes = c.memory_budget_bytes;
    o.threads = c.threads;
    return o;
}

std::vector<std::string> header_comments(const RunConfig& c, const SystemParams& p, const std::string& solver) {
    std::vector<std::string> out;
    for (const auto& [k, v] : provenance(command_name(c.command), p, solver)) out.push_back(k + ": " + v);
    return out;
}

JsonRecord json_header(const RunConfig& c, const SystemParams& p, const std::string& solver) {
    JsonRecord r;
    for (const auto& [k, v] : provenance(command_name(c.command), p, solver)) {
        // Numeric provenance entries stay numbers in JSON.
        if (k == "superrad_version" || k == "command" || k == "solver") r.emplace_back(k, v);
        else if (k == "n_atoms") r.emplace_back(k, static_cast<long long>(p.n_atoms));
        else r.emplace_back(k, std::stod(v));
    }
    return r;
}

std::string emit(const RunConfig& c, const CsvTable& table, const JsonRecord& summary) {
    return c.effective_format() == OutputFormat::json ? render_json(summary) : render_csv(table);
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
    return s;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_number(v[k]);
    return s;
}

int run_simulate(const RunConfig& c) {
    const SystemParams& p = c.params;
    EvolveOptions eo;
    eo.engine = c.engine;
    eo.memory_budget_bytes = c.memory_budget_bytes;
    eo.keep_final_state = false;
    eo.apply_horizon_policy = c.stop_at_horizon && !c.grid.t_end;
    const auto res = evolve(p, time_grid(c), eo);
    const auto& tr = res.trace;
    const double eps = c.eps_intensity.value_or(default_intensity_threshold(p));

    CsvTable t;
    t.comments = header_comments(c, p, tr.meta.solver);
    t.comments.push_back("stop_reason: " + tr.meta.stop_reason);
    t.comments.push_back("eps_intensity: " + format_number(eps));
    t.comments.push_back("regime_flag: 1 emitting, 0 within eps of zero, -1 reabsorbing");
    JsonRecord js = json_header(c, p, tr.meta.solver);
    js.emplace_back("stop_reason", tr.meta.stop_reason);
    js.emplace_back("samples", static_cast<long long>(tr.size()));
    js.emplace_back("eps_intensity_omega0sq", eps);
    try {
        const auto rep = classify_regime(tr, eps);
        t.comments.push_back(std::string("regime: ") + regime_name(rep.regime));
        js.emplace_back("regime", std::string(regime_name(rep.regime)));
        js.emplace_back("max_intensity_omega0sq", rep.max_intensity);
        js.emplace_back("t_max_inv_omega0", rep.t_max);
        js.emplace_back("min_intensity_omega0sq", rep.min_intensity);
        js.emplace_back("t_min_inv_omega0", rep.t_min);
        js.emplace_back("zero_touches", static_cast<long long>(rep.zero_touch_times.size()));
    } catch (const IncompleteTraceError&) {
        t.comments.push_back("regime: undetermined (trace ends before the first maximum)");
        js.emplace_back("regime", std::string("undetermined"));
    }
    t.columns = {"t", "intensity", "excitation", "regime_flag"};
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const double i = tr.intensity[k];
        const double flag = i > eps ? 1.0 : (i < -eps ? -1.0 : 0.0);
        t.add_row({tr.times[k], i, tr.excitation[k], flag});
    }
    write_artifact(c.output, emit(c, t, js));
    return 0;
}

int run_analytic(const RunConfig& c) {
    const SystemParams& p = c.params;
    const auto grid = time_grid(c);
    CsvTable t;
    std::string solver;
    if (p.n_atoms == 1) {
        solver = "analytic/single";
        t.comments = header_comments(c, p, solver);
        if (c.rates == RateKind::none) {
            t.columns = {"t", "intensity", "excitation"};
            for (double x : grid) t.add_row({x, single_intensity(p, x), single_excitation(p, x)});
        } else {
            t.columns = {"t", "decay_rate"};
            for (double x : grid) {
                double r;
                try {
                    r = single_decay_rate(p, x);
                } catch (const PoleError&) {
                    r = std::numeric_limits<double>::infinity();
                }
                t.add_row({x, r});
            }
        }
    } else if (p.n_atoms == 2) {
        solver = "analytic/pair";
        t.comments = header_comments(c, p, solver);
        if (c.rates == RateKind::none) {
            const PairSolution sol(p, c.degenerate);
            if (sol.propagators().degenerate) t.comments.push_back("degenerate: cubic roots merged");
            t.columns = {"t", "intensity", "excitation"};
            for (double x : grid) t.add_row({x, pair_intensity(sol, x), pair_excitation(sol, x)});
        } else {
            const GammaMatrix g(p, c.precision, c.degenerate);
            if (g.degenerate()) t.comments.push_back("degenerate: cubic roots merged");
            t.comments.push_back(std::string("precision: ") + (c.precision == Precision::quad ? "quad" : "extended"));
            if (c.rates == RateKind::canonical) {
                t.columns = {"t", "gamma1", "gamma2", "gamma3"};
                for (double x : grid) {
                    const auto r = canonical_rates(g, x);
                    t.add_row({x, r.g1, r.g2, r.g3});
                }
            } else {
                t.columns = {"t", "gamma1", "gamma2", "gamma3", "gamma4"};
                for (double x : grid) {
                    const auto r = noncanonical_rates(g, x);
                    t.add_row({x, r.g1, r.g2, r.g3, r.g4});
                }
            }
        }
    } else {
        throw ConfigError("n", 0, "analytic supports n = 1 or n = 2");
    }
    if (c.effective_format() == OutputFormat::json)
        throw ConfigError("format", 0, "analytic writes CSV traces only");
    write_artifact(c.output, render_csv(t));
    return 0;
}

int run_critical(const RunConfig& c) {
    const AnalysisOptions o = analysis_options(c);
    if (!c.n_list.empty()) {
        const auto res = critical_lambda_scan(c.params, c.n_list, o, c.rel_width);
        CsvTable t;
        t.comments = header_comments(c, c.params, "bisection");
        t.comments.push_back("n_list: " + join(c.n_list));
        t.comments.push_back("rel_width: " + format_number(c.rel_width));
        t.columns = {"n", "lambda_crit_over_gamma0", "lambda_crit_omega0", "evaluations", "eps_intensity"};
        for (std::size_t k = 0; k < res.size(); ++k)
            t.add_row({static_cast<double>(c.n_list[k]), res[k].lambda_crit_over_gamma0, res[k].lambda_crit,
                       static_cast<double>(res[k].evaluations), res[k].eps_intensity});
        if (c.effective_format() == OutputFormat::json)
            throw ConfigError("format", 0, "critical-lambda with n-list writes CSV");
        write_artifact(c.output, render_csv(t));
        return 0;
    }
    const auto r = find_critical_lambda(c.params, c.bracket, o, c.rel_width);
    JsonRecord js = json_header(c, c.params, r.method);
    js.emplace_back("lambda_crit_over_gamma0", r.lambda_crit_over_gamma0);
    js.emplace_back("lambda_crit_omega0", r.lambda_crit);
    js.emplace_back("bracket_lo_over_gamma0", r.lo / c.params.gamma0);
    js.emplace_back("bracket_hi_over_gamma0", r.hi / c.params.gamma0);
    js.emplace_back("rel_width", c.rel_width);
    js.emplace_back("evaluations", static_cast<long long>(r.evaluations));
    js.emplace_back("eps_intensity_omega0sq", r.eps_intensity);
    CsvTable t;
    t.comments = header_comments(c, c.params, r.method);
    t.columns = {"n", "lambda_crit_over_gamma0", "lambda_crit_omega0", "evaluations", "eps_intensity"};
    t.add_row({static_cast<double>(c.params.n_atoms), r.lambda_crit_over_gamma0, r.lambda_crit,
               static_cast<double>(r.evaluations), r.eps_intensity});
    write_artifact(c.output, emit(c, t, js));
    return 0;
}

int run_exponent(const RunConfig& c) {
    if (c.n_list.size() < 2) throw ConfigError("n-list", 0, "exponent needs n-list with at least two values");
    const auto tab = local_exponent(c.params, c.n_list, c.exponent_source, analysis_options(c));
    const std::string solver =
        c.exponent_source == ExponentSource::markovian_cascade ? "markovian_cascade" : "pseudomode";
    CsvTable t;
    t.comments = header_comments(c, c.params, solver);
    t.comments.push_back("n_list: " + join(c.n_list));
    t.columns = {"n_m", "n_m1", "max_intensity_m", "max_intensity_m1", "nu"};
    for (const auto& r : tab.rows)
        t.add_row({static_cast<double>(r.n_m), static_cast<double>(r.n_m1), r.max_intensity_m, r.max_intensity_m1,
                   r.nu});
    if (c.effective_format() == OutputFormat::json) throw ConfigError("format", 0, "exponent writes CSV");
    write_artifact(c.output, render_csv(t));
    return 0;
}

int run_reabsorption(const RunConfig& c) {
    if (c.n_list.empty() || c.lambda_list.empty())
        throw ConfigError("n-list", 0, "reabsorption needs n-list and lambda-list");
    const auto rows = reabsorption_scan(c.params, c.n_list, c.lambda_list, analysis_options(c));
    CsvTable t;
    t.comments = header_comments(c, c.params, "pseudomode");
    t.comments.push_back("n_list: " + join(c.n_list));
    t.comments.push_back("lambda_list_over_gamma0: " + join(c.lambda_list));
    t.columns = {"n", "lambda_over_gamma0", "abs_min_intensity", "t_min", "slope"};
    for (const auto& r : rows)
        t.add_row({static_cast<double>(r.n), r.lambda_over_gamma0, r.abs_min_intensity, r.t_min,
                   r.slope.value_or(std::nan(""))});
    if (c.effective_format() == OutputFormat::json) throw ConfigError("format", 0, "reabsorption writes CSV");
    write_artifact(c.output, render_csv(t));
    return 0;
}

int run_eternal(const RunConfig& c) {
    const SystemParams& p = c.params;
    if (!(p.lambda > 0.0)) throw ConfigError("lambda", 0, "eternal-nm needs lambda > 0");
    std::vector<double> times;
    for (double tau : default_tau_grid(c.grid.n_samples)) times.push_back(tau / p.lambda);
    const auto rep = eternal_nm_check(p.gamma0, p.lambda, times);
    JsonRecord js = json_header(c, p, "analytic/pair/quad");
    js.emplace_back("g_at_zero", rep.g_at_zero);
    js.emplace_back("g_at_tau200", rep.g_at_large);
    js.emplace_back("g_max_on_grid", rep.g_max);
    js.emplace_back("g_negative", rep.g_negative);
    js.emplace_back("gamma3_negative", rep.gamma3_negative);
    js.emplace_back("gamma3_rel_residual_at_tau1", rep.residual_at_tau1);
    js.emplace_back("samples", static_cast<long long>(rep.samples.size()));
    CsvTable t;
    t.comments = header_comments(c, p, "analytic/pair/quad");
    t.columns = {"t", "tau", "g", "gamma3", "gamma3_leading", "rel_residual"};
    for (const auto& s : rep.samples)
        t.add_row({s.t, s.tau, eternal_g(s.tau), s.gamma3, s.leading, s.rel_residual});
    write_artifact(c.output, emit(c, t, js));
    return 0;
}

int run_sweep(const RunConfig& c) {
    if (c.n_list.empty() || c.lambda_list.empty()) throw ConfigError("n-list", 0, "sweep needs n-list and lambda-list");
    const AnalysisOptions o = analysis_options(c);
    const std::size_t nl = c.lambda_list.size();
    const std::size_t total = c.n_list.size() * nl;
    struct Row {
        RegimeReport rep;
        RelaxationTime rt;
        std::string error;
    };
    std::vector<Row> rows(total);
    parallel_for(total, resolve_threads(c.threads), [&](std::size_t idx) {
        SystemParams p = c.params;
        p.n_atoms = c.n_list[idx / nl];
        p.lambda = c.lambda_list[idx % nl] * p.gamma0;
        rows[idx].rep = regime_of(p, o);
        if (p.lambda > 0.0) rows[idx].rt = relaxation_time(p);
        else rows[idx].rt = {std::numeric_limits<double>::infinity(), 0.0};
    });
    // Regime names are text, so this table is assembled by hand.
    CsvTable t;
    t.comments = header_comments(c, c.params, "sweep");
    t.comments.push_back("n_list: " + join(c.n_list));
    t.comments.push_back("lambda_list_over_gamma0: " + join(c.lambda_list));
    t.columns = {"n", "lambda_over_gamma0", "regime", "max_intensity", "t_max", "min_intensity", "t_min",
                 "zero_touches", "tau_r", "markov_indicator"};
    for (std::size_t idx = 0; idx < total; ++idx) {
        const auto& r = rows[idx];
        t.rows.push_back({std::to_string(c.n_list[idx / nl]), format_number(c.lambda_list[idx % nl]),
                          regime_name(r.rep.regime), format_number(r.rep.max_intensity), format_number(r.rep.t_max),
                          format_number(r.rep.min_intensity), format_number(r.rep.t_min),
                          std::to_string(r.rep.zero_touch_times.size()), format_number(r.rt.tau_r),
                          format_number(r.rt.markov_indicator)});
    }
    if (c.effective_format() == OutputFormat::json) throw ConfigError("format", 0, "sweep writes CSV");
    write_artifact(c.output, render_csv(t));
    return 0;
}

}  // namespace

int run(const RunConfig& c) {
    switch (c.command) {
        case Command::simulate: return run_simulate(c);
        case Command::analytic: return run_analytic(c);
        case Command::critical_lambda: return run_critical(c);
        case Command::exponent: return run_exponent(c);
        case Command::reabsorption: return run_reabsorption(c);
        case Command::eternal_nm: return run_eternal(c);
        default: return run_sweep(c);
    }
}

}  // namespace superrad
