#include "superrad/pseudomode.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace superrad {

// ---- BlockDensityMatrix -----------------------------------------------------

BlockDensityMatrix::BlockDensityMatrix(int n_atoms) : n_(n_atoms), data_(entry_count(n_atoms), cdouble(0.0)) {
    if (n_atoms < 1) throw ParamError("n_atoms", "invariant violated: n_atoms ≥ 1");
}

std::size_t BlockDensityMatrix::entry_count(int n_atoms) { return block_offset(n_atoms + 1); }

BlockDensityMatrix BlockDensityMatrix::excited(int n_atoms) {
    BlockDensityMatrix rho(n_atoms);
    rho.at(n_atoms, n_atoms, n_atoms) = 1.0;
    return rho;
}

BlockDensityMatrix BlockDensityMatrix::ground(int n_atoms) {
    BlockDensityMatrix rho(n_atoms);
    rho.at(0, 0, 0) = 1.0;
    return rho;
}

cdouble BlockDensityMatrix::trace() const {
    cdouble s = 0.0;
    for (int m = 0; m <= n_; ++m)
        for (int i = 0; i <= m; ++i) s += at(m, i, i);
    return s;
}

double BlockDensityMatrix::expectation_n() const {
    double s = 0.0;
    for (int m = 0; m <= n_; ++m)
        for (int i = 1; i <= m; ++i) s += i * at(m, i, i).real();
    return s;
}

double BlockDensityMatrix::total_excitations() const {
    double s = 0.0;
    for (int m = 1; m <= n_; ++m)
        for (int i = 0; i <= m; ++i) s += m * at(m, i, i).real();
    return s;
}

double BlockDensityMatrix::hermiticity_error() const {
    double e = 0.0;
    for (int m = 0; m <= n_; ++m)
        for (int i = 0; i <= m; ++i)
            for (int j = i; j <= m; ++j) e = std::max(e, std::abs(at(m, i, j) - std::conj(at(m, j, i))));
    return e;
}

double BlockDensityMatrix::min_block_eigenvalue() const {
    double lo = std::numeric_limits<double>::infinity();
    for (int m = 0; m <= n_; ++m) {
        const int d = m + 1;
        Eigen::MatrixXcd b(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) b(i, j) = 0.5 * (at(m, i, j) + std::conj(at(m, j, i)));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(b, Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
    }
    return lo;
}

std::vector<double> BlockDensityMatrix::block_populations() const {
    std::vector<double> out(n_ + 1, 0.0);
    for (int m = 0; m <= n_; ++m)
        for (int i = 0; i <= m; ++i) out[m] += at(m, i, i).real();
    return out;
}

// ---- BlockLiouvillian -------------------------------------------------------

BlockLiouvillian::BlockLiouvillian(const SystemParams& raw) {
    const SystemParams p = validate_params(raw);
    n_ = p.n_atoms;
    lambda_ = p.lambda;
    omega0_ = p.omega0;
    const double g = p.gamma0 / std::sqrt(2.0);
    ladder_.resize(n_ + 1);
    for (int i = 0; i <= n_; ++i) ladder_[i] = g * std::sqrt(static_cast<double>(i) * (n_ - i + 1));
    sqrt_.resize(n_ + 2);
    for (int k = 0; k <= n_ + 1; ++k) sqrt_[k] = std::sqrt(static_cast<double>(k));
}

std::vector<double> BlockLiouvillian::hamiltonian_block(int m) const {
    const int d = m + 1;
    std::vector<double> h(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 1; i <= m; ++i) {
        const double b = coupling(m, i);
        h[static_cast<std::size_t>(i) * d + (i - 1)] = b;
        h[static_cast<std::size_t>(i - 1) * d + i] = b;
    }
    return h;
}

const char* engine_name(Engine e) {
    switch (e) {
        case Engine::dense: return "dense";
        case Engine::reduced: return "reduced";
        default: return "automatic";
    }
}

Engine resolve_engine(int n_atoms, Engine requested) {
    if (requested != Engine::automatic) return requested;
    return n_atoms <= 10 ? Engine::dense : Engine::reduced;
}

std::size_t evolve_required_bytes(int n_atoms, Engine engine, bool keep_final_state) {
    // State, seven stage buffers (one shared) and the step candidate.
    constexpr std::size_t arrays = 8;
    const Engine e = resolve_engine(n_atoms, engine);
    const std::size_t dense = BlockDensityMatrix::entry_count(n_atoms) * sizeof(cdouble);
    std::size_t bytes = e == Engine::dense ? arrays * dense : arrays * ReducedLayout::entry_count(n_atoms) * sizeof(double);
    if (keep_final_state && e == Engine::reduced) bytes += dense;
    return bytes;
}

BlockLiouvillian build_liouvillian(const SystemParams& p, std::size_t memory_budget, Engine engine) {
    const SystemParams v = validate_params(p);
    const std::size_t need = evolve_required_bytes(v.n_atoms, engine, false);
    if (need > memory_budget) {
        std::ostringstream os;
        os << "N = " << v.n_atoms << " needs " << need << " bytes with the " << engine_name(resolve_engine(v.n_atoms, engine))
           << " engine, above the memory budget of " << memory_budget << " bytes";
        throw CapacityError(need, memory_budget, os.str());
    }
    return BlockLiouvillian(v);
}

// ---- dense engine -----------------------------------------------------------

namespace {

void dense_generator(const BlockLiouvillian& L, const cdouble* rho, cdouble* out) {
    const int n = L.n_atoms();
    const cdouble mi(0.0, -1.0);
    std::vector<double> b(n + 2, 0.0);
    for (int m = 0; m <= n; ++m) {
        const int d = m + 1;
        const cdouble* r = rho + BlockDensityMatrix::block_offset(m);
        const cdouble* up = m < n ? rho + BlockDensityMatrix::block_offset(m + 1) : nullptr;
        cdouble* o = out + BlockDensityMatrix::block_offset(m);
        for (int k = 0; k <= m + 1; ++k) b[k] = L.coupling(m, k);
        auto R = [&](int i, int j) -> cdouble { return r[static_cast<std::size_t>(i) * d + j]; };
        for (int i = 0; i <= m; ++i) {
            for (int j = 0; j <= m; ++j) {
                cdouble hr = 0.0;  // (H rho - rho H)_ij
                if (i >= 1) hr += b[i] * R(i - 1, j);
                if (i < m) hr += b[i + 1] * R(i + 1, j);
                if (j >= 1) hr -= R(i, j - 1) * b[j];
                if (j < m) hr -= R(i, j + 1) * b[j + 1];
                cdouble v = mi * hr - L.decay(m, i, j) * R(i, j);
                if (up) v += L.feed(m, i, j) * up[static_cast<std::size_t>(i) * (d + 1) + j];
                o[static_cast<std::size_t>(i) * d + j] = v;
            }
        }
    }
}

double dense_intensity(const BlockLiouvillian& L, const cdouble* rho) {
    const int n = L.n_atoms();
    double s = 0.0;
    for (int m = 1; m <= n; ++m) {
        const int d = m + 1;
        const cdouble* r = rho + BlockDensityMatrix::block_offset(m);
        for (int k = 1; k <= m; ++k) s += L.coupling(m, k) * r[static_cast<std::size_t>(k - 1) * d + k].imag();
    }
    return -2.0 * L.omega0() * s;
}

}  // namespace

void apply_generator(const BlockLiouvillian& L, const BlockDensityMatrix& rho, BlockDensityMatrix& out) {
    if (rho.n_atoms() != L.n_atoms()) throw ParamError("n_atoms", "state and generator sizes differ");
    if (out.n_atoms() != L.n_atoms()) out = BlockDensityMatrix(L.n_atoms());
    dense_generator(L, rho.data().data(), out.data().data());
}

BlockDensityMatrix apply_generator(const BlockLiouvillian& L, const BlockDensityMatrix& rho) {
    BlockDensityMatrix out(L.n_atoms());
    apply_generator(L, rho, out);
    return out;
}

double intensity_from_generator(const BlockLiouvillian& L, const BlockDensityMatrix& rho) {
    if (rho.n_atoms() != L.n_atoms()) throw ParamError("n_atoms", "state and generator sizes differ");
    return dense_intensity(L, rho.data().data());
}

double expectation_n(const BlockDensityMatrix& rho) { return rho.expectation_n(); }

// ---- reduced engine ---------------------------------------------------------

std::size_t ReducedLayout::entry_count(int n_atoms) {
    std::size_t s = 0;
    for (int m = 0; m <= n_atoms; ++m) s += static_cast<std::size_t>(m + 1) * (m + 2) / 2;
    return s;
}

ReducedLayout::ReducedLayout(int n_atoms) : block_offset_(n_atoms + 2) {
    std::size_t s = 0;
    for (int m = 0; m <= n_atoms + 1; ++m) {
        block_offset_[m] = s;
        s += static_cast<std::size_t>(m + 1) * (m + 2) / 2;
    }
    size_ = block_offset_[n_atoms + 1];
}

// dr_ij =  b_i r_{i-1,j} - b_{i+1} r_{i+1,j} + b_j r_{i,j-1} - b_{j+1} r_{i,j+1}
//        - lambda (2M - i - j) r_ij + 2 lambda sqrt((M+1-i)(M+1-j)) r^{M+1}_ij
void apply_reduced_generator(const BlockLiouvillian& L, const ReducedLayout& lay, const double* r, double* dr) {
    const int n = L.n_atoms();
    const double lam = L.lambda();
    // b[k]: block coupling; q[k] = sqrt(M+1-k) for the feed from block M+1.
    std::vector<double> b(n + 3, 0.0), q(n + 3, 0.0);
    for (int m = 0; m <= n; ++m) {
        for (int k = 0; k <= m + 1; ++k) {
            b[k] = L.coupling(m, k);
            q[k] = L.sqrt_int(m + 1 - k);
        }
        b[m + 2] = 0.0;
        const bool has_up = m < n;
        // row(i)[j] = r_ij for j >= i.
        auto row = [&](int mm, int i) { return r + lay.index(mm, i, i) - i; };
        for (int i = 0; i <= m; ++i) {
            const double* P = row(m, i);
            const double* Pm = i >= 1 ? row(m, i - 1) : P;  // multiplied by b_0 = 0
            const double* Pp = i < m ? row(m, i + 1) : P;
            double* D = dr + lay.index(m, i, i) - i;
            const double bi = b[i], bi1 = b[i + 1];
            const double fi = has_up ? 2.0 * lam * q[i] : 0.0;
            const double* F = has_up ? row(m + 1, i) : P;
            const double* B = b.data();
            const double* Q = q.data();
            const int base = 2 * m - i;

            // j = i: r_{i+1,i} = r_{i,i+1} and r_{i,i-1} = r_{i-1,i}.
            D[i] = 2.0 * (bi * Pm[i] - (i < m ? bi1 * P[i + 1] : 0.0)) - lam * (base - i) * P[i] + fi * Q[i] * F[i];
            // j > i; b[m+1] = 0 removes the r_{i,m+1} term at j = m, whose
            // position is a valid address in the next row or block.
            if (m > i) {
                const int jlast = m;
                for (int j = i + 1; j < jlast; ++j) {
                    D[j] = bi * Pm[j] - bi1 * Pp[j] + B[j] * P[j - 1] - B[j + 1] * P[j + 1] -
                           lam * (base - j) * P[j] + fi * Q[j] * F[j];
                }
                const int j = m;
                D[j] = bi * Pm[j] - bi1 * Pp[j] + B[j] * P[j - 1] - lam * (base - j) * P[j] + fi * Q[j] * F[j];
            }
        }
    }
}

double reduced_intensity(const BlockLiouvillian& L, const ReducedLayout& lay, const double* r) {
    const int n = L.n_atoms();
    double s = 0.0;
    for (int m = 1; m <= n; ++m)
        for (int k = 1; k <= m; ++k) s += L.coupling(m, k) * r[lay.index(m, k - 1, k)];
    return -2.0 * L.omega0() * s;
}

BlockDensityMatrix expand_reduced(const ReducedLayout& lay, int n_atoms, const double* r) {
    static const cdouble phase[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    BlockDensityMatrix rho(n_atoms);
    for (int m = 0; m <= n_atoms; ++m)
        for (int i = 0; i <= m; ++i)
            for (int j = 0; j <= m; ++j) {
                const double v = r[lay.index(m, std::min(i, j), std::max(i, j))];
                rho.at(m, i, j) = phase[((j - i) % 4 + 4) % 4] * v;
            }
    return rho;
}

// ---- evolve -----------------------------------------------------------------

std::vector<double> horizon_grid(const SystemParams& p, std::size_t n_samples) {
    const SystemParams v = validate_params(p);
    return uniform_grid(0.0, horizon_cap(v), n_samples);
}

namespace {

struct SampleSink {
    const SystemParams& p;
    const EvolveOptions& opt;
    EvolveResult& res;
    double running_max = 0.0;

    // Returns false when a stop rule fires.
    bool record(double t, double intensity, double excitation, double total, double trace) {
        const double drift = trace - 1.0;
        if (!(std::abs(drift) <= opt.trace_tolerance)) {
            std::ostringstream os;
            os << "trace drifted to " << trace << " at t = " << t << " (tolerance " << opt.trace_tolerance
               << "); tighten abs_tol/rel_tol";
            throw AccuracyError(os.str());
        }
        res.trace.times.push_back(t);
        res.trace.intensity.push_back(intensity);
        res.trace.excitation.push_back(excitation);
        res.total_excitation.push_back(total);
        res.trace_error.push_back(drift);
        running_max = std::max(running_max, intensity);
        if (opt.apply_horizon_policy && excitation < p.horizon.excitation_fraction * p.n_atoms) {
            res.trace.meta.stop_reason = "excitation_threshold";
            return false;
        }
        if (opt.stop_below_peak_fraction > 0.0 && running_max > 0.0 &&
            intensity < opt.stop_below_peak_fraction * running_max) {
            res.trace.meta.stop_reason = "past_peak";
            return false;
        }
        if (opt.stop_when && opt.stop_when(res.trace)) {
            res.trace.meta.stop_reason = "observer";
            return false;
        }
        return true;
    }
};

}  // namespace

EvolveResult evolve(const SystemParams& raw, const std::vector<double>& grid, const EvolveOptions& opt) {
    const SystemParams p = validate_params(raw);
    validate_grid(grid);
    const Engine engine = resolve_engine(p.n_atoms, opt.engine);
    const std::size_t need = evolve_required_bytes(p.n_atoms, engine, opt.keep_final_state);
    if (need > opt.memory_budget_bytes) {
        std::ostringstream os;
        os << "N = " << p.n_atoms << " needs " << need << " bytes with the " << engine_name(engine)
           << " engine, above the memory budget of " << opt.memory_budget_bytes << " bytes";
        throw CapacityError(need, opt.memory_budget_bytes, os.str());
    }
    const BlockLiouvillian L(p);

    EvolveResult res;
    res.engine = engine;
    res.trace.meta.solver = std::string("pseudomode/") + engine_name(engine);
    res.trace.meta.params = p;
    res.trace.meta.abs_tol = effective_abs_tol(p);
    res.trace.meta.rel_tol = effective_rel_tol(p);
    res.trace.meta.stop_reason = "grid_end";
    const std::size_t ns = grid.size();
    res.trace.times.reserve(ns);
    res.trace.intensity.reserve(ns);
    res.trace.excitation.reserve(ns);
    res.total_excitation.reserve(ns);
    res.trace_error.reserve(ns);

    Dopri5Options dopt;
    dopt.abs_tol = res.trace.meta.abs_tol;
    dopt.rel_tol = res.trace.meta.rel_tol;
    dopt.max_steps = opt.max_steps;
    dopt.initial_step = opt.initial_step;

    SampleSink sink{p, opt, res};
    const int n = p.n_atoms;

    if (engine == Engine::dense) {
        BlockDensityMatrix rho = BlockDensityMatrix::excited(n);
        std::vector<cdouble> y = std::move(rho.data());
        auto f = [&](double, const cdouble* in, cdouble* out) { dense_generator(L, in, out); };
        BlockDensityMatrix view(n);
        auto obs = [&](std::size_t, double t, const std::vector<cdouble>& s, const std::vector<cdouble>&) {
            view.data() = s;
            if (opt.state_observer) opt.state_observer(t, view);
            return sink.record(t, dense_intensity(L, s.data()), view.expectation_n(), view.total_excitations(),
                               view.trace().real());
        };
        res.stats = dopri5_integrate(f, y, grid, dopt, obs);
        if (opt.keep_final_state) {
            BlockDensityMatrix fin(n);
            fin.data() = std::move(y);
            res.final_state = std::move(fin);
        }
    } else {
        const ReducedLayout lay(n);
        std::vector<double> y(lay.size(), 0.0);
        y[lay.index(n, n, n)] = 1.0;
        auto f = [&](double, const double* in, double* out) { apply_reduced_generator(L, lay, in, out); };
        auto obs = [&](std::size_t, double t, const std::vector<double>& s, const std::vector<double>&) {
            double ex = 0.0, tot = 0.0, tr = 0.0;
            for (int m = 0; m <= n; ++m)
                for (int i = 0; i <= m; ++i) {
                    const double d = s[lay.index(m, i, i)];
                    tr += d;
                    ex += i * d;
                    tot += m * d;
                }
            if (opt.state_observer) opt.state_observer(t, expand_reduced(lay, n, s.data()));
            return sink.record(t, reduced_intensity(L, lay, s.data()), ex, tot, tr);
        };
        res.stats = dopri5_integrate(f, y, grid, dopt, obs);
        if (opt.keep_final_state) res.final_state = expand_reduced(lay, n, y.data());
    }
    if (res.trace.meta.stop_reason == "grid_end" && res.trace.size() < grid.size()) {
        res.trace.meta.stop_reason = "max_steps";
    }
    return res;
}

}  // namespace superrad
