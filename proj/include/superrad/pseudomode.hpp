#pragma once

// N emitters coupled collectively to one damped bosonic mode. Starting from
// |N>|0>, the dynamics never leaves the blocks spanned by |i>|M-i> with
// M = 0..N total excitations, so the state is stored block by block.
//
// Two engines share the generator:
//   dense    full complex (M+1)x(M+1) blocks;
//   reduced  rho_ij = i^{j-i} r_ij with r real symmetric, upper triangle only.
// The phase pattern is preserved exactly by the generator when the initial
// state is diagonal, so the reduced engine is a lossless change of variables
// that cuts storage and arithmetic by roughly 8x.

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "superrad/dopri5.hpp"
#include "superrad/model.hpp"

namespace superrad {

class BlockDensityMatrix {
public:
    BlockDensityMatrix() = default;
    explicit BlockDensityMatrix(int n_atoms);

    static BlockDensityMatrix excited(int n_atoms);  // |N><N| (x) |0><0|
    static BlockDensityMatrix ground(int n_atoms);   // |0><0| (x) |0><0|

    // Sum of (M+1)^2 over M = 0..N.
    static std::size_t entry_count(int n_atoms);
    static std::size_t block_offset(int m) {
        const auto mm = static_cast<std::size_t>(m);
        return mm * (mm + 1) * (2 * mm + 1) / 6;
    }

    int n_atoms() const noexcept { return n_; }
    cdouble& at(int m, int i, int j) { return data_[block_offset(m) + static_cast<std::size_t>(i) * (m + 1) + j]; }
    const cdouble& at(int m, int i, int j) const {
        return data_[block_offset(m) + static_cast<std::size_t>(i) * (m + 1) + j];
    }
    cdouble* block(int m) { return data_.data() + block_offset(m); }
    const cdouble* block(int m) const { return data_.data() + block_offset(m); }
    std::vector<cdouble>& data() noexcept { return data_; }
    const std::vector<cdouble>& data() const noexcept { return data_; }

    cdouble trace() const;
    double expectation_n() const;           // atomic excitations
    double total_excitations() const;       // atoms + mode quanta
    double hermiticity_error() const;       // max |rho - rho^dagger| over all blocks
    double min_block_eigenvalue() const;    // smallest eigenvalue over all blocks
    std::vector<double> block_populations() const;  // trace of each block

private:
    int n_ = 0;
    std::vector<cdouble> data_;
};

// Generator data for one parameter set. Coupling in block M between basis
// indices i and i-1 is (gamma0/sqrt2) sqrt(i (N-i+1)) sqrt(M-i+1).
class BlockLiouvillian {
public:
    BlockLiouvillian() = default;
    explicit BlockLiouvillian(const SystemParams& p);

    int n_atoms() const noexcept { return n_; }
    double lambda() const noexcept { return lambda_; }
    double omega0() const noexcept { return omega0_; }

    double coupling(int m, int i) const {
        return (i <= 0 || i > m) ? 0.0 : ladder_[i] * sqrt_[m - i + 1];
    }
    double feed(int m, int i, int j) const {  // gain of block m from block m+1
        return 2.0 * lambda_ * sqrt_[m + 1 - i] * sqrt_[m + 1 - j];
    }
    double decay(int m, int i, int j) const { return lambda_ * (2 * m - i - j); }
    double sqrt_int(int k) const { return sqrt_[k]; }

    // Dense copy of the block Hamiltonian, row-major (M+1)x(M+1).
    std::vector<double> hamiltonian_block(int m) const;

private:
    int n_ = 0;
    double lambda_ = 0.0;
    double omega0_ = 1.0;
    std::vector<double> ladder_;  // (gamma0/sqrt2) sqrt(i (N-i+1))
    std::vector<double> sqrt_;    // sqrt(k), k = 0..N+1
};

enum class Engine { automatic, dense, reduced };

const char* engine_name(Engine e);

// Bytes the integrator needs for one trajectory with the given engine.
std::size_t evolve_required_bytes(int n_atoms, Engine engine, bool keep_final_state);

inline constexpr std::size_t kDefaultMemoryBudget = std::size_t{4} << 30;

// Validates the parameters and checks the memory budget; throws CapacityError
// if a trajectory would not fit.
BlockLiouvillian build_liouvillian(const SystemParams& p, std::size_t memory_budget = kDefaultMemoryBudget,
                                   Engine engine = Engine::automatic);

void apply_generator(const BlockLiouvillian& L, const BlockDensityMatrix& rho, BlockDensityMatrix& out);
BlockDensityMatrix apply_generator(const BlockLiouvillian& L, const BlockDensityMatrix& rho);

// -omega0 Tr[n d rho/dt]. The dissipator leaves the atomic populations' first
// moment unchanged, so only nearest-neighbour coherences contribute.
double intensity_from_generator(const BlockLiouvillian& L, const BlockDensityMatrix& rho);

double expectation_n(const BlockDensityMatrix& rho);

// Packed real representation used by the reduced engine.
class ReducedLayout {
public:
    explicit ReducedLayout(int n_atoms);
    static std::size_t entry_count(int n_atoms);
    std::size_t size() const noexcept { return size_; }
    std::size_t block_offset(int m) const { return block_offset_[m]; }
    // Index of r_ij (i <= j) in block m.
    std::size_t index(int m, int i, int j) const {
        const auto ii = static_cast<std::size_t>(i);
        return block_offset_[m] + ii * (m + 1) - ii * (ii - 1) / 2 + (j - i);
    }

private:
    std::size_t size_ = 0;
    std::vector<std::size_t> block_offset_;
};

void apply_reduced_generator(const BlockLiouvillian& L, const ReducedLayout& lay, const double* r, double* dr);
double reduced_intensity(const BlockLiouvillian& L, const ReducedLayout& lay, const double* r);
BlockDensityMatrix expand_reduced(const ReducedLayout& lay, int n_atoms, const double* r);

struct EvolveOptions {
    Engine engine = Engine::automatic;
    std::size_t memory_budget_bytes = kDefaultMemoryBudget;
    bool keep_final_state = true;
    // Stop when <n> < excitation_fraction * N at a sample (module horizon rule).
    bool apply_horizon_policy = false;
    // Stop once I(t) drops below this fraction of its running maximum (0 = off).
    double stop_below_peak_fraction = 0.0;
    // Largest |Tr rho - 1| tolerated before AccuracyError.
    double trace_tolerance = 1e-6;
    // Called at every sample with the full state (expanded for the reduced engine).
    std::function<void(double, const BlockDensityMatrix&)> state_observer;
    // Called with the trace recorded so far after every sample; returning
    // true stops the run with stop_reason "observer".
    std::function<bool(const IntensityTrace&)> stop_when;
    // Integrator overrides; 0 keeps the defaults from SystemParams.
    std::size_t max_steps = 0;
    double initial_step = 0.0;
};

struct EvolveResult {
    IntensityTrace trace;
    std::vector<double> total_excitation;  // <n + b^dagger b> at each sample
    std::vector<double> trace_error;       // Tr rho - 1 at each sample
    std::optional<BlockDensityMatrix> final_state;
    Dopri5Stats stats;
    Engine engine = Engine::automatic;
};

// Engine picked by Engine::automatic.
Engine resolve_engine(int n_atoms, Engine requested);

EvolveResult evolve(const SystemParams& p, const std::vector<double>& grid, const EvolveOptions& opt = {});

// Uniform grid from 0 to the horizon cap.
std::vector<double> horizon_grid(const SystemParams& p, std::size_t n_samples);

}  // namespace superrad
