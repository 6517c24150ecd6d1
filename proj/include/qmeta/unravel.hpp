#pragma once

// Quantum-jump unravelling of a Lindblad model. Waiting times are drawn by
// inverse transform on the exact survival function S(t) = ||e^{Gt} psi||^2,
// so there is no time step.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "qmeta/qme.hpp"

namespace qmeta {

/// Per-trajectory random stream. Streams for different (seed, stream) pairs
/// are seeded independently through std::seed_seq.
class StreamRng {
public:
    StreamRng(std::uint64_t seed, std::uint64_t stream);

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t seed_, stream_;
    std::mt19937_64 engine_;
};

/// G = -i H_eff, H_eff = H - (i/2) sum_k J_k^dag J_k.
struct EffectiveGenerator {
    CMatrix g;
    std::vector<CMatrix> jumps;
    /// Always filled, even when G is defective.
    std::vector<Complex> values;

    /// Null when G is defective.
    std::shared_ptr<const EigenSystem> eigen;

    bool diagonalisable() const { return eigen != nullptr; }
    /// Throws DefectiveMatrix when G has no eigenbasis.
    const std::shared_ptr<const EigenSystem>& eigensystem() const;
    double max_abs_rate() const;  // max |theta_i|, at least 1e-300
};

EffectiveGenerator effective_generator(const LindbladModel& model, const Tolerances& tol = default_tolerances());

/// ||e^{G t} psi||^2.
double survival(const EffectiveGenerator& gen, const CVector& psi, double t);

/// Inverse-transform draw of the first jump time along `orbit` for the
/// uniform variate u: the t with S(t) = u, or nullopt when S(t_max) > u.
std::optional<double> jump_time_for(const ModalOrbit& orbit, double u, double t_max, double initial_bracket,
                                    const Tolerances& tol = default_tolerances());

/// Draws u from `rng` and calls jump_time_for. Initial bracket 0.01 / max|theta|.
std::optional<double> sample_jump_time(const EffectiveGenerator& gen, const CVector& psi0, StreamRng& rng,
                                       double t_max, const Tolerances& tol = default_tolerances());

/// p_k = ||J_k psi||^2 / sum_j ||J_j psi||^2. Throws AllRatesZero for a dark state.
std::vector<double> jump_channel_probabilities(const std::vector<CMatrix>& jumps, const CVector& psi,
                                               const Tolerances& tol = default_tolerances());
std::vector<double> jump_channel_probabilities(const LindbladModel& model, const CVector& psi,
                                               const Tolerances& tol = default_tolerances());

/// Picks index k with probability p[k] given a uniform variate.
std::size_t pick_channel(const std::vector<double>& p, double u);

struct TrajectoryRecord {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    double t_final = 0.0;
    double dt = 0.0;
    std::vector<double> grid_times;       // n * dt, n = 0, 1, ... while <= t_final
    std::vector<CVector> grid_states;     // right-continuous: a jump at a grid time is included
    std::vector<double> jump_times;
    std::vector<std::size_t> jump_indices;
    std::vector<CVector> post_jump_states;
    CVector final_state;
};

struct TrajectoryOptions {
    double t_final = 0.0;
    double dt = 0.0;
};

TrajectoryRecord simulate_trajectory(const EffectiveGenerator& gen, const CVector& psi0,
                                     const TrajectoryOptions& opts, StreamRng& rng,
                                     const Tolerances& tol = default_tolerances());
TrajectoryRecord simulate_trajectory(const LindbladModel& model, const CVector& psi0,
                                     const TrajectoryOptions& opts, StreamRng& rng);

/// n trajectories with streams 0..n-1 of `seed`, spread over `threads` workers
/// (0 = hardware concurrency). The result is ordered by stream and does not
/// depend on the worker count.
std::vector<TrajectoryRecord> run_ensemble(const EffectiveGenerator& gen, const CVector& psi0,
                                           const TrajectoryOptions& opts, std::size_t n, std::uint64_t seed,
                                           unsigned threads = 0);

/// Applies fn(i) for i in [0, n) across worker threads. fn must only touch
/// per-index state.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

struct EnsembleAverage {
    std::vector<double> times;
    std::vector<CMatrix> mean;            // mean of psi psi^dag
    std::vector<Eigen::MatrixXd> se_re;   // standard error of the mean, real parts
    std::vector<Eigen::MatrixXd> se_im;
    std::size_t n = 0;
};

/// Throws EmptyEnsemble, or InvalidArgument when the grids differ.
EnsembleAverage ensemble_average(const std::vector<TrajectoryRecord>& records);

/// Ensemble mean against a reference density-matrix path on the same grid.
struct EnsembleComparison {
    double max_abs_z = 0.0;          // over entries with nonzero standard error
    double max_abs_dev_exact = 0.0;  // entries with zero spread (e.g. t = 0)
    bool within_3sigma = false;
    // Joint test on the independent real components (upper triangle, one
    // diagonal entry dropped for the trace) of all grid points with spread:
    // Hotelling T^2 with the sample covariance, referred to F(p, n - p).
    std::size_t components = 0;  // rank p of the sample covariance
    double t2 = 0.0;
    double p_value = 0.0;
};

/// Throws InvalidArgument when the sizes differ or n <= p.
EnsembleComparison compare_ensemble(const std::vector<TrajectoryRecord>& records,
                                    const std::vector<CMatrix>& reference);

}  // namespace qmeta
