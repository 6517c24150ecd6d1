#pragma once

// Quantum reset processes: every jump is J_k = sqrt(kappa_k) |phi_k><xi_k|, so
// after a jump the state is one of finitely many reset points and the jump
// record is a semi-Markov process driven by the jumpless trajectories.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qmeta/unravel.hpp"

namespace qmeta {

struct ResetChannel {
    double kappa = 0.0;
    CVector phi;  // destination
    CVector xi;
    std::size_t reset_point = 0;  // index into ResetStructure::reset_points
};

struct ResetStructure {
    std::size_t dim = 0;
    std::vector<ResetChannel> channels;  // one per jump operator, same order
    std::vector<CVector> reset_points;   // distinct destinations, first-seen order

    /// Index of the reset point within trace distance `tol` of psi.
    std::optional<std::size_t> find_reset_point(const CVector& psi, double tol = 1e-9) const;
};

/// Throws NotResetProcess naming the first jump operator that is not rank one.
ResetStructure detect_reset_structure(const LindbladModel& model, const Tolerances& tol = default_tolerances());

struct JumplessOptions {
    double tau_max = 0.0;     // 0: chosen from the spectrum of G
    double tau_min = 1e-2;    // first nonzero grid point
    int per_decade = 64;
    double ell_relative = 1e-4;
};

/// Normalised no-jump evolution from reset point j, tabulated on
/// tau = 0 plus a geometric grid. Exact values at any tau are available
/// through the *_at accessors.
class JumplessTrajectory {
public:
    JumplessTrajectory(const EffectiveGenerator& gen, const ResetStructure& rs, std::size_t j,
                       const JumplessOptions& opts = {});

    std::size_t reset_index() const { return j_; }
    const std::vector<double>& tau() const { return tau_; }
    const std::vector<CVector>& states() const { return states_; }
    const std::vector<double>& survival() const { return survival_; }
    /// rates()[k][i] = w_jk(tau_i).
    const std::vector<std::vector<double>>& rates() const { return rates_; }
    /// Arc length in the sign convention of this trajectory: forward from the
    /// reset point (>= 0) for single-reset models, backward from phi_a (<= 0)
    /// when there are several reset points.
    const std::vector<double>& ell() const { return ell_; }
    bool backward() const { return backward_; }
    /// Total length from the reset point to phi_a.
    double ell_total() const { return ell_total_; }
    double tau_max() const { return tau_.back(); }

    const CVector& phi_a() const { return phi_a_; }
    Complex theta_a() const { return theta_a_; }

    CVector state_at(double tau) const;
    double survival_at(double tau) const;
    double log_survival_at(double tau) const;
    double rate_at(std::size_t k, double tau) const;
    double total_rate_at(double tau) const;
    /// Interpolated arc length (signed convention).
    double ell_at(double tau) const;
    /// Inverse of ell_at; +inf beyond the tabulated range.
    double tau_at_ell(double ell) const;

    const ModalOrbit& orbit() const { return orbit_; }

private:
    std::size_t j_;
    std::vector<CMatrix> jumps_;
    ModalOrbit orbit_;
    std::vector<double> tau_, survival_, ell_, ell_fwd_;
    std::vector<CVector> states_;
    std::vector<std::vector<double>> rates_;
    bool backward_ = false;
    double ell_total_ = 0.0;
    CVector phi_a_;
    Complex theta_a_;
};

/// w_jk(tau) = kappa_k <xi_k|psi_j(tau)|xi_k>, evaluated exactly.
double semi_markov_rate(const JumplessTrajectory& jt, std::size_t k, double tau);

struct SemiMarkovPath {
    std::size_t start = 0;               // reset point at t = 0
    double t_final = 0.0;
    std::vector<double> times;           // jump times
    std::vector<std::size_t> channels;   // jump operator used
    std::vector<std::size_t> resets;     // reset point reached
};

class SemiMarkovSampler {
public:
    SemiMarkovSampler(const EffectiveGenerator& gen, const ResetStructure& rs,
                      const Tolerances& tol = default_tolerances());

    /// Waiting time from reset point j, or nullopt when none occurs before t_max.
    std::optional<double> waiting_time(std::size_t j, StreamRng& rng, double t_max) const;
    /// Channel of the jump that ends a wait of length tau from reset point j.
    std::size_t channel(std::size_t j, double tau, StreamRng& rng) const;
    SemiMarkovPath sample(std::size_t j0, double t_final, StreamRng& rng) const;

    const ResetStructure& structure() const { return rs_; }
    const ModalOrbit& orbit(std::size_t j) const { return orbits_.at(j); }

private:
    std::vector<CMatrix> jumps_;
    ResetStructure rs_;
    std::vector<ModalOrbit> orbits_;
    double bracket_;
    Tolerances tol_;
};

SemiMarkovPath sample_semi_markov(const EffectiveGenerator& gen, const ResetStructure& rs, std::size_t j0,
                                  double t_final, StreamRng& rng);

enum class SplittingMethod { Automatic, Sylvester, Quadrature };

struct SplittingResult {
    std::vector<double> p;     // P(k | psi0), one per jump operator
    double p_never = 0.0;      // probability of never jumping
    std::string method;        // "sylvester" or "quadrature"
    bool fallback = false;     // quadrature used because G has a non-decaying mode
};

/// P(k|psi0) = Tr[J_k X J_k^dag] with G X + X G^dag = -|psi0><psi0|.
/// Automatic uses the Sylvester solve and falls back to quadrature with a
/// cutoff (flagged) when G has an eigenvalue on the imaginary axis.
SplittingResult splitting_probabilities(const EffectiveGenerator& gen, const CVector& psi0,
                                        SplittingMethod method = SplittingMethod::Automatic,
                                        const Tolerances& tol = default_tolerances());

/// Mean time to the first jump from psi0, Tr X for the same X; +inf when G
/// has a non-decaying mode.
double mean_waiting_time(const EffectiveGenerator& gen, const CVector& psi0,
                         const Tolerances& tol = default_tolerances());

struct CommittorResult {
    std::vector<double> c;  // per phase
    double p_never = 0.0;
    std::string method;
    bool fallback = false;
    bool in_core = false;   // psi0 is itself a core (reset) state
};

/// C_X(psi0) = sum of P(k|psi0) over the jumps whose reset point belongs to X.
/// phase_of_channel[k] in [0, n_phases).
CommittorResult committor_reset(const EffectiveGenerator& gen, const ResetStructure& rs, const CVector& psi0,
                                const std::vector<int>& phase_of_channel, int n_phases,
                                SplittingMethod method = SplittingMethod::Automatic,
                                const Tolerances& tol = default_tolerances());

/// First time the normalised flow of `orbit` comes within trace distance
/// `radius` of `center`, searched on t in [0, t_max].
std::optional<double> first_hit_time(const ModalOrbit& orbit, const CVector& center, double radius, double t_max,
                                     double t_first);

struct SingleResetCommittor {
    double c_dark = 0.0;
    double c_bright = 0.0;
    double tau_hit = 0.0;
    bool never_hits = false;  // the flow did not reach the ball by tau_max
};

/// One-jump models: C_B = integral of the jump density up to the ball entry
/// time, C_D = S(tau_hit). tau_max <= 0 selects 100 / |Re theta_a|.
SingleResetCommittor committor_single_reset(const EffectiveGenerator& gen, const CVector& psi0,
                                            const CVector& center, double radius = 0.05, double tau_max = 0.0);

struct ElbowReport {
    CVector elbow_state;
    double tau_e = 0.0;
    double survival_tau_e = 0.0;
    double d = 1.0;
    double a_a = 0.0, a_plus = 0.0, a_minus = 0.0;
    double theta_a = 0.0, theta_plus = 0.0, theta_minus = 0.0;
    CVector phi_a, phi_plus, phi_minus;  // real, normalised
};

/// Expansion of reset point j in the eigenvectors of G (three real, distinct
/// eigenvalues). Throws ComplexSpectrum otherwise.
ElbowReport elbow_analysis(const EffectiveGenerator& gen, const ResetStructure& rs, double d = 1.0,
                           std::size_t j = 0);

/// Integral over [a, b] of the total jump density sum_k ||J_k e^{Gt} psi||^2.
double integrated_jump_density(const EffectiveGenerator& gen, const ModalOrbit& orbit, double a, double b,
                               std::optional<std::size_t> channel = std::nullopt);

// ---- tables ----------------------------------------------------------------

/// tau, ell, S, w_0.., re_0, im_0, ...
void write_jumpless_csv(const JumplessTrajectory& jt, std::ostream& out);

struct CommittorRow {
    std::string psi_id;
    std::string phase;
    double value = 0.0;
    std::string method;
};

/// psi_id, phase, value, method
void write_committor_csv(const std::vector<CommittorRow>& rows, std::ostream& out);

}  // namespace qmeta
