#pragma once

// Quantum master equation: Liouvillian construction, spectral data,
// density-matrix evolution and the two-phase metastable decomposition.
//
// Vectorisation is column-stacking throughout: vec(rho)[a + d*b] = rho(a, b),
// so vec(A X B) = (B^T (x) A) vec(X).

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmeta/errors.hpp"
#include "qmeta/numkernel.hpp"

namespace qmeta {

struct LindbladModel {
    std::size_t dim = 0;
    CMatrix hamiltonian;
    std::vector<CMatrix> jumps;
    std::string label;

    /// Throws DimensionMismatch / InvalidArgument when the invariants fail.
    void validate(const Tolerances& tol = default_tolerances()) const;
};

CVector vectorise(const CMatrix& rho);
CMatrix devectorise(const CVector& v, std::size_t dim);

/// Superoperator of -i[H, .] + sum_k (J . J^dag - {J^dag J, .}/2), dim^2 x dim^2.
CMatrix build_liouvillian(const LindbladModel& model);
/// Applies the Liouvillian directly in matrix form (no superoperator).
CMatrix apply_liouvillian(const LindbladModel& model, const CMatrix& rho);

/// Eigen-decomposition of the Liouvillian in operator form.
///
/// `right[j]` and `left[j]` are dim x dim matrices with Tr[left[i] right[j]] =
/// delta_ij. right[0] is the steady state with unit trace and left[0] the
/// identity. For real eigenvalues the pair is rephased so both are Hermitian.
struct SpectralData {
    std::size_t dim = 0;
    EigenSystem eigen;
    std::vector<Complex> values;
    std::vector<CMatrix> right;
    std::vector<CMatrix> left;

    const CMatrix& steady_state() const { return right.front(); }
};

/// Thrown when more than one eigenvalue vanishes; `candidates` holds the
/// corresponding right eigenmatrices (trace-normalised where possible).
class DegenerateSteadyState : public Error {
public:
    DegenerateSteadyState(const std::string& what, std::vector<CMatrix> candidates)
        : Error("DegenerateSteadyState", what), candidates_(std::move(candidates)) {}
    const std::vector<CMatrix>& candidates() const noexcept { return candidates_; }

private:
    std::vector<CMatrix> candidates_;
};

SpectralData spectral_decompose(const LindbladModel& model, const Tolerances& tol = default_tolerances());

/// rho(t) for every t in `times`, by the exact spectral sum.
std::vector<CMatrix> evolve_qme(const SpectralData& spectral, const CMatrix& rho0,
                                const std::vector<double>& times,
                                const Tolerances& tol = default_tolerances());
std::vector<CMatrix> evolve_qme(const LindbladModel& model, const CMatrix& rho0,
                                const std::vector<double>& times,
                                const Tolerances& tol = default_tolerances());

/// Truncation of the spectral sum to the first m modes:
/// rho_ss + sum_{k=2..m} Tr[L_k rho0] e^{lambda_k t} R_k.
CMatrix metastable_truncation(const SpectralData& spectral, const CMatrix& rho0, double t, std::size_t m);

/// Number of slow modes m maximising |Re l_{m+1}| / |Re l_m| over 2 <= m < dim^2.
std::size_t select_slow_modes(const SpectralData& spectral);

struct MetaDecomposition {
    std::size_t m = 0;
    double tau_slow = 0.0;   // -1 / Re l_m
    double tau_fast = 0.0;   // -1 / Re l_{m+1}
    double gap_ratio = 0.0;  // Re l_{m+1} / Re l_m
    bool no_gap = false;     // gap_ratio below the warning threshold

    /// False when m != 2: only the timescales are filled in.
    bool classical = false;
    // Phase A is the one with the larger jump activity ("bright").
    CMatrix rho_a, rho_b;
    CMatrix povm_a, povm_b;
    double alpha_min = 0.0, alpha_max = 0.0;
    double activity_a = 0.0, activity_b = 0.0;
};

struct MetastableOptions {
    std::optional<std::size_t> m;  // automatic gap detection when empty
    bool strict_gap = false;       // throw NoGap instead of flagging it
};

MetaDecomposition metastable_analysis(const SpectralData& spectral, const LindbladModel& model,
                                      const MetastableOptions& opts = {},
                                      const Tolerances& tol = default_tolerances());

/// The same decomposition evaluated on a model family at a caller-chosen small
/// control parameter; this is what stands in for the eps -> 0 operators.
MetaDecomposition small_parameter_limit(const std::function<LindbladModel(double)>& family, double eps,
                                        const MetastableOptions& opts = {});

/// (C_A, C_B) = (Tr[P_A psi], 1 - C_A).
std::pair<double, double> committor_qme(const MetaDecomposition& meta, const CVector& psi);

struct DfsCoordinates {
    double p1 = 0.0;
    double p2 = 0.0;
    Complex z{0.0, 0.0};
};

/// p1 = <b1|rho|b1>, p2 = <b2|rho|b2>, z = <b1|rho|b2>.
DfsCoordinates dfs_coordinates(const CMatrix& rho, const CVector& b1, const CVector& b2);

/// Sum_k Tr[J_k rho J_k^dag].
double jump_activity(const LindbladModel& model, const CMatrix& rho);

/// Fast-relaxation image of rho0 onto the first m modes (t -> 0+ of the
/// truncated sum).
CMatrix slow_projection(const SpectralData& spectral, const CMatrix& rho0, std::size_t m);

}  // namespace qmeta
