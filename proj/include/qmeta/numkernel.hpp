#pragma once

// Dense complex linear algebra for small open-system problems: general
// eigendecomposition with biorthonormal left/right vectors, Sylvester solves,
// and spectral propagators.

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "qmeta/tolerances.hpp"

namespace qmeta {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

/// Biorthonormal eigensystem of a diagonalisable matrix.
///
/// Column j of `right` is the right eigenvector for `values[j]`; row i of
/// `left` is the left eigenvector, normalised so that left * right = 1.
/// Eigenvalues are ordered by descending real part, ties broken by
/// descending imaginary part. Right vectors have unit Euclidean norm.
struct EigenSystem {
    std::vector<Complex> values;
    CMatrix right;
    CMatrix left;

    std::size_t size() const { return values.size(); }
    CVector right_vector(std::size_t j) const { return right.col(Eigen::Index(j)); }
    /// Row i of `left`, returned as a column of the same numbers (no conjugation).
    CVector left_vector(std::size_t i) const { return left.row(Eigen::Index(i)).transpose(); }
    /// V diag(values) W.
    CMatrix reconstruct() const;
};

/// Eigendecomposition of a general square complex matrix.
/// Throws NonConvergence, or DefectiveMatrix (carrying the eigenvalues) when the
/// eigenvectors cannot be biorthonormalised.
EigenSystem eig_general(const CMatrix& a, const Tolerances& tol = default_tolerances());

/// Sorts eigenvalue indices by descending real part, ties by descending imaginary part.
std::vector<std::size_t> spectral_order(const std::vector<Complex>& values, double tie_tol);

/// Solves A X + X B = C by Bartels-Stewart on the complex Schur forms of A and
/// B. The Schur factorisations are kept so repeated right-hand sides are cheap.
class SylvesterSolver {
public:
    SylvesterSolver(const CMatrix& a, const CMatrix& b,
                    const Tolerances& tol = default_tolerances());

    CMatrix solve(const CMatrix& c) const;

    /// min_{i,j} |a_i + b_j| over the two spectra.
    double separation() const { return separation_; }

private:
    CMatrix a_, b_;
    CMatrix ua_, ta_;  // a = ua ta ua^H
    CMatrix ub_, tb_;  // b = ub tb ub^H
    double separation_ = 0.0;
    Tolerances tol_;
};

CMatrix solve_sylvester(const CMatrix& a, const CMatrix& b, const CMatrix& c,
                        const Tolerances& tol = default_tolerances());

/// e^{A t} v from a precomputed eigensystem of A.
CVector propagate(const EigenSystem& es, const CVector& v, double t);
/// e^{A t} v; diagonalises A on every call.
CVector propagate(const CMatrix& a, const CVector& v, double t);

/// The orbit t -> e^{A t} v expanded in the eigenbasis of A, evaluated with
/// the dominant exponential factored out so that long times neither underflow
/// nor overflow when only the direction or the log-norm is needed.
class ModalOrbit {
public:
    ModalOrbit(std::shared_ptr<const EigenSystem> es, const CVector& v);

    /// e^{A t} v. May underflow for large t.
    CVector state(double t) const;
    /// e^{A t} v / ||e^{A t} v||.
    CVector normalised(double t) const;
    /// log ||e^{A t} v||^2.
    double log_norm2(double t) const;
    double norm2(double t) const;

    const CVector& coefficients() const { return coeffs_; }
    const EigenSystem& eigensystem() const { return *es_; }
    /// Index of the eigenvector that dominates at long times.
    std::size_t dominant_mode() const { return dominant_; }

private:
    CVector scaled(double t) const;  // e^{A t} v * e^{-shift t}

    std::shared_ptr<const EigenSystem> es_;
    CVector coeffs_;
    std::vector<bool> active_;
    double shift_ = 0.0;
    std::size_t dominant_ = 0;
};

// ---- small state utilities ---------------------------------------------

CMatrix density(const CVector& psi);
CVector normalised(const CVector& psi);
bool is_hermitian(const CMatrix& m, double tol);
/// Trace distance between pure states, sqrt(1 - |<a|b>|^2).
double trace_distance_pure(const CVector& a, const CVector& b);
/// Trace distance between Hermitian matrices, (1/2) ||a - b||_1.
double trace_distance(const CMatrix& a, const CMatrix& b);
/// Multiplies by a global phase so that the largest-magnitude entry is real and positive.
CVector fix_phase(const CVector& v);

}  // namespace qmeta
