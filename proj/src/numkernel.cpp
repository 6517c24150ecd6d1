#include "qmeta/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "qmeta/errors.hpp"

namespace qmeta {

namespace {

void require_square_finite(const CMatrix& a, const char* what) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        std::ostringstream os;
        os << what << ": expected a non-empty square matrix, got " << a.rows() << "x" << a.cols();
        throw DimensionMismatch(os.str());
    }
    if (!a.allFinite()) throw InvalidArgument(std::string(what) + ": matrix has non-finite entries");
}

// Disjoint-set grouping of eigenvalues closer than `width`.
std::vector<std::vector<std::size_t>> clusters(const std::vector<Complex>& vals, double width) {
    const std::size_t n = vals.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(vals[i] - vals[j]) <= width) parent[find(i)] = find(j);
    std::vector<std::vector<std::size_t>> groups(n);
    for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    for (auto& g : groups)
        if (g.size() > 1) out.push_back(std::move(g));
    return out;
}

}  // namespace

std::vector<std::size_t> spectral_order(const std::vector<Complex>& values, double tie_tol) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return values[a].real() > values[b].real();
    });
    // Re-sort runs of (near-)equal real parts by imaginary part.
    std::size_t start = 0;
    while (start < idx.size()) {
        std::size_t end = start + 1;
        while (end < idx.size()) {
            const double ra = values[idx[end - 1]].real();
            const double rb = values[idx[end]].real();
            if (std::abs(ra - rb) > tie_tol * std::max(1.0, std::abs(ra))) break;
            ++end;
        }
        std::stable_sort(idx.begin() + std::ptrdiff_t(start), idx.begin() + std::ptrdiff_t(end),
                         [&](std::size_t a, std::size_t b) {
                             return values[a].imag() > values[b].imag();
                         });
        start = end;
    }
    return idx;
}

CMatrix EigenSystem::reconstruct() const {
    CVector lam(Eigen::Index(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) lam(Eigen::Index(i)) = values[i];
    return right * lam.asDiagonal() * left;
}

EigenSystem eig_general(const CMatrix& a, const Tolerances& tol) {
    require_square_finite(a, "eig_general");
    const Eigen::Index n = a.rows();
    const double scale = std::max(1.0, a.norm());

    Eigen::ComplexEigenSolver<CMatrix> solver(a, true);
    if (solver.info() != Eigen::Success)
        throw NonConvergence("eig_general: Schur iteration did not converge");

    std::vector<Complex> raw(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) raw[std::size_t(i)] = solver.eigenvalues()(i);
    CMatrix vecs = solver.eigenvectors();

    // Exactly (or numerically) repeated eigenvalues: take an orthonormal basis
    // of the near-null space of (A - mu I) instead of the back-substituted
    // Schur vectors, which can come out parallel.
    for (const auto& group : clusters(raw, tol.cluster * scale)) {
        Complex mu{0.0, 0.0};
        for (auto i : group) mu += raw[i];
        mu /= double(group.size());
        const CMatrix shifted = a - mu * CMatrix::Identity(n, n);
        Eigen::JacobiSVD<CMatrix> svd(shifted, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const Eigen::Index k = Eigen::Index(group.size());
        if (sv(n - k) > 1e-8 * scale) {
            std::vector<Complex> sorted(raw);
            auto order = spectral_order(raw, tol.ordering_tie);
            for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = raw[order[i]];
            std::ostringstream os;
            os << "eig_general: eigenvalue " << mu << " has algebraic multiplicity " << k
               << " but geometric multiplicity below it (Jordan block)";
            throw DefectiveMatrix(os.str(), sorted);
        }
        for (Eigen::Index c = 0; c < k; ++c) vecs.col(Eigen::Index(group[std::size_t(c)])) = svd.matrixV().col(n - k + c);
        for (auto i : group) raw[i] = mu;
    }

    const auto order = spectral_order(raw, tol.ordering_tie);
    EigenSystem es;
    es.values.resize(order.size());
    es.right.resize(n, n);
    for (std::size_t j = 0; j < order.size(); ++j) {
        es.values[j] = raw[order[j]];
        CVector v = vecs.col(Eigen::Index(order[j]));
        es.right.col(Eigen::Index(j)) = v / v.norm();
    }

    Eigen::PartialPivLU<CMatrix> lu(es.right);
    const double rcond = lu.rcond();
    if (!(rcond >= tol.defective_condition)) {
        std::ostringstream os;
        os << "eig_general: eigenvector matrix is numerically singular (rcond=" << rcond
           << "); matrix is defective or too close to a Jordan block";
        throw DefectiveMatrix(os.str(), es.values);
    }
    es.left = lu.inverse();

    const double bio = (es.left * es.right - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
    if (bio > tol.biorthonormality) {
        std::ostringstream os;
        os << "eig_general: biorthonormalisation failed (max deviation " << bio << ")";
        throw DefectiveMatrix(os.str(), es.values);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        const double res = (a * es.right.col(j) - es.values[std::size_t(j)] * es.right.col(j)).norm();
        if (res > tol.eigen_residual * scale) {
            std::ostringstream os;
            os << "eig_general: eigenpair " << j << " residual " << res << " exceeds tolerance";
            throw NonConvergence(os.str());
        }
    }
    return es;
}

// ---- Sylvester ------------------------------------------------------------

SylvesterSolver::SylvesterSolver(const CMatrix& a, const CMatrix& b, const Tolerances& tol)
    : a_(a), b_(b), tol_(tol) {
    require_square_finite(a, "solve_sylvester(A)");
    require_square_finite(b, "solve_sylvester(B)");
    Eigen::ComplexSchur<CMatrix> sa(a), sb(b);
    if (sa.info() != Eigen::Success || sb.info() != Eigen::Success)
        throw NonConvergence("solve_sylvester: Schur decomposition did not converge");
    ua_ = sa.matrixU();
    ta_ = sa.matrixT();
    ub_ = sb.matrixU();
    tb_ = sb.matrixT();
    separation_ = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ta_.rows(); ++i)
        for (Eigen::Index j = 0; j < tb_.rows(); ++j)
            separation_ = std::min(separation_, std::abs(ta_(i, i) + tb_(j, j)));
    if (separation_ < tol_.sylvester_overlap) {
        std::ostringstream os;
        os << "solve_sylvester: spectra of A and -B overlap (min |a_i + b_j| = " << separation_ << ")";
        throw SingularPencil(os.str());
    }
}

CMatrix SylvesterSolver::solve(const CMatrix& c) const {
    if (c.rows() != a_.rows() || c.cols() != b_.rows())
        throw DimensionMismatch("solve_sylvester: C has incompatible shape");
    const Eigen::Index m = ta_.rows();
    const Eigen::Index n = tb_.rows();
    const CMatrix f = ua_.adjoint() * c * ub_;
    CMatrix y(m, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        CVector rhs = f.col(j);
        for (Eigen::Index k = 0; k < j; ++k) rhs -= tb_(k, j) * y.col(k);
        CMatrix shifted = ta_;
        shifted.diagonal().array() += tb_(j, j);
        y.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
    }
    CMatrix x = ua_ * y * ub_.adjoint();
#ifdef QMETA_VERIFY_NUMERICS
    const double res = (a_ * x + x * b_ - c).norm();
    const double bound = tol_.sylvester_residual *
                         std::max(c.norm(), 1e-7 * (a_.norm() + b_.norm()) * x.norm());
    if (res > bound) {
        std::ostringstream os;
        os << "solve_sylvester: residual " << res << " exceeds " << bound;
        throw NonConvergence(os.str());
    }
#endif
    return x;
}

CMatrix solve_sylvester(const CMatrix& a, const CMatrix& b, const CMatrix& c, const Tolerances& tol) {
    return SylvesterSolver(a, b, tol).solve(c);
}

// ---- propagation ----------------------------------------------------------

CVector propagate(const EigenSystem& es, const CVector& v, double t) {
    if (t < 0) throw InvalidArgument("propagate: t must be non-negative");
    if (v.size() != es.right.rows()) throw DimensionMismatch("propagate: vector size mismatch");
    CVector c = es.left * v;
    for (std::size_t i = 0; i < es.values.size(); ++i) c(Eigen::Index(i)) *= std::exp(es.values[i] * t);
    return es.right * c;
}

CVector propagate(const CMatrix& a, const CVector& v, double t) {
    if (t < 0) throw InvalidArgument("propagate: t must be non-negative");
    if (t == 0.0) return v;
    return propagate(eig_general(a), v, t);
}

ModalOrbit::ModalOrbit(std::shared_ptr<const EigenSystem> es, const CVector& v) : es_(std::move(es)) {
    if (v.size() != es_->right.rows()) throw DimensionMismatch("ModalOrbit: vector size mismatch");
    coeffs_ = es_->left * v;
    const double cmax = coeffs_.cwiseAbs().maxCoeff();
    active_.assign(es_->size(), false);
    shift_ = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < es_->size(); ++i) {
        // Coefficients at rounding level would otherwise decide the t -> inf limit.
        if (std::abs(coeffs_(Eigen::Index(i))) > 1e-12 * cmax) {
            active_[i] = true;
            if (es_->values[i].real() > shift_) {
                shift_ = es_->values[i].real();
                dominant_ = i;
            }
        }
    }
    if (!std::isfinite(shift_)) shift_ = 0.0;  // v == 0
}

CVector ModalOrbit::scaled(double t) const {
    CVector c = CVector::Zero(coeffs_.size());
    for (std::size_t i = 0; i < es_->size(); ++i)
        if (active_[i]) c(Eigen::Index(i)) = coeffs_(Eigen::Index(i)) * std::exp((es_->values[i] - shift_) * t);
    return es_->right * c;
}

CVector ModalOrbit::state(double t) const { return scaled(t) * std::exp(shift_ * t); }

CVector ModalOrbit::normalised(double t) const {
    CVector y = scaled(t);
    const double nrm = y.norm();
    return nrm > 0 ? CVector(y / nrm) : y;
}

double ModalOrbit::log_norm2(double t) const {
    const double n2 = scaled(t).squaredNorm();
    return 2.0 * shift_ * t + std::log(n2);
}

double ModalOrbit::norm2(double t) const { return std::exp(log_norm2(t)); }

// ---- state utilities --------------------------------------------------------

CMatrix density(const CVector& psi) { return psi * psi.adjoint(); }

CVector normalised(const CVector& psi) {
    const double n = psi.norm();
    if (n == 0.0) throw InvalidArgument("normalised: zero vector");
    return psi / n;
}

bool is_hermitian(const CMatrix& m, double tol) {
    return m.rows() == m.cols() && (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double trace_distance_pure(const CVector& a, const CVector& b) {
    // Norm of the component of b orthogonal to a; unlike sqrt(1 - |<a|b>|^2)
    // this keeps full relative accuracy for nearby states.
    const CVector an = a / a.norm();
    const CVector bn = b / b.norm();
    return std::min(1.0, (bn - an * an.dot(bn)).norm());
}

double trace_distance(const CMatrix& a, const CMatrix& b) {
    const CMatrix d = a - b;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

CVector fix_phase(const CVector& v) {
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    const Complex z = v(imax);
    if (std::abs(z) == 0.0) return v;
    return v * (std::conj(z) / std::abs(z));
}

}  // namespace qmeta
