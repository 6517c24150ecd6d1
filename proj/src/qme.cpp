#include "qmeta/qme.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace qmeta {

void LindbladModel::validate(const Tolerances& tol) const {
    const auto d = Eigen::Index(dim);
    if (dim == 0) throw InvalidArgument("LindbladModel: dimension must be positive");
    if (hamiltonian.rows() != d || hamiltonian.cols() != d)
        throw DimensionMismatch("LindbladModel: Hamiltonian is not dim x dim");
    if (!hamiltonian.allFinite()) throw InvalidArgument("LindbladModel: Hamiltonian has non-finite entries");
    if (!is_hermitian(hamiltonian, tol.hermitian))
        throw InvalidArgument("LindbladModel: Hamiltonian is not Hermitian");
    for (std::size_t k = 0; k < jumps.size(); ++k) {
        if (jumps[k].rows() != d || jumps[k].cols() != d) {
            std::ostringstream os;
            os << "LindbladModel: jump operator " << k << " is not dim x dim";
            throw DimensionMismatch(os.str());
        }
        if (!jumps[k].allFinite()) throw InvalidArgument("LindbladModel: jump operator has non-finite entries");
    }
}

CVector vectorise(const CMatrix& rho) {
    return Eigen::Map<const CVector>(rho.data(), rho.size());  // Eigen is column-major
}

CMatrix devectorise(const CVector& v, std::size_t dim) {
    if (std::size_t(v.size()) != dim * dim) throw DimensionMismatch("devectorise: length is not dim^2");
    return Eigen::Map<const CMatrix>(v.data(), Eigen::Index(dim), Eigen::Index(dim));
}

CMatrix build_liouvillian(const LindbladModel& model) {
    model.validate();
    const auto d = Eigen::Index(model.dim);
    const CMatrix id = CMatrix::Identity(d, d);
    const CMatrix& h = model.hamiltonian;
    CMatrix sup = -kI * CMatrix(Eigen::kroneckerProduct(id, h)) + kI * CMatrix(Eigen::kroneckerProduct(h.transpose(), id));
    for (const auto& j : model.jumps) {
        const CMatrix jdj = j.adjoint() * j;
        sup += Eigen::kroneckerProduct(j.conjugate(), j);
        sup -= 0.5 * CMatrix(Eigen::kroneckerProduct(id, jdj));
        sup -= 0.5 * CMatrix(Eigen::kroneckerProduct(jdj.transpose(), id));
    }
    return sup;
}

CMatrix apply_liouvillian(const LindbladModel& model, const CMatrix& rho) {
    const CMatrix& h = model.hamiltonian;
    CMatrix out = -kI * (h * rho - rho * h);
    for (const auto& j : model.jumps) {
        const CMatrix jdj = j.adjoint() * j;
        out += j * rho * j.adjoint() - 0.5 * (jdj * rho + rho * jdj);
    }
    return out;
}

double jump_activity(const LindbladModel& model, const CMatrix& rho) {
    double a = 0.0;
    for (const auto& j : model.jumps) a += (j * rho * j.adjoint()).trace().real();
    return a;
}

SpectralData spectral_decompose(const LindbladModel& model, const Tolerances& tol) {
    const std::size_t d = model.dim;
    SpectralData sd;
    sd.dim = d;
    sd.eigen = eig_general(build_liouvillian(model), tol);
    sd.values = sd.eigen.values;

    const std::size_t n = sd.values.size();
    sd.right.resize(n);
    sd.left.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        sd.right[j] = devectorise(sd.eigen.right_vector(j), d);
        // Tr[L rho] = w . vec(rho)  =>  L = devec(w)^T
        sd.left[j] = devectorise(sd.eigen.left_vector(j), d).transpose();
    }

    std::vector<std::size_t> zeros;
    for (std::size_t j = 0; j < n; ++j)
        if (std::abs(sd.values[j]) < tol.steady_state) zeros.push_back(j);
    if (zeros.size() != 1 || zeros.front() != 0) {
        std::vector<CMatrix> cands;
        for (auto j : zeros) {
            CMatrix r = sd.right[j];
            const Complex tr = r.trace();
            if (std::abs(tr) > 1e-12) r /= tr;
            cands.push_back(r);
        }
        std::ostringstream os;
        os << "spectral_decompose: " << zeros.size() << " eigenvalues with |lambda| < " << tol.steady_state
           << "; the steady state is not unique";
        throw DegenerateSteadyState(os.str(), std::move(cands));
    }

    // Steady state with unit trace; L_1 becomes the identity.
    const Complex tr = sd.right[0].trace();
    sd.right[0] /= tr;
    sd.left[0] *= tr;
    sd.eigen.right.col(0) /= tr;
    sd.eigen.left.row(0) *= tr;

    // Real eigenvalues: rotate the (R, L) pair to Hermitian representatives.
    for (std::size_t j = 1; j < n; ++j) {
        if (std::abs(sd.values[j].imag()) > 1e-12 * std::max(1.0, std::abs(sd.values[j]))) continue;
        const Complex s = (sd.right[j] * sd.right[j]).trace();  // e^{2 i phi} ||R||^2 when R = e^{i phi} Hermitian
        if (std::abs(s) < 1e-14) continue;
        const Complex ph = std::exp(-0.5 * kI * std::arg(s));
        sd.right[j] *= ph;
        sd.left[j] /= ph;
        sd.eigen.right.col(Eigen::Index(j)) *= ph;
        sd.eigen.left.row(Eigen::Index(j)) /= ph;
    }
    return sd;
}

namespace {

void require_density_matrix(const CMatrix& rho, std::size_t dim, const Tolerances& tol) {
    const auto d = Eigen::Index(dim);
    if (rho.rows() != d || rho.cols() != d) throw DimensionMismatch("evolve_qme: rho0 has wrong shape");
    if (!is_hermitian(rho, tol.density_matrix)) throw InvalidArgument("evolve_qme: rho0 is not Hermitian");
    if (std::abs(rho.trace() - 1.0) > tol.density_matrix) throw InvalidArgument("evolve_qme: rho0 does not have unit trace");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol.density_matrix)
        throw InvalidArgument("evolve_qme: rho0 is not positive semidefinite");
}

}  // namespace

std::vector<CMatrix> evolve_qme(const SpectralData& spectral, const CMatrix& rho0,
                                const std::vector<double>& times, const Tolerances& tol) {
    require_density_matrix(rho0, spectral.dim, tol);
    const CVector c = spectral.eigen.left * vectorise(rho0);
    std::vector<CMatrix> out;
    out.reserve(times.size());
    for (double t : times) {
        if (t < 0) throw InvalidArgument("evolve_qme: negative time");
        CVector ct = c;
        for (std::size_t j = 0; j < spectral.values.size(); ++j) ct(Eigen::Index(j)) *= std::exp(spectral.values[j] * t);
        CMatrix rho = devectorise(spectral.eigen.right * ct, spectral.dim);
        out.emplace_back(0.5 * (rho + rho.adjoint()));
    }
    return out;
}

std::vector<CMatrix> evolve_qme(const LindbladModel& model, const CMatrix& rho0,
                                const std::vector<double>& times, const Tolerances& tol) {
    return evolve_qme(spectral_decompose(model, tol), rho0, times, tol);
}

CMatrix metastable_truncation(const SpectralData& spectral, const CMatrix& rho0, double t, std::size_t m) {
    if (m == 0 || m > spectral.values.size()) throw InvalidArgument("metastable_truncation: m out of range");
    CMatrix rho = spectral.right[0];
    for (std::size_t k = 1; k < m; ++k)
        rho += (spectral.left[k] * rho0).trace() * std::exp(spectral.values[k] * t) * spectral.right[k];
    return rho;
}

CMatrix slow_projection(const SpectralData& spectral, const CMatrix& rho0, std::size_t m) {
    return metastable_truncation(spectral, rho0, 0.0, m);
}

std::size_t select_slow_modes(const SpectralData& spectral) {
    const auto& v = spectral.values;
    std::size_t best = 2;
    double best_ratio = -1.0;
    for (std::size_t m = 2; m + 1 <= v.size(); ++m) {
        const double slow = std::abs(v[m - 1].real());
        if (slow == 0.0) continue;
        const double ratio = std::abs(v[m].real()) / slow;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = m;
        }
    }
    return best;
}

MetaDecomposition metastable_analysis(const SpectralData& spectral, const LindbladModel& model,
                                      const MetastableOptions& opts, const Tolerances& tol) {
    const auto& v = spectral.values;
    MetaDecomposition md;
    md.m = opts.m ? *opts.m : select_slow_modes(spectral);
    if (md.m < 2 || md.m + 1 > v.size()) throw InvalidArgument("metastable_analysis: m out of range");

    const double re_slow = v[md.m - 1].real();
    const double re_fast = v[md.m].real();
    md.tau_slow = -1.0 / re_slow;
    md.tau_fast = -1.0 / re_fast;
    md.gap_ratio = re_fast / re_slow;
    md.no_gap = !(std::abs(md.gap_ratio) >= tol.gap_warning);
    if (md.no_gap && opts.strict_gap) {
        std::ostringstream os;
        os << "metastable_analysis: gap ratio " << md.gap_ratio << " below " << tol.gap_warning;
        throw NoGap(os.str());
    }
    if (md.m != 2) return md;

    md.classical = true;
    const auto d = Eigen::Index(spectral.dim);
    const CMatrix l2 = 0.5 * (spectral.left[1] + spectral.left[1].adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(l2, Eigen::EigenvaluesOnly);
    md.alpha_min = es.eigenvalues().minCoeff();
    md.alpha_max = es.eigenvalues().maxCoeff();
    const double span = md.alpha_max - md.alpha_min;
    if (!(span > 0)) throw InvalidArgument("metastable_analysis: L_2 has a degenerate spectrum");

    const CMatrix r2 = 0.5 * (spectral.right[1] + spectral.right[1].adjoint());
    const CMatrix& rss = spectral.right[0];
    md.rho_a = rss + md.alpha_max * r2;
    md.rho_b = rss + md.alpha_min * r2;
    const CMatrix id = CMatrix::Identity(d, d);
    md.povm_a = (l2 - md.alpha_min * id) / span;
    md.povm_b = id - md.povm_a;
    md.activity_a = jump_activity(model, md.rho_a);
    md.activity_b = jump_activity(model, md.rho_b);
    if (md.activity_a < md.activity_b) {
        std::swap(md.rho_a, md.rho_b);
        std::swap(md.povm_a, md.povm_b);
        std::swap(md.activity_a, md.activity_b);
    }
    return md;
}

MetaDecomposition small_parameter_limit(const std::function<LindbladModel(double)>& family, double eps,
                                        const MetastableOptions& opts) {
    const LindbladModel model = family(eps);
    return metastable_analysis(spectral_decompose(model), model, opts);
}

std::pair<double, double> committor_qme(const MetaDecomposition& meta, const CVector& psi) {
    if (!meta.classical) throw InvalidArgument("committor_qme: decomposition is not two-phase (m != 2)");
    if (std::abs(psi.norm() - 1.0) > 1e-8) throw InvalidArgument("committor_qme: state is not normalised");
    const double ca = psi.dot(meta.povm_a * psi).real();
    return {ca, 1.0 - ca};
}

DfsCoordinates dfs_coordinates(const CMatrix& rho, const CVector& b1, const CVector& b2) {
    if (std::abs(b1.norm() - 1.0) > 1e-10 || std::abs(b2.norm() - 1.0) > 1e-10 || std::abs(b1.dot(b2)) > 1e-10)
        throw InvalidArgument("dfs_coordinates: basis states are not orthonormal");
    DfsCoordinates c;
    c.p1 = b1.dot(rho * b1).real();
    c.p2 = b2.dot(rho * b2).real();
    c.z = b1.dot(rho * b2);
    return c;
}

}  // namespace qmeta
