#include "qmeta/reset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SVD>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "qmeta/csv.hpp"
#include "qmeta/errors.hpp"

namespace qmeta {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double first_grid_time(const EffectiveGenerator& gen) { return 1e-3 / gen.max_abs_rate(); }

// Slowest nonzero decay rate among the modes excited in `orbit`, and
// whether a non-decaying mode is excited.
std::pair<double, bool> slowest_decay(const ModalOrbit& orbit) {
    const auto& es = orbit.eigensystem();
    const auto& c = orbit.coefficients();
    const double cmax = c.cwiseAbs().maxCoeff();
    double scale = 0.0;
    for (const auto& v : es.values) scale = std::max(scale, std::abs(v));
    double slow = kInf;
    bool dark = false;
    for (std::size_t i = 0; i < es.size(); ++i) {
        if (std::abs(c(Eigen::Index(i))) <= 1e-12 * cmax) continue;
        const double r = -es.values[i].real();
        if (r <= 1e-12 * std::max(scale, 1e-300))
            dark = true;
        else
            slow = std::min(slow, r);
    }
    return {slow, dark};
}

// Breakpoints a = b_0 < b_1 < ... = b, decades above t0 and one interval below.
std::vector<double> decade_breaks(double a, double b, double t0) {
    std::vector<double> br{a};
    double x = std::max(a, 0.0);
    if (x < t0) x = t0;
    else x *= 10.0;
    while (x < b) {
        if (x > br.back()) br.push_back(x);
        x *= 10.0;
    }
    if (b > br.back()) br.push_back(b);
    return br;
}

// Adaptive G-K with an absolute floor: the integrands are probability
// densities of total mass <= 1, so 1e-14 per panel is below anything reported.
double quad(const std::function<double(double)>& f, double a, double b, int depth = 0) {
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0;
    const double r = gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err);
    // The reported error is for the integrand mapped onto [-1, 1].
    err *= 0.5 * (b - a);
    if (err <= std::max(1e-12 * std::abs(r), 1e-14) || depth >= 24) return r;
    const double mid = 0.5 * (a + b);
    return quad(f, a, mid, depth + 1) + quad(f, mid, b, depth + 1);
}

}  // namespace

// ---- reset structure --------------------------------------------------------

std::optional<std::size_t> ResetStructure::find_reset_point(const CVector& psi, double tol) const {
    for (std::size_t r = 0; r < reset_points.size(); ++r)
        if (trace_distance_pure(reset_points[r], psi) <= tol) return r;
    return std::nullopt;
}

ResetStructure detect_reset_structure(const LindbladModel& model, const Tolerances& tol) {
    model.validate(tol);
    ResetStructure rs;
    rs.dim = model.dim;
    for (std::size_t k = 0; k < model.jumps.size(); ++k) {
        const CMatrix& j = model.jumps[k];
        Eigen::JacobiSVD<CMatrix> svd(j, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& s = svd.singularValues();
        if (!(s(0) > 0.0)) throw NotResetProcess(k, "jump operator " + std::to_string(k) + " vanishes");
        if (s.size() > 1 && s(1) >= tol.rank_one * s(0)) {
            std::ostringstream os;
            os << "jump operator " << k << " has rank > 1 (sigma_2 / sigma_1 = " << s(1) / s(0) << ")";
            throw NotResetProcess(k, os.str());
        }
        ResetChannel ch;
        ch.kappa = s(0) * s(0);
        ch.phi = fix_phase(svd.matrixU().col(0));
        ch.xi = j.adjoint() * ch.phi / s(0);
        if ((std::sqrt(ch.kappa) * ch.phi * ch.xi.adjoint() - j).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, s(0)))
            throw NotResetProcess(k, "jump operator " + std::to_string(k) + " does not factorise");
        if (auto r = rs.find_reset_point(ch.phi, tol.reset_point_distance)) {
            ch.reset_point = *r;
        } else {
            ch.reset_point = rs.reset_points.size();
            rs.reset_points.push_back(ch.phi);
        }
        rs.channels.push_back(std::move(ch));
    }
    return rs;
}

// ---- jumpless trajectory ----------------------------------------------------

JumplessTrajectory::JumplessTrajectory(const EffectiveGenerator& gen, const ResetStructure& rs, std::size_t j,
                                       const JumplessOptions& opts)
    : j_(j), jumps_(gen.jumps), orbit_(gen.eigensystem(), rs.reset_points.at(j)) {
    if (opts.per_decade < 1 || !(opts.tau_min > 0)) throw InvalidArgument("JumplessTrajectory: bad grid options");
    const auto& es = orbit_.eigensystem();
    const std::size_t dom = orbit_.dominant_mode();
    theta_a_ = es.values[dom];
    phi_a_ = fix_phase(normalised(es.right_vector(dom)));

    double tau_max = opts.tau_max;
    if (!(tau_max > 0)) {
        // Long enough for the normalised state to settle on phi_a and for the
        // survival to decay, within a fixed cap.
        double gap = kInf;
        const auto& c = orbit_.coefficients();
        const double cmax = c.cwiseAbs().maxCoeff();
        for (std::size_t i = 0; i < es.size(); ++i)
            if (i != dom && std::abs(c(Eigen::Index(i))) > 1e-12 * cmax)
                gap = std::min(gap, theta_a_.real() - es.values[i].real());
        const double t_conv = std::isfinite(gap) && gap > 0 ? 40.0 / gap : 0.0;
        const double t_surv = theta_a_.real() < 0 ? 10.0 / -theta_a_.real() : kInf;
        tau_max = std::min(1e7, std::max({1e2, t_conv, t_surv}));
    }
    if (tau_max <= opts.tau_min) throw InvalidArgument("JumplessTrajectory: tau_max must exceed tau_min");

    const int n = int(std::ceil(opts.per_decade * std::log10(tau_max / opts.tau_min) - 1e-9));
    tau_.push_back(0.0);
    for (int i = 0; i <= n; ++i) tau_.push_back(opts.tau_min * std::pow(10.0, double(i) / opts.per_decade));

    const std::size_t m = tau_.size();
    states_.resize(m);
    survival_.resize(m);
    rates_.assign(jumps_.size(), std::vector<double>(m));
    for (std::size_t i = 0; i < m; ++i) {
        states_[i] = orbit_.normalised(tau_[i]);
        survival_[i] = orbit_.norm2(tau_[i]);
        for (std::size_t k = 0; k < jumps_.size(); ++k) rates_[k][i] = (jumps_[k] * states_[i]).squaredNorm();
    }

    // Arc length with every grid interval split into 2^r sub-steps, doubled
    // until the total settles.
    auto arc = [&](int r, std::vector<double>& cum) {
        const int sub = 1 << r;
        cum.assign(m, 0.0);
        for (std::size_t i = 1; i < m; ++i) {
            const double a = tau_[i - 1], b = tau_[i];
            CVector prev = states_[i - 1];
            double acc = 0.0;
            for (int s = 1; s <= sub; ++s) {
                const double t = s == sub ? b
                                 : a == 0.0 ? b * s / sub
                                            : a * std::pow(b / a, double(s) / sub);
                CVector cur = s == sub ? states_[i] : orbit_.normalised(t);
                acc += trace_distance_pure(prev, cur);
                prev = std::move(cur);
            }
            cum[i] = cum[i - 1] + acc;
        }
    };
    std::vector<double> coarse, fine;
    arc(0, coarse);
    for (int r = 1; r <= 10; ++r) {
        arc(r, fine);
        const bool done = std::abs(fine.back() - coarse.back()) <= opts.ell_relative * std::max(fine.back(), 1e-300);
        coarse.swap(fine);
        if (done) break;
    }
    ell_fwd_ = std::move(coarse);
    ell_total_ = ell_fwd_.back() + trace_distance_pure(states_.back(), phi_a_);
    backward_ = rs.reset_points.size() > 1;
    ell_ = ell_fwd_;
    if (backward_)
        for (auto& x : ell_) x -= ell_total_;
}

CVector JumplessTrajectory::state_at(double tau) const { return orbit_.normalised(tau); }
double JumplessTrajectory::survival_at(double tau) const { return orbit_.norm2(tau); }
double JumplessTrajectory::log_survival_at(double tau) const { return orbit_.log_norm2(tau); }

double JumplessTrajectory::rate_at(std::size_t k, double tau) const {
    return (jumps_.at(k) * orbit_.normalised(tau)).squaredNorm();
}

double JumplessTrajectory::total_rate_at(double tau) const {
    const CVector psi = orbit_.normalised(tau);
    double w = 0.0;
    for (const auto& j : jumps_) w += (j * psi).squaredNorm();
    return w;
}

double JumplessTrajectory::ell_at(double tau) const {
    double f;
    if (tau <= 0.0) {
        f = 0.0;
    } else if (tau >= tau_.back()) {
        f = std::min(ell_total_, ell_fwd_.back() + trace_distance_pure(states_.back(), orbit_.normalised(tau)));
    } else {
        const auto it = std::upper_bound(tau_.begin(), tau_.end(), tau);
        const std::size_t i = std::size_t(it - tau_.begin());
        const double w = (tau - tau_[i - 1]) / (tau_[i] - tau_[i - 1]);
        f = ell_fwd_[i - 1] + w * (ell_fwd_[i] - ell_fwd_[i - 1]);
    }
    return backward_ ? f - ell_total_ : f;
}

double JumplessTrajectory::tau_at_ell(double ell) const {
    const double f = backward_ ? ell + ell_total_ : ell;
    if (f <= 0.0) return 0.0;
    if (f > ell_fwd_.back()) return kInf;
    const auto it = std::lower_bound(ell_fwd_.begin(), ell_fwd_.end(), f);
    const std::size_t i = std::size_t(it - ell_fwd_.begin());
    if (i == 0) return 0.0;
    const double span = ell_fwd_[i] - ell_fwd_[i - 1];
    const double w = span > 0 ? (f - ell_fwd_[i - 1]) / span : 0.0;
    return tau_[i - 1] + w * (tau_[i] - tau_[i - 1]);
}

double semi_markov_rate(const JumplessTrajectory& jt, std::size_t k, double tau) {
    if (tau < 0) throw InvalidArgument("semi_markov_rate: negative tau");
    return jt.rate_at(k, tau);
}

// ---- semi-Markov sampling ---------------------------------------------------

SemiMarkovSampler::SemiMarkovSampler(const EffectiveGenerator& gen, const ResetStructure& rs, const Tolerances& tol)
    : jumps_(gen.jumps), rs_(rs), bracket_(0.01 / gen.max_abs_rate()), tol_(tol) {
    for (const auto& p : rs_.reset_points) orbits_.emplace_back(gen.eigensystem(), p);
}

std::optional<double> SemiMarkovSampler::waiting_time(std::size_t j, StreamRng& rng, double t_max) const {
    return jump_time_for(orbits_.at(j), rng.uniform(), t_max, bracket_, tol_);
}

std::size_t SemiMarkovSampler::channel(std::size_t j, double tau, StreamRng& rng) const {
    const auto p = jump_channel_probabilities(jumps_, orbits_.at(j).normalised(tau), tol_);
    return pick_channel(p, rng.uniform());
}

SemiMarkovPath SemiMarkovSampler::sample(std::size_t j0, double t_final, StreamRng& rng) const {
    if (j0 >= rs_.reset_points.size()) throw InvalidArgument("sample_semi_markov: reset index out of range");
    if (!(t_final > 0)) throw InvalidArgument("sample_semi_markov: T must be positive");
    SemiMarkovPath path;
    path.start = j0;
    path.t_final = t_final;
    double t = 0.0;
    std::size_t j = j0;
    while (t < t_final) {
        const auto w = waiting_time(j, rng, t_final - t);
        if (!w) break;
        const std::size_t k = channel(j, *w, rng);
        t += *w;
        j = rs_.channels[k].reset_point;
        path.times.push_back(t);
        path.channels.push_back(k);
        path.resets.push_back(j);
    }
    return path;
}

SemiMarkovPath sample_semi_markov(const EffectiveGenerator& gen, const ResetStructure& rs, std::size_t j0,
                                  double t_final, StreamRng& rng) {
    return SemiMarkovSampler(gen, rs).sample(j0, t_final, rng);
}

// ---- splitting probabilities and committors --------------------------------

double integrated_jump_density(const EffectiveGenerator& gen, const ModalOrbit& orbit, double a, double b,
                               std::optional<std::size_t> channel) {
    if (!(b > a)) return 0.0;
    const auto& jumps = gen.jumps;
    auto f = [&](double t) {
        const CVector psi = orbit.state(t);
        if (channel) return (jumps.at(*channel) * psi).squaredNorm();
        double s = 0.0;
        for (const auto& j : jumps) s += (j * psi).squaredNorm();
        return s;
    };
    const auto br = decade_breaks(a, b, 0.01 / gen.max_abs_rate());
    double total = 0.0;
    for (std::size_t i = 1; i < br.size(); ++i) total += quad(f, br[i - 1], br[i]);
    return total;
}

namespace {

SplittingResult splitting_quadrature(const EffectiveGenerator& gen, const CVector& psi0) {
    const ModalOrbit orbit(gen.eigensystem(), psi0);
    const auto [slow, dark] = slowest_decay(orbit);
    // Beyond t_cut every decaying contribution is below e^-60.
    const double t_cut = std::isfinite(slow) ? std::min(1e15, 30.0 / slow) : 1.0;
    SplittingResult r;
    r.method = "quadrature";
    r.fallback = dark;
    for (std::size_t k = 0; k < gen.jumps.size(); ++k) r.p.push_back(integrated_jump_density(gen, orbit, 0.0, t_cut, k));
    r.p_never = orbit.norm2(t_cut);
    return r;
}

}  // namespace

SplittingResult splitting_probabilities(const EffectiveGenerator& gen, const CVector& psi0, SplittingMethod method,
                                        const Tolerances& tol) {
    if (std::abs(psi0.norm() - 1.0) > 1e-8) throw InvalidArgument("splitting_probabilities: state is not normalised");
    if (method == SplittingMethod::Quadrature) return splitting_quadrature(gen, psi0);
    try {
        const SylvesterSolver solver(gen.g, gen.g.adjoint(), tol);
        const CMatrix x = solver.solve(-psi0 * psi0.adjoint());
        SplittingResult r;
        r.method = "sylvester";
        double sum = 0.0;
        for (const auto& j : gen.jumps) {
            r.p.push_back((j * x * j.adjoint()).trace().real());
            sum += r.p.back();
        }
        r.p_never = 1.0 - sum;
        return r;
    } catch (const SingularPencil&) {
        if (method == SplittingMethod::Sylvester) throw;
        auto r = splitting_quadrature(gen, psi0);
        r.fallback = true;
        return r;
    }
}

double mean_waiting_time(const EffectiveGenerator& gen, const CVector& psi0, const Tolerances& tol) {
    if (std::abs(psi0.norm() - 1.0) > 1e-8) throw InvalidArgument("mean_waiting_time: state is not normalised");
    try {
        const SylvesterSolver solver(gen.g, gen.g.adjoint(), tol);
        return solver.solve(-psi0 * psi0.adjoint()).trace().real();
    } catch (const SingularPencil&) {
        return kInf;
    }
}

CommittorResult committor_reset(const EffectiveGenerator& gen, const ResetStructure& rs, const CVector& psi0,
                                const std::vector<int>& phase_of_channel, int n_phases, SplittingMethod method,
                                const Tolerances& tol) {
    if (phase_of_channel.size() != rs.channels.size())
        throw InvalidArgument("committor_reset: phase map must have one entry per jump operator");
    if (n_phases < 1) throw InvalidArgument("committor_reset: need at least one phase");
    for (int ph : phase_of_channel)
        if (ph < 0 || ph >= n_phases) throw InvalidArgument("committor_reset: phase index out of range");

    CommittorResult out;
    out.c.assign(std::size_t(n_phases), 0.0);
    if (auto r = rs.find_reset_point(psi0, tol.reset_point_distance)) {
        int phase = -1;
        bool unique = true;
        for (std::size_t k = 0; k < rs.channels.size(); ++k) {
            if (rs.channels[k].reset_point != *r) continue;
            if (phase >= 0 && phase != phase_of_channel[k]) unique = false;
            phase = phase_of_channel[k];
        }
        if (phase >= 0 && unique) {
            out.c[std::size_t(phase)] = 1.0;
            out.method = "core";
            out.in_core = true;
            return out;
        }
    }
    const auto sp = splitting_probabilities(gen, psi0, method, tol);
    for (std::size_t k = 0; k < sp.p.size(); ++k) out.c[std::size_t(phase_of_channel[k])] += sp.p[k];
    out.p_never = sp.p_never;
    out.method = sp.method;
    out.fallback = sp.fallback;
    return out;
}

std::optional<double> first_hit_time(const ModalOrbit& orbit, const CVector& center, double radius, double t_max,
                                     double t_first) {
    auto gap = [&](double t) { return trace_distance_pure(orbit.normalised(t), center) - radius; };
    if (gap(0.0) <= 0.0) return 0.0;
    if (!(t_first > 0) || !(t_max > 0)) throw InvalidArgument("first_hit_time: times must be positive");
    double prev = 0.0;
    for (int i = 0;; ++i) {
        const double t = std::min(t_max, t_first * std::pow(10.0, i / 64.0));
        if (gap(t) <= 0.0) {
            double lo = prev, hi = t;
            while (hi - lo > 1e-10 * hi) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                (gap(mid) <= 0.0 ? hi : lo) = mid;
            }
            return hi;
        }
        if (t >= t_max) return std::nullopt;
        prev = t;
    }
}

SingleResetCommittor committor_single_reset(const EffectiveGenerator& gen, const CVector& psi0, const CVector& center,
                                            double radius, double tau_max) {
    if (gen.jumps.size() != 1) throw InvalidArgument("committor_single_reset: model must have exactly one jump");
    if (!(radius > 0)) throw InvalidArgument("committor_single_reset: radius must be positive");
    if (std::abs(psi0.norm() - 1.0) > 1e-8) throw InvalidArgument("committor_single_reset: state is not normalised");
    const ModalOrbit orbit(gen.eigensystem(), psi0);
    if (!(tau_max > 0)) {
        const double re = orbit.eigensystem().values[orbit.dominant_mode()].real();
        tau_max = re < 0 ? 100.0 / -re : 1e7;
    }
    SingleResetCommittor out;
    const auto hit = first_hit_time(orbit, center, radius, tau_max, first_grid_time(gen));
    out.never_hits = !hit;
    out.tau_hit = hit ? *hit : tau_max;
    out.c_dark = orbit.norm2(out.tau_hit);
    out.c_bright = integrated_jump_density(gen, orbit, 0.0, out.tau_hit);
    return out;
}

// ---- elbow ------------------------------------------------------------------

ElbowReport elbow_analysis(const EffectiveGenerator& gen, const ResetStructure& rs, double d, std::size_t j) {
    if (!(d > 0)) throw InvalidArgument("elbow_analysis: threshold d must be positive");
    if (j >= rs.reset_points.size()) throw InvalidArgument("elbow_analysis: reset index out of range");
    const auto& vals = gen.values;
    const std::size_t n = vals.size();
    if (n < 2) throw InvalidArgument("elbow_analysis: need at least two eigenvalues of G");
    const double scale = std::max(1.0, gen.max_abs_rate());
    for (const auto& v : vals)
        if (std::abs(v.imag()) > 1e-9 * scale) throw ComplexSpectrum("elbow_analysis: G has complex eigenvalues");
    for (std::size_t i = 1; i < n; ++i)
        if (vals[i - 1].real() - vals[i].real() <= 1e-12 * scale)
            throw ComplexSpectrum("elbow_analysis: eigenvalues of G are not distinct");
    const auto& es = *gen.eigensystem();

    Eigen::MatrixXd v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const CVector c = fix_phase(es.right_vector(i));
        if (c.imag().cwiseAbs().maxCoeff() > 1e-8) throw ComplexSpectrum("elbow_analysis: eigenvectors of G are not real");
        v.col(Eigen::Index(i)) = c.real().normalized();
    }
    const CVector psi0c = fix_phase(rs.reset_points[j]);
    if (psi0c.imag().cwiseAbs().maxCoeff() > 1e-12) throw InvalidArgument("elbow_analysis: reset state is not real");
    const Eigen::VectorXd psi0 = psi0c.real();
    Eigen::VectorXd a = v.partialPivLu().solve(psi0);
    if (a(0) < 0) {
        v.col(0) = -v.col(0);
        a(0) = -a(0);
    }

    ElbowReport rep;
    rep.d = d;
    rep.a_a = a(0);
    rep.a_plus = a(1);
    rep.a_minus = n > 2 ? a(2) : 0.0;
    rep.theta_a = vals[0].real();
    rep.theta_plus = vals[1].real();
    rep.theta_minus = n > 2 ? vals[2].real() : 0.0;
    rep.phi_a = v.col(0).cast<Complex>();
    rep.phi_plus = v.col(1).cast<Complex>();
    if (n > 2) rep.phi_minus = v.col(2).cast<Complex>();
    if (!(rep.a_a > 0)) throw InvalidArgument("elbow_analysis: reset state has no component on phi_a");
    rep.tau_e = std::log(d * std::abs(rep.a_plus) / rep.a_a) / (rep.theta_a - rep.theta_plus);
    if (!(rep.tau_e > 0)) throw InvalidArgument("elbow_analysis: the reset state is already past the elbow for this d");

    const ModalOrbit orbit(gen.eigensystem(), psi0.cast<Complex>());
    rep.survival_tau_e = orbit.norm2(rep.tau_e);

    // Elbow: slowest point of the normalised flow on (0, tau_e].
    auto speed = [&](double t) {
        const CVector psi = orbit.normalised(t);
        const CVector g = gen.g * psi;
        return std::sqrt(std::max(0.0, g.squaredNorm() - std::norm(psi.dot(g))));
    };
    const double t0 = std::min(first_grid_time(gen), 0.5 * rep.tau_e);
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        const double t = t0 * std::pow(10.0, i / 256.0);
        if (t >= rep.tau_e) break;
        grid.push_back(t);
    }
    grid.push_back(rep.tau_e);
    std::size_t best = 0;
    double best_speed = kInf;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double s = speed(grid[i]);
        if (s < best_speed) {
            best_speed = s;
            best = i;
        }
    }
    const double lo = grid[best > 0 ? best - 1 : 0];
    const double hi = grid[std::min(best + 1, grid.size() - 1)];
    double t_elbow = grid[best];
    if (hi > lo) {
        const auto m = boost::math::tools::brent_find_minima(speed, lo, hi, 40);
        if (m.second <= best_speed) t_elbow = m.first;
    }
    rep.elbow_state = fix_phase(orbit.normalised(t_elbow));
    return rep;
}

// ---- tables -------------------------------------------------------------------

void write_jumpless_csv(const JumplessTrajectory& jt, std::ostream& out) {
    const auto d = jt.states().front().size();
    std::vector<std::string> header{"tau", "ell", "S"};
    for (std::size_t k = 0; k < jt.rates().size(); ++k) header.push_back("w_" + std::to_string(k));
    for (Eigen::Index i = 0; i < d; ++i) {
        header.push_back("re_" + std::to_string(i));
        header.push_back("im_" + std::to_string(i));
    }
    CsvWriter w(out, header);
    for (std::size_t i = 0; i < jt.tau().size(); ++i) {
        w << jt.tau()[i] << jt.ell()[i] << jt.survival()[i];
        for (const auto& r : jt.rates()) w << r[i];
        const CVector& s = jt.states()[i];
        for (Eigen::Index a = 0; a < d; ++a) w << s(a).real() << s(a).imag();
        w.end_row();
    }
}

void write_committor_csv(const std::vector<CommittorRow>& rows, std::ostream& out) {
    CsvWriter w(out, {"psi_id", "phase", "value", "method"});
    for (const auto& r : rows) {
        w << r.psi_id << r.phase << r.value << r.method;
        w.end_row();
    }
}

}  // namespace qmeta
