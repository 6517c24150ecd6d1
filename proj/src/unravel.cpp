#include "qmeta/unravel.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <Eigen/Eigenvalues>

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "qmeta/errors.hpp"

namespace qmeta {

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream),
                      std::uint32_t(stream >> 32)};
    engine_.seed(seq);
}

double StreamRng::uniform() { return (double(engine_() >> 11) + 0.5) * 0x1.0p-53; }

const std::shared_ptr<const EigenSystem>& EffectiveGenerator::eigensystem() const {
    if (!eigen) throw DefectiveMatrix("effective generator G is defective; no spectral propagator", values);
    return eigen;
}

double EffectiveGenerator::max_abs_rate() const {
    double m = 1e-300;
    for (const auto& v : values) m = std::max(m, std::abs(v));
    return m;
}

EffectiveGenerator effective_generator(const LindbladModel& model, const Tolerances& tol) {
    model.validate(tol);
    EffectiveGenerator gen;
    const auto d = Eigen::Index(model.dim);
    CMatrix sum = CMatrix::Zero(d, d);
    for (const auto& j : model.jumps) sum += j.adjoint() * j;
    gen.g = -kI * model.hamiltonian - 0.5 * sum;
    gen.jumps = model.jumps;
    try {
        auto es = std::make_shared<EigenSystem>(eig_general(gen.g, tol));
        gen.values = es->values;
        gen.eigen = std::move(es);
    } catch (const DefectiveMatrix& e) {
        gen.values = e.eigenvalues();
    }
    for (const auto& v : gen.values) {
        if (v.real() > 1e-10) {
            std::ostringstream os;
            os << "effective generator has an eigenvalue with positive real part " << v.real();
            throw InvalidArgument(os.str());
        }
    }
    return gen;
}

double survival(const EffectiveGenerator& gen, const CVector& psi, double t) {
    return ModalOrbit(gen.eigensystem(), psi).norm2(t);
}

std::optional<double> jump_time_for(const ModalOrbit& orbit, double u, double t_max, double initial_bracket,
                                    const Tolerances& tol) {
    if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("jump_time_for: u must lie in (0, 1)");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InvalidArgument("jump_time_for: t_max must be positive and finite");
    const double log_u = std::log(u);
    auto f = [&](double t) { return orbit.log_norm2(t) - log_u; };  // decreasing, root where S = u

    if (f(t_max) > 0.0) return std::nullopt;
    double lo = 0.0;
    double hi = std::min(std::max(initial_bracket, 1e-300), t_max);
    double f_prev = f(lo);
    if (f_prev < 0.0) throw RootNotBracketed("jump_time_for: S(0) < u; the initial state is not normalised");
    for (;;) {
        const double fh = f(hi);
        if (fh > f_prev + 1e-12 * std::max(1.0, std::abs(f_prev)))
            throw RootNotBracketed("jump_time_for: survival function is not monotone");
        if (fh <= 0.0) break;
        if (hi >= t_max) throw RootNotBracketed("jump_time_for: lost the bracket at t_max");
        lo = hi;
        f_prev = fh;
        hi = std::min(2.0 * hi, t_max);
    }
    while (hi - lo > tol.root_relative * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::optional<double> sample_jump_time(const EffectiveGenerator& gen, const CVector& psi0, StreamRng& rng,
                                       double t_max, const Tolerances& tol) {
    if (std::abs(psi0.norm() - 1.0) > 1e-8) throw InvalidArgument("sample_jump_time: state is not normalised");
    const ModalOrbit orbit(gen.eigensystem(), psi0);
    return jump_time_for(orbit, rng.uniform(), t_max, 0.01 / gen.max_abs_rate(), tol);
}

std::vector<double> jump_channel_probabilities(const std::vector<CMatrix>& jumps, const CVector& psi,
                                               const Tolerances& tol) {
    std::vector<double> p(jumps.size());
    double total = 0.0;
    for (std::size_t k = 0; k < jumps.size(); ++k) total += p[k] = (jumps[k] * psi).squaredNorm();
    if (!(total >= tol.zero_rate * std::max(1.0, psi.squaredNorm())))
        throw AllRatesZero("jump_channel_probabilities: total jump rate vanishes (dark state)");
    for (auto& x : p) x /= total;
    return p;
}

std::vector<double> jump_channel_probabilities(const LindbladModel& model, const CVector& psi, const Tolerances& tol) {
    if (std::abs(psi.norm() - 1.0) > 1e-8) throw InvalidArgument("jump_channel_probabilities: state is not normalised");
    return jump_channel_probabilities(model.jumps, psi, tol);
}

std::size_t pick_channel(const std::vector<double>& p, double u) {
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] <= 0.0) continue;
        last = k;
        acc += p[k];
        if (u < acc) return k;
    }
    return last;  // rounding in the cumulative sum
}

TrajectoryRecord simulate_trajectory(const EffectiveGenerator& gen, const CVector& psi0, const TrajectoryOptions& opts,
                                     StreamRng& rng, const Tolerances& tol) {
    if (!(opts.t_final > 0.0) || !(opts.dt > 0.0)) throw InvalidArgument("simulate_trajectory: T and dt must be positive");
    if (std::abs(psi0.norm() - 1.0) > 1e-8) throw InvalidArgument("simulate_trajectory: initial state is not normalised");
    const auto& es = gen.eigensystem();
    const double bracket = 0.01 / gen.max_abs_rate();

    TrajectoryRecord rec;
    rec.seed = rng.seed();
    rec.stream = rng.stream();
    rec.t_final = opts.t_final;
    rec.dt = opts.dt;
    const auto n_grid = std::size_t(std::floor(opts.t_final / opts.dt + 1e-9)) + 1;
    rec.grid_times.resize(n_grid);
    for (std::size_t i = 0; i < n_grid; ++i) rec.grid_times[i] = double(i) * opts.dt;
    rec.grid_states.resize(n_grid);

    double t = 0.0;
    CVector psi = psi0;
    std::size_t gi = 0;
    for (;;) {
        const ModalOrbit orbit(es, psi);
        const auto tau = jump_time_for(orbit, rng.uniform(), opts.t_final - t, bracket, tol);
        const double t_end = tau ? t + *tau : opts.t_final;
        while (gi < n_grid && (rec.grid_times[gi] < t_end || !tau)) {
            rec.grid_states[gi] = orbit.normalised(rec.grid_times[gi] - t);
            ++gi;
        }
        if (!tau) {
            rec.final_state = orbit.normalised(opts.t_final - t);
            break;
        }
        const CVector pre = orbit.normalised(*tau);
        const auto p = jump_channel_probabilities(gen.jumps, pre, tol);
        const std::size_t k = pick_channel(p, rng.uniform());
        psi = normalised(gen.jumps[k] * pre);
        rec.jump_times.push_back(t_end);
        rec.jump_indices.push_back(k);
        rec.post_jump_states.push_back(psi);
        t = t_end;
    }
    return rec;
}

TrajectoryRecord simulate_trajectory(const LindbladModel& model, const CVector& psi0, const TrajectoryOptions& opts,
                                     StreamRng& rng) {
    return simulate_trajectory(effective_generator(model), psi0, opts, rng);
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = unsigned(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
}

std::vector<TrajectoryRecord> run_ensemble(const EffectiveGenerator& gen, const CVector& psi0,
                                           const TrajectoryOptions& opts, std::size_t n, std::uint64_t seed,
                                           unsigned threads) {
    std::vector<TrajectoryRecord> out(n);
    parallel_for(n, threads, [&](std::size_t i) {
        StreamRng rng(seed, i);
        out[i] = simulate_trajectory(gen, psi0, opts, rng);
    });
    return out;
}

EnsembleAverage ensemble_average(const std::vector<TrajectoryRecord>& records) {
    if (records.empty()) throw EmptyEnsemble("ensemble_average: no records");
    EnsembleAverage avg;
    avg.times = records.front().grid_times;
    avg.n = records.size();
    for (const auto& r : records)
        if (r.grid_times != avg.times) throw InvalidArgument("ensemble_average: records do not share a grid");

    const std::size_t ng = avg.times.size();
    const auto d = records.front().grid_states.front().size();
    const double n = double(records.size());
    for (std::size_t g = 0; g < ng; ++g) {
        // Sums of deviations from the first record: identical records give exactly zero spread.
        const CMatrix ref = density(records.front().grid_states[g]);
        CMatrix sum = CMatrix::Zero(d, d);
        Eigen::MatrixXd sq_re = Eigen::MatrixXd::Zero(d, d), sq_im = Eigen::MatrixXd::Zero(d, d);
        for (const auto& r : records) {
            const CMatrix dev = density(r.grid_states[g]) - ref;
            sum += dev;
            sq_re += dev.real().cwiseAbs2();
            sq_im += dev.imag().cwiseAbs2();
        }
        avg.mean.push_back(ref + sum / n);
        if (records.size() < 2) {
            avg.se_re.push_back(Eigen::MatrixXd::Zero(d, d));
            avg.se_im.push_back(Eigen::MatrixXd::Zero(d, d));
            continue;
        }
        const Eigen::MatrixXd var_re = ((sq_re - sum.real().cwiseAbs2() / n) / (n - 1.0)).cwiseMax(0.0);
        const Eigen::MatrixXd var_im = ((sq_im - sum.imag().cwiseAbs2() / n) / (n - 1.0)).cwiseMax(0.0);
        avg.se_re.push_back((var_re / n).cwiseSqrt());
        avg.se_im.push_back((var_im / n).cwiseSqrt());
    }
    return avg;
}

}  // namespace qmeta

namespace qmeta {

EnsembleComparison compare_ensemble(const std::vector<TrajectoryRecord>& records,
                                    const std::vector<CMatrix>& reference) {
    const EnsembleAverage avg = ensemble_average(records);
    if (reference.size() != avg.times.size())
        throw InvalidArgument("compare_ensemble: reference has " + std::to_string(reference.size()) +
                              " points, grid has " + std::to_string(avg.times.size()));
    const auto d = avg.mean.front().rows();
    EnsembleComparison out;
    out.within_3sigma = true;

    // Per-entry z scores; collect the grid points whose components vary.
    std::vector<std::size_t> live;
    for (std::size_t g = 0; g < avg.times.size(); ++g) {
        if (reference[g].rows() != d || reference[g].cols() != d)
            throw DimensionMismatch("compare_ensemble: reference matrix has the wrong size");
        bool spread = false;
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) {
                const Complex dev = avg.mean[g](i, j) - reference[g](i, j);
                const double parts[2][2] = {{dev.real(), avg.se_re[g](i, j)}, {dev.imag(), avg.se_im[g](i, j)}};
                for (const auto& [x, se] : parts) {
                    if (se > 0.0) {
                        spread = true;
                        out.max_abs_z = std::max(out.max_abs_z, std::abs(x) / se);
                    } else {
                        out.max_abs_dev_exact = std::max(out.max_abs_dev_exact, std::abs(x));
                    }
                }
            }
        if (spread) live.push_back(g);
    }
    out.within_3sigma = out.max_abs_z <= 3.0 && out.max_abs_dev_exact <= 1e-9;

    // Component vectors per trajectory.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> idx;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i; j < d; ++j) idx.emplace_back(i, j);
    const std::size_t per = std::size_t(d * d - 1);
    const std::size_t dim = per * live.size();
    const std::size_t n = records.size();
    if (dim == 0) return out;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    Eigen::VectorXd ref(static_cast<Eigen::Index>(dim));
    auto fill = [&](const CMatrix& rho, auto&& put) {
        std::size_t c = 0;
        for (const auto& [i, j] : idx) {
            if (i == j) {
                if (i + 1 < d) put(c++, rho(i, j).real());
            } else {
                put(c++, rho(i, j).real());
                put(c++, rho(i, j).imag());
            }
        }
    };
    for (std::size_t l = 0; l < live.size(); ++l) {
        const std::size_t g = live[l];
        fill(reference[g], [&](std::size_t c, double v) { ref(Eigen::Index(l * per + c)) = v; });
        for (std::size_t r = 0; r < n; ++r) {
            const CMatrix rho = density(records[r].grid_states[g]);
            fill(rho, [&](std::size_t c, double v) { x(Eigen::Index(r), Eigen::Index(l * per + c)) = v; });
        }
    }
    const Eigen::VectorXd mean = x.colwise().mean().transpose();
    const Eigen::MatrixXd centred = x.rowwise() - mean.transpose();
    const Eigen::MatrixXd cov = centred.transpose() * centred / double(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double cut = 1e-10 * ev.cwiseAbs().maxCoeff();
    const Eigen::VectorXd proj = es.eigenvectors().transpose() * (mean - ref);
    std::size_t p = 0;
    double t2 = 0.0;
    for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (ev(k) > cut) {
            ++p;
            t2 += proj(k) * proj(k) / ev(k);
        }
    t2 *= double(n);
    if (n <= p + 1) throw InvalidArgument("compare_ensemble: need more trajectories than components");
    out.components = p;
    out.t2 = t2;
    const double f = double(n - p) / (double(p) * double(n - 1)) * t2;
    boost::math::fisher_f dist(double(p), double(n - p));
    out.p_value = boost::math::cdf(boost::math::complement(dist, f));
    return out;
}

}  // namespace qmeta
