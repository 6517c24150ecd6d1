#include "qmeta/metastat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "qmeta/csv.hpp"
#include "qmeta/errors.hpp"

namespace qmeta {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// First core (in list order) containing psi.
int core_phase(const std::vector<CoreSetSpec>& cores, const CVector& psi) {
    for (const auto& c : cores)
        if (c.contains(psi)) return c.phase;
    return -1;
}

}  // namespace

// ---- core sets and labels ---------------------------------------------------

CoreSetSpec CoreSetSpec::reset(const ResetStructure& rs, std::size_t j, int phase, std::string label) {
    if (j >= rs.reset_points.size()) throw InvalidArgument("CoreSetSpec: reset index out of range");
    CoreSetSpec c;
    c.kind = Kind::Reset;
    c.reset_index = j;
    c.center = rs.reset_points[j];
    c.radius = default_tolerances().reset_point_distance;
    c.phase = phase;
    c.label = std::move(label);
    return c;
}

CoreSetSpec CoreSetSpec::ball(const CVector& center, double radius, int phase, std::string label) {
    if (!(radius > 0)) throw InvalidArgument("CoreSetSpec: ball radius must be positive");
    CoreSetSpec c;
    c.kind = Kind::Ball;
    c.center = normalised(center);
    c.radius = radius;
    c.phase = phase;
    c.label = std::move(label);
    return c;
}

bool CoreSetSpec::contains(const CVector& psi) const { return trace_distance_pure(center, psi) <= radius; }

int validate_cores(const std::vector<CoreSetSpec>& cores) {
    if (cores.size() < 2) throw InvalidArgument("at least two core sets are required");
    int n = 0;
    for (const auto& c : cores) {
        if (!(c.radius > 0)) throw InvalidArgument("core set radius must be positive");
        if (c.phase < 0) throw InvalidArgument("core set phase must be non-negative");
        n = std::max(n, c.phase + 1);
    }
    for (int p = 0; p < n; ++p)
        if (std::none_of(cores.begin(), cores.end(), [&](const CoreSetSpec& c) { return c.phase == p; }))
            throw InvalidArgument("core set phases must be numbered 0..n-1 without gaps");
    if (n < 2) throw InvalidArgument("core sets must define at least two phases");
    return n;
}

int PhaseLabelSeries::phase_at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return -1;
    return phases[std::size_t(it - times.begin()) - 1];
}

PhaseLabeler::PhaseLabeler(int n_phases, double t_start) : last_t_(t_start) {
    series_.n_phases = n_phases;
    series_.t_start = t_start;
}

void PhaseLabeler::visit(double t, int phase) {
    if (t < last_t_) throw InvalidArgument("PhaseLabeler: visits must arrive in time order");
    last_t_ = t;
    if (phase < 0 || phase == current_) return;
    if (phase >= series_.n_phases) throw InvalidArgument("PhaseLabeler: phase out of range");
    current_ = phase;
    series_.times.push_back(t);
    series_.phases.push_back(phase);
}

PhaseLabelSeries PhaseLabeler::finish(double t_end) {
    series_.t_end = std::max(t_end, last_t_);
    return series_;
}

PhaseLabelSeries label_phases(const TrajectoryRecord& record, const std::vector<CoreSetSpec>& cores) {
    const int n = validate_cores(cores);
    PhaseLabeler lab(n, 0.0);
    std::size_t g = 0, jmp = 0;
    const auto& gt = record.grid_times;
    while (g < gt.size() || jmp < record.jump_times.size()) {
        // Jumps first when simultaneous: the grid state at that time is the post-jump state anyway.
        if (jmp < record.jump_times.size() && (g >= gt.size() || record.jump_times[jmp] <= gt[g])) {
            lab.visit(record.jump_times[jmp], core_phase(cores, record.post_jump_states[jmp]));
            ++jmp;
        } else {
            lab.visit(gt[g], core_phase(cores, record.grid_states[g]));
            ++g;
        }
    }
    return lab.finish(record.t_final);
}

SemiMarkovLabeler::SemiMarkovLabeler(const SemiMarkovSampler& sampler, const std::vector<CoreSetSpec>& cores,
                                     double horizon)
    : cores_(cores), n_phases_(validate_cores(cores)) {
    const auto& rs = sampler.structure();
    double rate = 1e-300;
    for (const auto& v : sampler.orbit(0).eigensystem().values) rate = std::max(rate, std::abs(v));
    hits_.resize(rs.reset_points.size());
    for (std::size_t j = 0; j < rs.reset_points.size(); ++j) {
        for (const auto& c : cores_) {
            if (c.kind == CoreSetSpec::Kind::Reset) {
                if (c.reset_index >= rs.reset_points.size()) throw InvalidArgument("core refers to a missing reset point");
                hits_[j].push_back(std::nullopt);
            } else {
                hits_[j].push_back(first_hit_time(sampler.orbit(j), c.center, c.radius, horizon, 1e-3 / rate));
            }
        }
    }
}

PhaseLabelSeries SemiMarkovLabeler::label(const SemiMarkovPath& path) const {
    PhaseLabeler lab(n_phases_, 0.0);
    std::vector<std::pair<double, int>> pending;
    auto arrive = [&](double t, std::size_t j, double t_next) {
        // Reset cores are visited on arrival; balls along the subsequent jumpless flow.
        for (const auto& c : cores_)
            if (c.kind == CoreSetSpec::Kind::Reset && c.reset_index == j) {
                lab.visit(t, c.phase);
                break;
            }
        pending.clear();
        for (std::size_t c = 0; c < cores_.size(); ++c) {
            const auto& h = hits_[j][c];
            if (h && t + *h < t_next) pending.emplace_back(t + *h, cores_[c].phase);
        }
        std::sort(pending.begin(), pending.end());
        for (const auto& [tv, ph] : pending) lab.visit(tv, ph);
    };
    std::size_t j = path.start;
    double t = 0.0;
    for (std::size_t i = 0; i <= path.times.size(); ++i) {
        const double t_next = i < path.times.size() ? path.times[i] : path.t_final;
        arrive(t, j, t_next);
        if (i < path.times.size()) {
            t = path.times[i];
            j = path.resets[i];
        }
    }
    return lab.finish(path.t_final);
}

// ---- Monte Carlo committor ----------------------------------------------------

CommittorMcResult committor_mc(const EffectiveGenerator& gen, const CVector& psi0, const std::vector<CoreSetSpec>& cores,
                               std::size_t n, std::uint64_t seed, const CommittorMcOptions& opts) {
    const int n_phases = validate_cores(cores);
    if (n < 1) throw InvalidArgument("committor_mc: n must be at least 1");
    if (!(opts.t_truncate > 0)) throw InvalidArgument("committor_mc: truncation time must be positive");
    if (std::abs(psi0.norm() - 1.0) > 1e-8) throw InvalidArgument("committor_mc: state is not normalised");
    const auto& es = gen.eigensystem();
    const double bracket = 0.01 / gen.max_abs_rate();
    const double t_first = 1e-3 / gen.max_abs_rate();

    // For reset processes every post-jump flow starts from a known state, so
    // its ball entry times are computed once.
    struct Start {
        CVector psi;
        ModalOrbit orbit;
        std::vector<std::optional<double>> hits;
    };
    std::vector<Start> starts;
    {
        LindbladModel m;
        m.dim = std::size_t(gen.g.rows());
        m.hamiltonian = CMatrix::Zero(gen.g.rows(), gen.g.cols());
        m.jumps = gen.jumps;
        try {
            const auto rs = detect_reset_structure(m);
            for (const auto& p : rs.reset_points) {
                Start s{p, ModalOrbit(es, p), {}};
                for (const auto& c : cores)
                    s.hits.push_back(c.kind == CoreSetSpec::Kind::Ball
                                         ? first_hit_time(s.orbit, c.center, c.radius, opts.t_truncate, t_first)
                                         : std::nullopt);
                starts.push_back(std::move(s));
            }
        } catch (const NotResetProcess&) {
        }
    }

    std::vector<int> outcome(n, -1);
    parallel_for(n, opts.threads, [&](std::size_t i) {
        StreamRng rng(seed, i);
        CVector psi = psi0;
        double t = 0.0;
        int phase = core_phase(cores, psi);
        while (phase < 0) {
            const Start* cached = nullptr;
            for (const auto& s : starts)
                if (trace_distance_pure(s.psi, psi) <= 1e-9) cached = &s;
            const ModalOrbit local = cached ? cached->orbit : ModalOrbit(es, psi);
            const double remaining = opts.t_truncate - t;
            if (remaining <= 0) break;
            const auto tau = jump_time_for(local, rng.uniform(), remaining, bracket);
            const double horizon = tau ? *tau : remaining;
            double best = kInf;
            for (std::size_t c = 0; c < cores.size(); ++c) {
                if (cores[c].kind != CoreSetSpec::Kind::Ball) continue;
                const auto h = cached ? cached->hits[c]
                                      : first_hit_time(local, cores[c].center, cores[c].radius, horizon, t_first);
                if (h && *h <= horizon && *h < best) {
                    best = *h;
                    phase = cores[c].phase;
                }
            }
            if (phase >= 0 || !tau) break;
            const CVector pre = local.normalised(*tau);
            const auto p = jump_channel_probabilities(gen.jumps, pre);
            psi = normalised(gen.jumps[pick_channel(p, rng.uniform())] * pre);
            t += *tau;
            phase = core_phase(cores, psi);
        }
        outcome[i] = phase;
    });

    CommittorMcResult r;
    r.n = n;
    r.estimate.assign(std::size_t(n_phases), 0.0);
    std::size_t unresolved = 0;
    for (int o : outcome) {
        if (o < 0)
            ++unresolved;
        else
            r.estimate[std::size_t(o)] += 1.0;
    }
    for (auto& e : r.estimate) e /= double(n);
    for (double p : r.estimate) r.stderr_.push_back(std::sqrt(p * (1.0 - p) / double(n)));
    r.unresolved = double(unresolved) / double(n);
    return r;
}

// ---- invariant measures -------------------------------------------------------

double Histogram::mass() const {
    double m = 0.0;
    for (const auto& p : parts)
        for (std::size_t b = 0; b < p.density.size(); ++b) m += p.density[b] * (p.edges[b + 1] - p.edges[b]);
    return m;
}

namespace {

struct Segment {
    std::size_t j;
    double a, b;  // counted range of time since the last jump
};

std::vector<Segment> segments_after(const SemiMarkovPath& path, double burn_in, std::size_t& events) {
    std::vector<Segment> out;
    std::size_t j = path.start;
    double s = 0.0;
    for (std::size_t i = 0; i <= path.times.size(); ++i) {
        const double e = i < path.times.size() ? path.times[i] : path.t_final;
        if (e > burn_in) out.push_back({j, std::max(0.0, burn_in - s), e - s});
        if (i < path.times.size()) {
            if (path.times[i] >= burn_in) ++events;
            s = path.times[i];
            j = path.resets[i];
        }
    }
    return out;
}

// Adds the overlap of [a, b] with each bin [lo_k, hi_k] (in tau) to occ.
void accumulate(const std::vector<double>& tau_edges, double a, double b, std::vector<double>& occ,
                std::vector<double>& count) {
    for (std::size_t k = 0; k + 1 < tau_edges.size(); ++k) {
        const double ov = std::min(b, tau_edges[k + 1]) - std::max(a, tau_edges[k]);
        if (ov > 0) {
            occ[k] += ov;
            count[k] += 1.0;
        }
    }
}

}  // namespace

InvariantMeasures invariant_measures(const std::vector<SemiMarkovPath>& paths, const std::vector<JumplessTrajectory>& jts,
                                     const InvariantMeasureOptions& opts) {
    if (opts.ell_bins < 1 || opts.log_tau_bins < 1) throw InvalidArgument("invariant_measures: bin counts must be positive");
    std::vector<Segment> segs;
    std::size_t events = 0;
    for (const auto& p : paths) {
        auto s = segments_after(p, opts.burn_in, events);
        segs.insert(segs.end(), s.begin(), s.end());
    }
    if (events < 100) throw InsufficientData("invariant_measures: fewer than 100 jumps after burn-in");
    double total = 0.0;
    for (const auto& s : segs) {
        if (s.j >= jts.size()) throw InvalidArgument("invariant_measures: missing jumpless trajectory for a reset point");
        total += s.b - s.a;
    }

    InvariantMeasures out;
    out.ell.variable = "ell";
    out.log_tau.variable = "log10_tau";
    out.ell.total_time = out.log_tau.total_time = total;
    out.ell.events = out.log_tau.events = events;

    // p(ell), one partition per reset point; the last bin runs to tau = inf.
    for (std::size_t j = 0; j < jts.size(); ++j) {
        const auto& jt = jts[j];
        const double len = std::max(jt.ell_total(), 1e-12);
        const double lo = jt.backward() ? -len : 0.0;
        HistogramPartition part;
        part.partition = j;
        const int nb = opts.ell_bins;
        std::vector<double> tau_edges(std::size_t(nb) + 1);
        for (int k = 0; k <= nb; ++k) {
            part.edges.push_back(lo + len * k / nb);
            tau_edges[std::size_t(k)] = k == nb ? kInf : jt.tau_at_ell(part.edges.back());
        }
        tau_edges.front() = 0.0;
        std::vector<double> occ(std::size_t(nb), 0.0);
        part.count.assign(std::size_t(nb), 0.0);
        for (const auto& s : segs)
            if (s.j == j) accumulate(tau_edges, s.a, s.b, occ, part.count);
        const double w = len / nb;
        for (double o : occ) part.density.push_back(o / (total * w));
        out.ell.parts.push_back(std::move(part));
    }

    // p(log10 tau): shared log-uniform edges over the observed range.
    double t_lo = kInf, t_hi = 0.0;
    for (const auto& s : segs)
        if (s.b > 0) {
            t_lo = std::min(t_lo, s.b);
            t_hi = std::max(t_hi, s.b);
        }
    if (!(t_hi > t_lo)) t_hi = 10.0 * t_lo;
    const int nb = opts.log_tau_bins;
    const double l0 = std::log10(t_lo), l1 = std::log10(t_hi);
    std::vector<double> edges, tau_edges;
    for (int k = 0; k <= nb; ++k) {
        edges.push_back(l0 + (l1 - l0) * k / nb);
        tau_edges.push_back(std::pow(10.0, edges.back()));
    }
    tau_edges.front() = 0.0;  // occupation below the first edge is folded into the first bin
    tau_edges.back() = kInf;
    const double w = (l1 - l0) / nb;
    for (std::size_t j = 0; j < jts.size(); ++j) {
        HistogramPartition part;
        part.partition = j;
        part.edges = edges;
        std::vector<double> occ(std::size_t(nb), 0.0);
        part.count.assign(std::size_t(nb), 0.0);
        for (const auto& s : segs)
            if (s.j == j) accumulate(tau_edges, s.a, s.b, occ, part.count);
        for (double o : occ) part.density.push_back(o / (total * w));
        out.log_tau.parts.push_back(std::move(part));
    }
    return out;
}

SemiMarkovPath path_from_record(const TrajectoryRecord& record, const ResetStructure& rs) {
    if (record.grid_states.empty()) throw InvalidArgument("path_from_record: empty record");
    const auto start = rs.find_reset_point(record.grid_states.front());
    if (!start) throw InvalidArgument("path_from_record: the trajectory does not start at a reset point");
    SemiMarkovPath p;
    p.start = *start;
    p.t_final = record.t_final;
    p.times = record.jump_times;
    p.channels = record.jump_indices;
    for (std::size_t k : record.jump_indices) p.resets.push_back(rs.channels.at(k).reset_point);
    return p;
}

void write_histogram_csv(const Histogram& h, std::ostream& out) {
    CsvWriter w(out, {"bin_lo", "bin_hi", "density", "count", "partition"});
    for (const auto& p : h.parts)
        for (std::size_t b = 0; b < p.density.size(); ++b) {
            w << p.edges[b] << p.edges[b + 1] << p.density[b] << p.count[b] << p.partition;
            w.end_row();
        }
}

std::vector<std::size_t> find_peaks(const std::vector<double>& values, const PeakOptions& opts) {
    const std::size_t n = values.size();
    if (n == 0) return {};
    if (opts.window < 1 || opts.window % 2 == 0) throw InvalidArgument("find_peaks: window must be odd and positive");
    const std::size_t h = std::size_t(opts.window / 2);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= h ? i - h : 0, hi = std::min(n - 1, i + h);
        double acc = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) acc += values[k];
        s[i] = acc / double(hi - lo + 1);
    }
    const double smax = *std::max_element(s.begin(), s.end());
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < n;) {
        // Plateau [i, e].
        std::size_t e = i;
        while (e + 1 < n && s[e + 1] == s[i]) ++e;
        const bool left_ok = i == 0 || s[i - 1] < s[i];
        const bool right_ok = e == n - 1 || s[e + 1] < s[i];
        if (left_ok && right_ok && !(i == 0 && e == n - 1)) {
            // Prominence against the lowest point on each side before higher ground;
            // a side that runs into the array boundary immediately is ignored.
            double base = -kInf;
            if (i > 0) {
                double m = s[i];
                for (std::size_t k = i; k-- > 0 && s[k] <= s[i];) m = std::min(m, s[k]);
                base = std::max(base, m);
            }
            if (e + 1 < n) {
                double m = s[i];
                for (std::size_t k = e + 1; k < n && s[k] <= s[i]; ++k) m = std::min(m, s[k]);
                base = std::max(base, m);
            }
            if (s[i] - base >= opts.prominence * smax) peaks.push_back((i + e) / 2);
        }
        i = e + 1;
    }
    return peaks;
}

// ---- rates ----------------------------------------------------------------------

double TransitionRates::total_rate() const {
    double r = 0.0;
    for (const auto& d : directions) r += d.rate;
    return r;
}

TransitionRates transition_rate_estimate(const PhaseLabelSeries& labels) {
    const int n = labels.n_phases;
    if (n < 2) throw InvalidArgument("transition_rate_estimate: need at least two phases");
    TransitionRates r;
    r.time_in_phase.assign(std::size_t(n), 0.0);
    std::vector<double> dwell_sum(std::size_t(n), 0.0);
    std::vector<std::size_t> dwell_n(std::size_t(n), 0);
    std::map<std::pair<int, int>, std::size_t> counts;
    for (std::size_t i = 0; i < labels.times.size(); ++i) {
        const double end = i + 1 < labels.times.size() ? labels.times[i + 1] : labels.t_end;
        const int ph = labels.phases[i];
        r.time_in_phase[std::size_t(ph)] += end - labels.times[i];
        if (i + 1 < labels.times.size()) {
            ++counts[{ph, labels.phases[i + 1]}];
            ++r.transitions;
            dwell_sum[std::size_t(ph)] += end - labels.times[i];
            ++dwell_n[std::size_t(ph)];
        }
    }
    if (r.transitions < 10)
        throw TooFewTransitions("transition_rate_estimate: only " + std::to_string(r.transitions) +
                                " transitions observed (need 10)");
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            TransitionRates::Direction d;
            d.from = a;
            d.to = b;
            d.count = counts.count({a, b}) ? counts.at({a, b}) : 0;
            d.time_in_source = r.time_in_phase[std::size_t(a)];
            if (d.time_in_source > 0) {
                d.rate = double(d.count) / d.time_in_source;
                d.stderr_ = std::sqrt(double(d.count)) / d.time_in_source;
            }
            r.directions.push_back(d);
        }
    for (int a = 0; a < n; ++a)
        r.mean_dwell.push_back(dwell_n[std::size_t(a)] ? dwell_sum[std::size_t(a)] / double(dwell_n[std::size_t(a)])
                                                       : std::numeric_limits<double>::quiet_NaN());
    return r;
}

nlohmann::json rates_to_json(const TransitionRates& r) {
    nlohmann::json j;
    j["transitions"] = r.transitions;
    j["total_rate"] = r.total_rate();
    j["directions"] = nlohmann::json::array();
    for (const auto& d : r.directions)
        j["directions"].push_back({{"from", d.from},
                                   {"to", d.to},
                                   {"count", d.count},
                                   {"time_in_source", d.time_in_source},
                                   {"rate", d.rate},
                                   {"stderr", d.stderr_}});
    j["time_in_phase"] = r.time_in_phase;
    nlohmann::json dwell = nlohmann::json::array();
    for (double x : r.mean_dwell) dwell.push_back(std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x));
    j["mean_dwell"] = dwell;
    return j;
}

}  // namespace qmeta
