#pragma once

// Trajectory-level statistics: core sets and phase labels, Monte Carlo
// committors, invariant-measure histograms, transition rates.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qmeta/reset.hpp"

namespace qmeta {

struct CoreSetSpec {
    enum class Kind { Reset, Ball };
    Kind kind = Kind::Ball;
    std::size_t reset_index = 0;  // Kind::Reset
    CVector center;               // the reset state for Kind::Reset
    double radius = 0.05;         // trace distance
    int phase = 0;
    std::string label;

    static CoreSetSpec reset(const ResetStructure& rs, std::size_t j, int phase, std::string label = {});
    static CoreSetSpec ball(const CVector& center, double radius, int phase, std::string label = {});

    bool contains(const CVector& psi) const;
};

/// Throws InvalidArgument unless there are >= 2 cores, radii are positive
/// and phases are numbered 0..n-1. Returns the number of phases.
int validate_cores(const std::vector<CoreSetSpec>& cores);

/// Piecewise-constant phase label: `phases[i]` is active from `times[i]` until
/// the next change; before times[0] nothing is labelled (phase -1).
struct PhaseLabelSeries {
    int n_phases = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<double> times;
    std::vector<int> phases;

    int phase_at(double t) const;
    /// chi^X_t for phase X.
    bool chi(int phase, double t) const { return phase_at(t) == phase; }
};

/// Streaming labeller: a phase becomes active when its core is visited and
/// stays active until another core is visited. Uses only past events.
class PhaseLabeler {
public:
    PhaseLabeler(int n_phases, double t_start);
    void visit(double t, int phase);
    int current() const { return current_; }
    PhaseLabelSeries finish(double t_end);

private:
    PhaseLabelSeries series_;
    int current_ = -1;
    double last_t_;
};

/// Labels from the grid states and post-jump states of a record.
PhaseLabelSeries label_phases(const TrajectoryRecord& record, const std::vector<CoreSetSpec>& cores);

/// Event-based labelling of a semi-Markov jump sequence: reset cores are
/// visited at the jumps into them, balls at the exact time the jumpless
/// trajectory enters them.
class SemiMarkovLabeler {
public:
    SemiMarkovLabeler(const SemiMarkovSampler& sampler, const std::vector<CoreSetSpec>& cores,
                      double horizon = 1e12);
    PhaseLabelSeries label(const SemiMarkovPath& path) const;

    /// Entry time of ball core c along the jumpless trajectory from reset j.
    std::optional<double> hit_time(std::size_t j, std::size_t c) const { return hits_.at(j).at(c); }

private:
    std::vector<CoreSetSpec> cores_;
    int n_phases_;
    std::vector<std::vector<std::optional<double>>> hits_;  // [reset][core]
};

struct CommittorMcOptions {
    double t_truncate = 0.0;  // required: trajectories unresolved after this time
    unsigned threads = 0;
};

struct CommittorMcResult {
    std::vector<double> estimate;  // per phase, fraction of all n
    std::vector<double> stderr_;   // binomial
    double unresolved = 0.0;       // fraction
    std::size_t n = 0;
};

/// Fraction of n trajectories from psi0 that reach each phase's core first.
/// Trajectory i uses stream i of `seed`.
CommittorMcResult committor_mc(const EffectiveGenerator& gen, const CVector& psi0,
                               const std::vector<CoreSetSpec>& cores, std::size_t n, std::uint64_t seed,
                               const CommittorMcOptions& opts);

// ---- invariant measures -------------------------------------------------

struct HistogramPartition {
    std::size_t partition = 0;  // reset point of the last jump
    std::vector<double> edges;
    std::vector<double> density;
    std::vector<double> count;  // number of inter-jump intervals touching the bin
};

struct Histogram {
    std::string variable;  // "ell" or "log10_tau"
    std::vector<HistogramPartition> parts;
    double total_time = 0.0;
    std::size_t events = 0;

    /// Sum of density * width over all partitions.
    double mass() const;
};

struct InvariantMeasureOptions {
    double burn_in = 0.0;
    int ell_bins = 40;
    int log_tau_bins = 40;
};

struct InvariantMeasures {
    Histogram ell;
    Histogram log_tau;
};

/// Time-weighted occupation of (last reset point, time since the jump) after
/// the burn-in. jts[j] must be the jumpless trajectory of reset point j.
/// Throws InsufficientData below 100 jumps.
InvariantMeasures invariant_measures(const std::vector<SemiMarkovPath>& paths,
                                     const std::vector<JumplessTrajectory>& jts,
                                     const InvariantMeasureOptions& opts = {});

/// The jump sequence of a record of a reset process; the initial state must be a reset point.
SemiMarkovPath path_from_record(const TrajectoryRecord& record, const ResetStructure& rs);

void write_histogram_csv(const Histogram& h, std::ostream& out);

struct PeakOptions {
    int window = 3;             // centred moving average; edges use the available neighbours
    double prominence = 0.05;   // fraction of the smoothed maximum
};

/// Indices of local maxima of the smoothed series whose prominence exceeds the threshold.
std::vector<std::size_t> find_peaks(const std::vector<double>& values, const PeakOptions& opts = {});

// ---- rates --------------------------------------------------------------

struct TransitionRates {
    struct Direction {
        int from = 0, to = 0;
        std::size_t count = 0;
        double time_in_source = 0.0;
        double rate = 0.0;
        double stderr_ = 0.0;  // sqrt(count) / time_in_source
    };
    std::vector<Direction> directions;
    std::vector<double> time_in_phase;
    std::vector<double> mean_dwell;  // over completed dwell periods, NaN if none
    std::size_t transitions = 0;

    double total_rate() const;  // sum over directions
};

/// Throws TooFewTransitions below 10 transitions.
TransitionRates transition_rate_estimate(const PhaseLabelSeries& labels);

nlohmann::json rates_to_json(const TransitionRates& r);

}  // namespace qmeta
