#include "qmeta/cli/run.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "qmeta/csv.hpp"
#include "qmeta/errors.hpp"
#include "qmeta/metastat.hpp"
#include "qmeta/model_io.hpp"
#include "qmeta/reset.hpp"
#include "qmeta/trajectory_io.hpp"

namespace qmeta::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("InternalError", "sha256 failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

json error_json(const std::string& kind, const std::string& message) {
    return {{"error", {{"kind", kind}, {"message", message}}}};
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

class Artifacts {
public:
    explicit Artifacts(const ExperimentConfig& cfg) : cfg_(cfg), dir_(cfg.output_dir) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_))
            throw InvalidArgument("output directory '" + cfg.output_dir + "' cannot be created");
    }

    void add(const std::string& name, const std::string& role, const std::string& bytes) {
        const fs::path path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        out << bytes;
        out.close();
        if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
        json entry{{"path", name}, {"role", role}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}};
        const auto it = cfg_.figures.find(role);
        entry["figure"] = it == cfg_.figures.end() ? json(nullptr) : json(it->second);
        files_.push_back(std::move(entry));
        roles_.insert(role);
    }

    json finish(const json& summary) const {
        for (const auto& [role, tag] : cfg_.figures)
            if (!roles_.count(role))
                throw SchemaError("figure tag '" + tag + "' names role '" + role + "', which operation '" +
                                  cfg_.operation + "' does not produce");
        json m{{"operation", cfg_.operation},
               {"config", cfg_.to_json()},
               {"output_dir", cfg_.output_dir},
               {"files", files_},
               {"summary", summary}};
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << m.dump(2) << '\n';
        if (!out) throw InvalidArgument("cannot write manifest.json");
        return m;
    }

private:
    const ExperimentConfig& cfg_;
    fs::path dir_;
    json files_ = json::array();
    std::set<std::string> roles_;
};

struct Context {
    LindbladModel model;
    SpectralData spectral;
    MetaDecomposition meta;
};

Context prepare(const ExperimentConfig& cfg) {
    Context c{cfg.model(), {}, {}};
    c.spectral = spectral_decompose(c.model);
    MetastableOptions mo;
    mo.m = cfg.m;
    c.meta = metastable_analysis(c.spectral, c.model, mo);
    return c;
}

CVector initial_state(const ExperimentConfig& cfg, std::size_t dim) {
    if (cfg.psi0) {
        if (std::size_t(cfg.psi0->size()) != dim) throw DimensionMismatch("psi0 does not match the model dimension");
        return *cfg.psi0;
    }
    CVector v = CVector::Zero(static_cast<Eigen::Index>(dim));
    v(0) = 1.0;
    return v;
}

std::vector<double> uniform_grid(double t_final, double dt) {
    std::vector<double> t;
    for (std::size_t n = 0;; ++n) {
        const double x = double(n) * dt;
        if (x > t_final * (1.0 + 1e-12)) break;
        t.push_back(x);
    }
    return t;
}

std::vector<std::string> matrix_columns(std::size_t d, const std::string& prefix) {
    std::vector<std::string> cols;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const auto ij = std::to_string(i) + "_" + std::to_string(j);
            cols.push_back(prefix + "re_" + ij);
            cols.push_back(prefix + "im_" + ij);
        }
    return cols;
}

json spectrum_summary(const Context& c) {
    const auto& m = c.meta;
    json s{{"m", m.m},
           {"tau_slow", m.tau_slow},
           {"tau_fast", m.tau_fast},
           {"gap_ratio", m.gap_ratio},
           {"no_gap", m.no_gap},
           {"classical", m.classical},
           {"lambda2", {c.spectral.values.at(1).real(), c.spectral.values.at(1).imag()}}};
    return s;
}

// ---- operations -------------------------------------------------------------

json op_spectrum(const ExperimentConfig& cfg, Artifacts& art) {
    const Context c = prepare(cfg);
    std::ostringstream csv;
    CsvWriter w(csv, {"index", "re", "im"});
    for (std::size_t k = 0; k < c.spectral.values.size(); ++k) {
        w << k << c.spectral.values[k].real() << c.spectral.values[k].imag();
        w.end_row();
    }
    art.add("spectrum.csv", "spectrum", csv.str());

    json meta = spectrum_summary(c);
    if (c.meta.classical) {
        meta["rho_a"] = matrix_to_json(c.meta.rho_a);
        meta["rho_b"] = matrix_to_json(c.meta.rho_b);
        meta["povm_a"] = matrix_to_json(c.meta.povm_a);
        meta["povm_b"] = matrix_to_json(c.meta.povm_b);
        meta["alpha_min"] = c.meta.alpha_min;
        meta["alpha_max"] = c.meta.alpha_max;
        meta["activity_a"] = c.meta.activity_a;
        meta["activity_b"] = c.meta.activity_b;
    }
    art.add("metastable.json", "metastable", meta.dump(2) + "\n");
    return spectrum_summary(c);
}

double default_dt(const ExperimentConfig& cfg, const Context& c, double t_final) {
    if (cfg.dt) return *cfg.dt;
    return std::max(c.meta.tau_fast / 10.0, t_final / 10000.0);
}

json op_evolve(const ExperimentConfig& cfg, Artifacts& art) {
    const Context c = prepare(cfg);
    const double t_final = cfg.t_final.value_or(2.0 * c.meta.tau_slow);
    const auto times = uniform_grid(t_final, default_dt(cfg, c, t_final));
    const CVector psi0 = initial_state(cfg, c.model.dim);
    const auto rhos = evolve_qme(c.spectral, density(psi0), times);
    std::vector<std::string> cols{"t"};
    for (const auto& s : matrix_columns(c.model.dim, "")) cols.push_back(s);
    std::ostringstream csv;
    CsvWriter w(csv, cols);
    for (std::size_t g = 0; g < times.size(); ++g) {
        w << times[g];
        for (Eigen::Index i = 0; i < rhos[g].rows(); ++i)
            for (Eigen::Index j = 0; j < rhos[g].cols(); ++j) w << rhos[g](i, j).real() << rhos[g](i, j).imag();
        w.end_row();
    }
    art.add("evolve.csv", "evolve", csv.str());
    json s = spectrum_summary(c);
    s["points"] = times.size();
    return s;
}

json op_trajectory(const ExperimentConfig& cfg, Artifacts& art) {
    const Context c = prepare(cfg);
    const double t_final = cfg.t_final.value_or(2.0 * c.meta.tau_slow);
    const auto gen = effective_generator(c.model);
    StreamRng rng(*cfg.seed, 0);
    const auto rec = simulate_trajectory(gen, initial_state(cfg, c.model.dim),
                                         {t_final, default_dt(cfg, c, t_final)}, rng);
    art.add("trajectory.csv", "trajectory", trajectory_csv(rec));
    art.add("trajectory.json", "trajectory_jumps", trajectory_sidecar(rec).dump(2) + "\n");
    return {{"jumps", rec.jump_times.size()}, {"t_final", t_final}, {"grid_points", rec.grid_times.size()}};
}

json op_ensemble(const ExperimentConfig& cfg, Artifacts& art) {
    const Context c = prepare(cfg);
    const double t_final = cfg.t_final.value_or(2.0 * c.meta.tau_slow);
    // 50 intervals by default: the records hold every grid state in memory.
    const double dt = cfg.dt.value_or(t_final / 50.0);
    const auto gen = effective_generator(c.model);
    const CVector psi0 = initial_state(cfg, c.model.dim);
    const auto records = run_ensemble(gen, psi0, {t_final, dt}, cfg.n_traj, *cfg.seed, cfg.threads);
    const auto avg = ensemble_average(records);
    const auto ref = evolve_qme(c.spectral, density(psi0), avg.times);

    const std::size_t d = c.model.dim;
    std::vector<std::string> cols{"t"};
    for (const auto* p : {"mean_", "se_", "qme_"})
        for (const auto& s : matrix_columns(d, p)) cols.push_back(s);
    cols.push_back("max_abs_z");
    cols.push_back("within_3sigma");
    std::ostringstream csv;
    CsvWriter w(csv, cols);
    for (std::size_t g = 0; g < avg.times.size(); ++g) {
        w << avg.times[g];
        const auto& m = avg.mean[g];
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) w << m(i, j).real() << m(i, j).imag();
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) w << avg.se_re[g](i, j) << avg.se_im[g](i, j);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) w << ref[g](i, j).real() << ref[g](i, j).imag();
        double zmax = 0.0;
        bool ok = true;
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                const Complex dev = m(i, j) - ref[g](i, j);
                for (const auto& [x, se] : {std::pair{dev.real(), avg.se_re[g](i, j)},
                                            std::pair{dev.imag(), avg.se_im[g](i, j)}}) {
                    if (se > 0.0) zmax = std::max(zmax, std::abs(x) / se);
                    else if (std::abs(x) > 1e-9) ok = false;
                }
            }
        w << zmax << int(ok && zmax <= 3.0);
        w.end_row();
    }
    art.add("ensemble.csv", "ensemble", csv.str());

    json report{{"n_traj", records.size()}, {"grid_points", avg.times.size()}};
    try {
        const auto cmp = compare_ensemble(records, ref);
        report["max_abs_z"] = cmp.max_abs_z;
        report["max_abs_dev_exact"] = cmp.max_abs_dev_exact;
        report["within_3sigma"] = cmp.within_3sigma;
        report["components"] = cmp.components;
        report["hotelling_t2"] = cmp.t2;
        report["p_value"] = cmp.p_value;
    } catch (const InvalidArgument& e) {
        report["joint_test"] = e.what();
    }
    art.add("ensemble_report.json", "ensemble_report", report.dump(2) + "\n");
    return report;
}

struct ResetSetup {
    EffectiveGenerator gen;
    ResetStructure rs;
    std::vector<int> phase_of_channel;  // multi-reset models
    std::vector<int> phase_of_reset;
    int n_phases = 0;
};

ResetSetup reset_setup(const ExperimentConfig& cfg, const LindbladModel& model) {
    ResetSetup s{effective_generator(model), detect_reset_structure(model), {}, {}, 0};
    const std::size_t nr = s.rs.reset_points.size();
    if (nr < 2) {
        s.n_phases = 2;  // bright = reset core, dark = ball around the slow mode
        return s;
    }
    s.phase_of_reset.assign(nr, -1);
    if (cfg.phases.empty()) {
        for (std::size_t j = 0; j < nr; ++j) s.phase_of_reset[j] = int(j);
    } else {
        if (cfg.phases.size() != nr)
            throw InvalidArgument("'phases' needs one entry per reset point (" + std::to_string(nr) + ")");
        s.phase_of_reset.assign(cfg.phases.begin(), cfg.phases.end());
    }
    s.n_phases = *std::max_element(s.phase_of_reset.begin(), s.phase_of_reset.end()) + 1;
    for (int p : s.phase_of_reset)
        if (p < 0) throw InvalidArgument("phases must be nonnegative");
    for (const auto& ch : s.rs.channels) s.phase_of_channel.push_back(s.phase_of_reset[ch.reset_point]);
    return s;
}

std::vector<CoreSetSpec> default_cores(const ExperimentConfig& cfg, const ResetSetup& s) {
    std::vector<CoreSetSpec> cores;
    if (s.rs.reset_points.size() < 2) {
        const JumplessTrajectory jt(s.gen, s.rs, 0);
        cores.push_back(CoreSetSpec::reset(s.rs, 0, 0, "bright"));
        cores.push_back(CoreSetSpec::ball(jt.phi_a(), cfg.radius, 1, "dark"));
    } else {
        for (std::size_t j = 0; j < s.rs.reset_points.size(); ++j)
            cores.push_back(CoreSetSpec::reset(s.rs, j, s.phase_of_reset[j], "reset_" + std::to_string(j)));
    }
    return cores;
}

json op_committor(const ExperimentConfig& cfg, Artifacts& art) {
    const Context c = prepare(cfg);
    const ResetSetup s = reset_setup(cfg, c.model);
    const bool single = s.rs.reset_points.size() < 2;

    // Committor along the jumpless trajectory of every reset point.
    std::vector<std::string> cols{"partition", "tau", "ell", "S"};
    for (int p = 0; p < s.n_phases; ++p) cols.push_back("c_" + std::to_string(p));
    cols.push_back("method");
    std::ostringstream curve;
    CsvWriter w(curve, cols);
    for (std::size_t j = 0; j < s.rs.reset_points.size(); ++j) {
        const JumplessTrajectory jt(s.gen, s.rs, j);
        for (std::size_t i = 0; i < jt.tau().size(); ++i) {
            const CVector& psi = jt.states()[i];
            w << j << jt.tau()[i] << jt.ell()[i] << jt.survival()[i];
            if (single) {
                const auto r = committor_single_reset(s.gen, psi, jt.phi_a(), cfg.radius);
                w << r.c_bright << r.c_dark << std::string(r.never_hits ? "single_reset_never_hits" : "single_reset");
            } else {
                const auto r = committor_reset(s.gen, s.rs, psi, s.phase_of_channel, s.n_phases);
                for (double v : r.c) w << v;
                w << (r.method + (r.fallback ? "_fallback" : ""));
            }
            w.end_row();
        }
    }
    art.add("committor_curve.csv", "committor_curve", curve.str());

    json summary{{"reset_points", s.rs.reset_points.size()}, {"phases", s.n_phases}};
    if (cfg.states.empty()) return summary;

    // Committor table at the requested states.
    std::vector<CommittorRow> rows;
    const auto cores = default_cores(cfg, s);
    for (std::size_t i = 0; i < cfg.states.size(); ++i) {
        const CVector& psi = cfg.states[i];
        if (std::size_t(psi.size()) != c.model.dim) throw DimensionMismatch("state does not match the model dimension");
        const std::string id = "s" + std::to_string(i);
        if (single) {
            const JumplessTrajectory jt(s.gen, s.rs, 0);
            const auto r = committor_single_reset(s.gen, psi, jt.phi_a(), cfg.radius);
            rows.push_back({id, "0", r.c_bright, "single_reset"});
            rows.push_back({id, "1", r.c_dark, "single_reset"});
        } else {
            for (auto m : {SplittingMethod::Sylvester, SplittingMethod::Quadrature}) {
                const auto r = committor_reset(s.gen, s.rs, psi, s.phase_of_channel, s.n_phases, m);
                for (int p = 0; p < s.n_phases; ++p) rows.push_back({id, std::to_string(p), r.c[std::size_t(p)], r.method});
            }
        }
        if (c.meta.classical) {
            const auto [ca, cb] = committor_qme(c.meta, psi);
            rows.push_back({id, "A", ca, "qme"});
            rows.push_back({id, "B", cb, "qme"});
        }
    }
    if (cfg.seed && cfg.n_traj > 0) {
        CommittorMcOptions mo;
        mo.t_truncate = cfg.t_final.value_or(100.0 * c.meta.tau_slow);
        mo.threads = cfg.threads;
        for (std::size_t i = 0; i < cfg.states.size(); ++i) {
            const auto r = committor_mc(s.gen, cfg.states[i], cores, cfg.n_traj, *cfg.seed + i, mo);
            for (std::size_t p = 0; p < r.estimate.size(); ++p)
                rows.push_back({"s" + std::to_string(i), std::to_string(p), r.estimate[p], "mc"});
            rows.push_back({"s" + std::to_string(i), "unresolved", r.unresolved, "mc"});
        }
    }
    std::ostringstream table;
    write_committor_csv(rows, table);
    art.add("committor_table.csv", "committor_table", table.str());
    summary["states"] = cfg.states.size();
    return summary;
}

json op_invariant_measure(const ExperimentConfig& cfg, Artifacts& art) {
    const Context c = prepare(cfg);
    const ResetSetup s = reset_setup(cfg, c.model);
    double t_final = 200.0 * c.meta.tau_slow;
    if (cfg.t_final) {
        t_final = *cfg.t_final;
    } else {
        // Long enough for a few thousand jumps when jumps are slower than tau_s.
        for (const auto& p : s.rs.reset_points) {
            const double w = mean_waiting_time(s.gen, p);
            if (std::isfinite(w)) t_final = std::max(t_final, 2000.0 * w);
        }
    }
    std::size_t start = 0;
    if (cfg.psi0) {
        const auto j = s.rs.find_reset_point(*cfg.psi0, 1e-6);
        if (!j) throw InvalidArgument("invariant-measure: psi0 must be a reset point");
        start = *j;
    }

    const SemiMarkovSampler sampler(s.gen, s.rs);
    StreamRng rng(*cfg.seed, 0);
    const SemiMarkovPath path = sampler.sample(start, t_final, rng);

    std::vector<JumplessTrajectory> jts;
    for (std::size_t j = 0; j < s.rs.reset_points.size(); ++j) jts.emplace_back(s.gen, s.rs, j);
    InvariantMeasureOptions io;
    io.burn_in = 0.05 * t_final;
    const auto im = invariant_measures({path}, jts, io);
    std::ostringstream pe, pt;
    write_histogram_csv(im.ell, pe);
    write_histogram_csv(im.log_tau, pt);
    art.add("p_ell.csv", "p_ell", pe.str());
    art.add("p_log_tau.csv", "p_log_tau", pt.str());
    for (const auto& jt : jts) {
        std::ostringstream out;
        write_jumpless_csv(jt, out);
        art.add("jumpless_" + std::to_string(jt.reset_index()) + ".csv", "jumpless", out.str());
    }

    json summary{{"jumps", path.times.size()}, {"t_final", t_final}, {"burn_in", io.burn_in},
                 {"lambda2", c.spectral.values.at(1).real()}};
    const SemiMarkovLabeler labeler(sampler, default_cores(cfg, s));
    const auto labels = labeler.label(path);
    try {
        const auto rates = transition_rate_estimate(labels);
        summary["rates"] = rates_to_json(rates);
        summary["total_rate_over_abs_lambda2"] = rates.total_rate() / std::abs(c.spectral.values.at(1).real());
    } catch (const TooFewTransitions& e) {
        summary["rates"] = error_json(e.kind(), e.what())["error"];
    }
    art.add("rates.json", "rates", summary.dump(2) + "\n");
    return summary;
}

json op_splitting(const ExperimentConfig& cfg, Artifacts& art) {
    const LindbladModel model = cfg.model();
    const auto gen = effective_generator(model);
    std::vector<std::pair<std::string, CVector>> inputs;
    std::optional<ResetStructure> rs;
    try {
        rs = detect_reset_structure(model);
        for (std::size_t j = 0; j < rs->reset_points.size(); ++j)
            inputs.emplace_back("reset_" + std::to_string(j), rs->reset_points[j]);
    } catch (const NotResetProcess&) {
    }
    if (cfg.psi0) inputs.emplace_back("psi0", *cfg.psi0);
    for (std::size_t i = 0; i < cfg.states.size(); ++i) inputs.emplace_back("s" + std::to_string(i), cfg.states[i]);
    if (inputs.empty()) throw InvalidArgument("splitting: no input states (not a reset process and no psi0/states)");

    std::vector<CommittorRow> rows;
    json summary = json::object();
    for (const auto& [id, psi] : inputs) {
        if (std::size_t(psi.size()) != model.dim) throw DimensionMismatch("state does not match the model dimension");
        for (auto m : {SplittingMethod::Sylvester, SplittingMethod::Quadrature}) {
            SplittingResult r;
            try {
                r = splitting_probabilities(gen, psi, m);
            } catch (const SingularPencil&) {
                continue;  // the quadrature row still reports this state
            }
            for (std::size_t k = 0; k < r.p.size(); ++k) rows.push_back({id, "jump_" + std::to_string(k), r.p[k], r.method});
            rows.push_back({id, "never", r.p_never, r.method + (r.fallback ? "_fallback" : "")});
        }
    }
    std::ostringstream out;
    write_committor_csv(rows, out);
    art.add("splitting.csv", "splitting", out.str());

    if (rs) {
        // Reset-to-reset first-jump probabilities.
        std::ostringstream tr;
        CsvWriter w(tr, {"from", "to", "probability"});
        const std::size_t nr = rs->reset_points.size();
        json matrix = json::array();
        for (std::size_t j = 0; j < nr; ++j) {
            const auto r = splitting_probabilities(gen, rs->reset_points[j]);
            std::vector<double> to(nr, 0.0);
            for (std::size_t k = 0; k < r.p.size(); ++k) to[rs->channels[k].reset_point] += r.p[k];
            for (std::size_t i = 0; i < nr; ++i) {
                w << j << i << to[i];
                w.end_row();
            }
            matrix.push_back(to);
        }
        art.add("reset_transitions.csv", "reset_transitions", tr.str());
        summary["reset_transitions"] = matrix;
    }
    summary["inputs"] = inputs.size();
    return summary;
}

json elbow_json(const ElbowReport& e) {
    return {{"tau_e", e.tau_e},     {"S_tau_e", e.survival_tau_e}, {"d", e.d},
            {"A_a", e.a_a},         {"A_plus", e.a_plus},          {"A_minus", e.a_minus},
            {"theta_a", e.theta_a}, {"theta_plus", e.theta_plus},  {"theta_minus", e.theta_minus},
            {"elbow_state", state_to_json(e.elbow_state)}, {"phi_a", state_to_json(e.phi_a)},
            {"phi_plus", state_to_json(e.phi_plus)},       {"phi_minus", state_to_json(e.phi_minus)}};
}

json op_elbow(const ExperimentConfig& cfg, Artifacts& art) {
    const LindbladModel model = cfg.model();
    const auto gen = effective_generator(model);
    const auto rs = detect_reset_structure(model);
    const json j = elbow_json(elbow_analysis(gen, rs, cfg.d, 0));
    art.add("elbow.json", "elbow", j.dump(2) + "\n");
    return j;
}

json op_scaling(const ExperimentConfig& cfg, Artifacts& art) {
    std::ostringstream out;
    CsvWriter w(out, {"value", "lambda2_re", "lambda2_im", "tau_s", "tau_e", "S_tau_e", "cross_jump",
                      "lambda2_over_eps2", "S_over_eps2", "cross_over_eps2"});
    json rows = json::array();
    for (double v : cfg.values) {
        const LindbladModel model = cfg.model_with(cfg.scan_param, v);
        const auto sp = spectral_decompose(model);
        const Complex l2 = sp.values.at(1);
        double tau_e = kNaN, s_e = kNaN, cross = kNaN;
        const auto gen = effective_generator(model);
        try {
            const auto rs = detect_reset_structure(model);
            try {
                const auto e = elbow_analysis(gen, rs, cfg.d, 0);
                tau_e = e.tau_e;
                s_e = e.survival_tau_e;
            } catch (const ComplexSpectrum&) {
            }
            if (rs.reset_points.size() >= 2) {
                cross = 0.0;
                for (std::size_t j = 0; j < rs.reset_points.size(); ++j) {
                    const auto r = splitting_probabilities(gen, rs.reset_points[j]);
                    double away = 0.0;
                    for (std::size_t k = 0; k < r.p.size(); ++k)
                        if (rs.channels[k].reset_point != j) away += r.p[k];
                    cross = std::max(cross, away);
                }
            }
        } catch (const NotResetProcess&) {
        }
        const double e2 = v * v;
        w << v << l2.real() << l2.imag() << -1.0 / l2.real() << tau_e << s_e << cross << l2.real() / e2 << s_e / e2
          << cross / e2;
        w.end_row();
        rows.push_back({{"value", v}, {"lambda2", l2.real()}, {"S_tau_e", number_or_null(s_e)},
                        {"cross_jump", number_or_null(cross)}});
    }
    art.add("scaling.csv", "scaling", out.str());
    return {{"param", cfg.scan_param}, {"rows", rows}};
}

}  // namespace

json run(const ExperimentConfig& config) {
    config.validate();
    Artifacts art(config);
    json summary;
    const auto& op = config.operation;
    if (op == "spectrum") summary = op_spectrum(config, art);
    else if (op == "evolve") summary = op_evolve(config, art);
    else if (op == "trajectory") summary = op_trajectory(config, art);
    else if (op == "ensemble") summary = op_ensemble(config, art);
    else if (op == "committor") summary = op_committor(config, art);
    else if (op == "invariant-measure") summary = op_invariant_measure(config, art);
    else if (op == "splitting") summary = op_splitting(config, art);
    else if (op == "elbow") summary = op_elbow(config, art);
    else summary = op_scaling(config, art);
    return art.finish(summary);
}

}  // namespace qmeta::cli
