#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "metrics.hpp"
#include "simcore.hpp"

namespace osa {

inline constexpr std::array<Metric, 3> kMetrics{Metric::Sensing, Metric::Throughput,
                                                Metric::Collisions};
inline constexpr std::array<Norm, 2> kNorms{Norm::Attempted, Norm::WallClock};

// Capacity matrix is a property of the experiment: one draw per seed, shared
// by every policy and replication so comparisons are paired.
inline std::vector<double> draw_capacity(const ExperimentConfig& cfg) {
    Rng rng = make_rng(cfg.seed, "capacity");
    std::vector<double> cap(static_cast<std::size_t>(cfg.channels) * cfg.devices);
    for (double& x : cap) x = cfg.capacity.draw(rng);
    return cap;
}

// Channel traffic parameters are redrawn per replication but not per policy.
inline std::vector<PuTrafficModel> realize_pu_models(const ExperimentConfig& cfg, int rep) {
    std::vector<PuTrafficModel> models;
    models.reserve(cfg.channels);
    for (int c = 0; c < cfg.channels; ++c) {
        const PuSpec& spec = cfg.pu[cfg.pu.size() == 1 ? 0 : c];
        Rng rng = make_rng(cfg.seed, "pu-params", rep, c);
        models.push_back(realize(spec, rng));
    }
    return models;
}

inline std::vector<SuTrafficParams> su_per_device(const ExperimentConfig& cfg) {
    if (cfg.su.size() == 1) return std::vector<SuTrafficParams>(cfg.devices, cfg.su[0]);
    return cfg.su;
}

inline EngineConfig engine_config(const ExperimentConfig& cfg, PolicyKind policy,
                                  std::vector<double> capacity) {
    EngineConfig ec;
    ec.n_channels = cfg.channels;
    ec.n_devices = cfg.devices;
    ec.policy = policy;
    ec.radio = cfg.radio;
    ec.capacity = std::move(capacity);
    ec.kappa = cfg.kappa;
    ec.assign = cfg.assign;
    ec.n_classes = cfg.n_classes;
    ec.prior = cfg.prior;
    ec.hold_window = cfg.hold_window;
    ec.fixed_eps = cfg.fixed_eps;
    ec.decay_beta = cfg.decay_beta;
    ec.spsa = cfg.spsa;
    ec.collision_mode = cfg.collision_mode;
    return ec;
}

inline Engine make_engine(const ExperimentConfig& cfg, PolicyKind policy, int rep,
                          std::vector<FrameEvent>* sink = nullptr) {
    return Engine(engine_config(cfg, policy, draw_capacity(cfg)), realize_pu_models(cfg, rep),
                  su_per_device(cfg), cfg.seed, static_cast<std::uint64_t>(rep), cfg.horizon,
                  sink);
}

inline MetricsTrace run_single(const ExperimentConfig& cfg, PolicyKind policy, int rep,
                               std::vector<FrameEvent>* sink = nullptr,
                               EngineTotals* totals = nullptr) {
    Engine eng = make_engine(cfg, policy, rep, sink);
    eng.run();
    if (totals) *totals = eng.totals();
    return eng.trace();
}

struct PolicyResult {
    PolicyKind policy = PolicyKind::Traditional;
    // [metric][norm], indexed by kMetrics/kNorms order
    std::array<std::array<SeriesStats, 2>, 3> stats;
    std::vector<SeriesStats> epsilon;  // per channel; empty when the policy has none

    const SeriesStats& at(Metric m, Norm n) const {
        return stats[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)];
    }
};

struct ExperimentResult {
    std::vector<PolicyResult> policies;

    const PolicyResult& at(PolicyKind p) const {
        for (const auto& r : policies)
            if (r.policy == p) return r;
        throw std::logic_error("no result for policy " + policy_name(p));
    }
};

// Final defined point of an aggregated series.
struct FinalStat {
    double mean = kMissing;
    double stddev = kMissing;
};

inline FinalStat final_stat(const SeriesStats& s) {
    for (std::size_t i = s.mean.size(); i-- > 0;)
        if (!is_missing(s.mean[i])) return {s.mean[i], s.stddev[i]};
    return {};
}

namespace csvio {

inline std::string fmt(double x) {
    if (is_missing(x)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

inline void write_trace_csv(const std::filesystem::path& file, const PolicyResult& r) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << "frame,policy,metric,mean,std\n";
    const std::string pname = policy_name(r.policy);
    for (Metric m : kMetrics) {
        for (Norm n : kNorms) {
            const SeriesStats& s = r.at(m, n);
            const std::string mname = name(m) + "_" + name(n);
            for (std::size_t t = 0; t < s.mean.size(); ++t)
                out << t << ',' << pname << ',' << mname << ',' << fmt(s.mean[t]) << ','
                    << fmt(s.stddev[t]) << '\n';
        }
    }
}

inline void write_epsilon_csv(const std::filesystem::path& file, const PolicyResult& r) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << "frame,policy";
    for (std::size_t c = 0; c < r.epsilon.size(); ++c)
        out << ",eps_mean_c" << c << ",eps_std_c" << c;
    out << '\n';
    const std::string pname = policy_name(r.policy);
    const std::size_t horizon = r.epsilon.empty() ? 0 : r.epsilon[0].mean.size();
    for (std::size_t t = 0; t < horizon; ++t) {
        out << t << ',' << pname;
        for (const auto& s : r.epsilon) out << ',' << fmt(s.mean[t]) << ',' << fmt(s.stddev[t]);
        out << '\n';
    }
}

inline void write_summary_csv(const std::filesystem::path& file, const ExperimentResult& res) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << "policy,metric,mean,std\n";
    for (const auto& r : res.policies) {
        for (Metric m : kMetrics) {
            for (Norm n : kNorms) {
                FinalStat f = final_stat(r.at(m, n));
                out << policy_name(r.policy) << ',' << name(m) << '_' << name(n) << ','
                    << fmt(f.mean) << ',' << fmt(f.stddev) << '\n';
            }
        }
    }
}

} // namespace csvio

// Runs every configured policy over the common replication set. When out_dir
// is given, writes trace_<policy>.csv, epsilon_<policy>.csv (learning policies
// only), summary.csv and config_resolved.json into it.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const std::optional<std::filesystem::path>& out_dir = {},
                                       bool verbose = false) {
    ExperimentResult result;
    std::vector<double> capacity = draw_capacity(cfg);

    for (PolicyKind policy : cfg.policies) {
        std::array<std::array<SeriesAccumulator, 2>, 3> acc;
        for (auto& row : acc)
            for (auto& a : row) a.resize(static_cast<std::size_t>(cfg.horizon));
        std::vector<SeriesAccumulator> eps_acc;
        if (uses_nonparametric(policy))
            eps_acc.assign(cfg.channels, SeriesAccumulator(static_cast<std::size_t>(cfg.horizon)));

        for (int rep = 0; rep < cfg.replications; ++rep) {
            Engine eng(engine_config(cfg, policy, capacity), realize_pu_models(cfg, rep),
                       su_per_device(cfg), cfg.seed, static_cast<std::uint64_t>(rep),
                       cfg.horizon);
            eng.run();
            const MetricsTrace& tr = eng.trace();
            for (Metric m : kMetrics)
                for (Norm n : kNorms)
                    acc[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)].add(
                        normalized_series(tr, m, n));
            for (std::size_t c = 0; c < eps_acc.size(); ++c) eps_acc[c].add(tr.epsilon[c]);

            if (verbose && rep + 1 == cfg.replications) {
                const EngineTotals& tt = eng.totals();
                std::fprintf(stderr,
                             "[%s] last rep: grants=%lld senses=%lld busy=%lld "
                             "pu_collisions=%lld error_frames=%lld throughput=%.1f\n",
                             policy_name(policy).c_str(), tt.grants, tt.senses,
                             tt.busy_senses, tt.pu_collisions, tt.error_frames, tt.throughput);
                if (const ResidualModel* rm = eng.residual_model()) {
                    for (int c = 0; c < cfg.channels; ++c) {
                        const auto& a = rm->alpha(c);
                        double tot = 0.0, mean = 0.0;
                        for (std::size_t k = 0; k < a.size(); ++k) {
                            tot += a[k];
                            mean += (k + 1) * a[k];
                        }
                        std::fprintf(stderr,
                                     "[%s]   channel %d: posterior mean skip %.2f "
                                     "(mass %.0f, truncated %lld)\n",
                                     policy_name(policy).c_str(), c, mean / tot, tot,
                                     rm->truncations());
                    }
                }
                if (policy == PolicyKind::Spsa)
                    for (int c = 0; c < cfg.channels; ++c)
                        std::fprintf(stderr, "[%s]   channel %d: eps %.3f\n",
                                     policy_name(policy).c_str(), c,
                                     eng.spsa_states()[c].active);
            }
        }

        PolicyResult pr;
        pr.policy = policy;
        for (std::size_t m = 0; m < 3; ++m)
            for (std::size_t n = 0; n < 2; ++n) pr.stats[m][n] = acc[m][n].finish();
        for (auto& a : eps_acc) pr.epsilon.push_back(a.finish());
        result.policies.push_back(std::move(pr));
    }

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        for (const auto& r : result.policies) {
            csvio::write_trace_csv(*out_dir / ("trace_" + policy_name(r.policy) + ".csv"), r);
            if (!r.epsilon.empty())
                csvio::write_epsilon_csv(*out_dir / ("epsilon_" + policy_name(r.policy) + ".csv"),
                                         r);
        }
        csvio::write_summary_csv(*out_dir / "summary.csv", result);
        std::ofstream cj(*out_dir / "config_resolved.json");
        if (!cj) throw std::runtime_error("cannot write config_resolved.json");
        cj << to_json(cfg).dump(2) << '\n';
    }
    return result;
}

} // namespace osa
