#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "assign.hpp"
#include "explore.hpp"
#include "metrics.hpp"
#include "residual.hpp"
#include "rng.hpp"
#include "traffic.hpp"

namespace osa {

struct RadioConfig {
    double sensing_overhead = 0.2;  // sensing time as a fraction of the frame
    double p_detect = 0.95;         // busy reading given the channel is occupied
    double p_false_alarm = 0.05;    // busy reading given the channel is free
    double channel_error = 0.05;    // per-frame transmission loss probability
};

inline void validate(const RadioConfig& r) {
    auto prob = [](double p, const char* what) {
        if (p < 0.0 || p > 1.0) throw std::runtime_error(std::string(what) + " must be in [0, 1]");
    };
    prob(r.p_detect, "p_detect");
    prob(r.p_false_alarm, "p_false_alarm");
    prob(r.channel_error, "channel_error");
    if (r.sensing_overhead < 0.0 || r.sensing_overhead >= 1.0)
        throw std::runtime_error("sensing_overhead must be in [0, 1)");
}

enum class SenseOutcome { Free, Busy };

// Energy-detection reading of the channel at one instant.
inline SenseOutcome sense(const PuProcess& pu, const RadioConfig& radio, Rng& rng) {
    double p_busy = pu.active() ? radio.p_detect : radio.p_false_alarm;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p_busy ? SenseOutcome::Busy
                                                                          : SenseOutcome::Free;
}

enum class PolicyKind { Traditional, Genie, FixedEps, DecayEps, Spsa, Parametric };

inline std::string policy_name(PolicyKind p) {
    switch (p) {
        case PolicyKind::Traditional: return "traditional";
        case PolicyKind::Genie: return "genie";
        case PolicyKind::FixedEps: return "proposed-fixed-eps";
        case PolicyKind::DecayEps: return "proposed-decay";
        case PolicyKind::Spsa: return "proposed-spsa";
        case PolicyKind::Parametric: return "parametric-baseline";
    }
    throw std::logic_error("unknown policy");
}

inline std::optional<PolicyKind> policy_from_name(const std::string& s) {
    for (PolicyKind p : {PolicyKind::Traditional, PolicyKind::Genie, PolicyKind::FixedEps,
                         PolicyKind::DecayEps, PolicyKind::Spsa, PolicyKind::Parametric})
        if (policy_name(p) == s) return p;
    return std::nullopt;
}

inline bool uses_nonparametric(PolicyKind p) {
    return p == PolicyKind::FixedEps || p == PolicyKind::DecayEps || p == PolicyKind::Spsa;
}

struct FrameEvent {
    enum class Kind { SensedFree, SensedBusy, SkipGranted, TxSuccess, TxCollision };
    Kind kind;
    long long frame = 0;
    int device = -1;
    int channel = -1;
    int frames = 0;          // TxSuccess: delivered; TxCollision: clean frames before the hit
    double throughput = 0.0; // TxSuccess only
    int t_skip = 0;          // SkipGranted only
    bool pu_overlap = false; // TxCollision cause
};

struct WindowResult {
    bool pu_collision = false;
    int frames_attempted = 0;     // includes the colliding frame
    int error_frames = 0;         // lost to channel error among non-colliding frames
    double collision_offset = 0;  // frames from window start to the overlap
};

// Walks the channel's primary user across `frames` whole frames while the
// device transmits, starting at first_tx_offset within frame 0 (the tail of a
// frame whose head was spent sensing). The first instant the primary is ON
// while the device is on air ends the window: the primary is notified (its ON
// period restarts) and the walk still finishes that frame. Frame losses from
// channel error do not end the window; the device only learns of them from the
// terminal acknowledgement. on_error_frame(f) is invoked per lost frame.
template <class FrameFn>
WindowResult run_tx_window(PuProcess& pu, int frames, double first_tx_offset,
                           double channel_error, Rng& pu_rng, Rng& err_rng,
                           FrameFn&& on_error_frame) {
    WindowResult r;
    auto noop = [](double, PuState) {};
    for (int f = 0; f < frames; ++f) {
        double tx_start = f == 0 ? first_tx_offset : 0.0;
        double cur = 0.0;
        bool collided = false;
        while (cur < 1.0) {
            // Segment-relative arithmetic throughout: deriving the step from
            // the rounded sum cur + remaining can yield a zero step (or walk
            // the process past its toggle) once remaining drops below one ulp.
            const double rem = pu.remaining();
            if (!collided && pu.active()) {
                double ov = std::max(cur, tx_start);
                if (ov < 1.0 && ov - cur < rem) {
                    r.pu_collision = true;
                    r.frames_attempted = f + 1;
                    r.collision_offset = f + ov;
                    collided = true;
                    pu.advance(ov - cur, pu_rng, noop);
                    pu.notify_collision(pu_rng);
                    cur = ov;
                    continue;
                }
            }
            if (cur + rem <= 1.0) {
                pu.advance(rem, pu_rng, noop);  // consume the whole segment: exactly one toggle
                cur += rem;
            } else {
                pu.advance(1.0 - cur, pu_rng, noop);
                cur = 1.0;
            }
        }
        if (collided) return r;
        if (channel_error > 0.0 &&
            std::uniform_real_distribution<double>(0.0, 1.0)(err_rng) < channel_error) {
            ++r.error_frames;
            on_error_frame(f);
        }
    }
    r.frames_attempted = frames;
    return r;
}

// Stand-alone transmission attempt on a just-sensed-free channel: up to
// min(t_skip, payload) frames without re-sensing.
inline FrameEvent transmit_window(int device, int channel, int t_skip, long long payload,
                                  PuProcess& pu, const RadioConfig& radio, double capacity,
                                  Rng& rng, bool sensed_first = false) {
    if (t_skip < 1) throw std::logic_error("transmit_window: t_skip must be >= 1");
    if (payload < 1) throw std::logic_error("transmit_window: payload must be >= 1");
    int frames = static_cast<int>(std::min<long long>(t_skip, payload));
    WindowResult r = run_tx_window(pu, frames, sensed_first ? radio.sensing_overhead : 0.0,
                                   radio.channel_error, rng, rng, [](int) {});
    FrameEvent ev;
    ev.device = device;
    ev.channel = channel;
    ev.frame = r.frames_attempted - 1;
    if (r.pu_collision) {
        ev.kind = FrameEvent::Kind::TxCollision;
        ev.frames = r.frames_attempted - 1;
        ev.pu_overlap = true;
    } else {
        ev.kind = FrameEvent::Kind::TxSuccess;
        ev.frames = frames - r.error_frames;
        double eff = ev.frames - (sensed_first ? radio.sensing_overhead : 0.0);
        ev.throughput = std::max(0.0, eff) * capacity;
    }
    return ev;
}

struct EngineConfig {
    int n_channels = 5;
    int n_devices = 20;
    PolicyKind policy = PolicyKind::FixedEps;
    RadioConfig radio;
    std::vector<double> capacity;  // [channel * n_devices + device], frames worth of data

    double kappa = 0.5;            // value-table averaging weight
    AssignConfig assign;
    int n_classes = 100;           // skip-horizon classes
    double prior = 1.0;            // Dirichlet prior per class
    int hold_window = 2;           // frames within which observations merge
    double fixed_eps = 0.1;
    double decay_beta = 0.5;
    SpsaParams spsa;
    CollisionMode collision_mode = CollisionMode::Restart;
};

struct EngineTotals {
    long long grants = 0;
    long long successes = 0;
    long long pu_collisions = 0;
    long long error_frames = 0;
    long long senses = 0;
    long long busy_senses = 0;
    long long attempted_frames = 0;
    long long pu_collision_notices = 0;
    double throughput = 0.0;
};

// Frame-synchronous simulation of one policy over one traffic realization.
// Each frame: idle devices generate traffic, the central node assigns waiting
// devices to unoccupied channels by hill climbing on the value table, assigned
// devices either take over a still-granted window or sense and (policy
// permitting) transmit a sensing-skip window, and windows ending this frame
// feed the value, residual and exploration learners.
class Engine {
public:
    Engine(const EngineConfig& cfg, const std::vector<PuTrafficModel>& pu_models,
           std::vector<SuTrafficParams> su_params, std::uint64_t master, std::uint64_t rep,
           long long horizon, std::vector<FrameEvent>* sink = nullptr)
        : Engine(cfg, make_processes(pu_models, cfg.collision_mode, master, rep),
                 std::move(su_params), master, rep, horizon, sink) {}

    // Controlled start: channel processes supplied by the caller.
    Engine(EngineConfig cfg, std::vector<PuProcess> pus, std::vector<SuTrafficParams> su_params,
           std::uint64_t master, std::uint64_t rep, long long horizon,
           std::vector<FrameEvent>* sink = nullptr)
        : cfg_(std::move(cfg)), horizon_(horizon), sink_(sink),
          values_(cfg_.n_channels, cfg_.n_devices, cfg_.kappa),
          learner_rng_(make_rng(master, "learner", rep)), trace_(horizon) {
        validate_config();
        if (static_cast<int>(pus.size()) != cfg_.n_channels)
            throw std::runtime_error("engine: one PU process per channel required");
        if (static_cast<int>(su_params.size()) != cfg_.n_devices)
            throw std::runtime_error("engine: one SU traffic spec per device required");

        channels_.reserve(pus.size());
        for (int c = 0; c < cfg_.n_channels; ++c) {
            channels_.push_back({std::move(pus[c]), make_rng(master, "pu", rep, c)});
        }
        devices_.resize(cfg_.n_devices);
        su_params_ = std::move(su_params);
        for (int d = 0; d < cfg_.n_devices; ++d) {
            auto& dev = devices_[d];
            dev.su_rng = make_rng(master, "su", rep, d);
            dev.sense_rng = make_rng(master, "sense", rep, d);
            dev.err_rng = make_rng(master, "err", rep, d);
            if (const auto* per = std::get_if<PeriodicSu>(&su_params_[d]))
                dev.phase_offset = std::uniform_int_distribution<long long>(
                    0, per->interval_frames - 1)(dev.su_rng);
        }

        if (uses_nonparametric(cfg_.policy))
            residual_ = std::make_unique<ResidualModel>(cfg_.n_channels, cfg_.n_classes,
                                                        cfg_.prior, cfg_.hold_window);
        if (cfg_.policy == PolicyKind::Parametric)
            parametric_ = std::make_unique<ParametricResidualModel>(cfg_.n_channels, cfg_.n_classes);
        if (cfg_.policy == PolicyKind::Spsa) {
            spsa_.reserve(cfg_.n_channels);
            for (int c = 0; c < cfg_.n_channels; ++c) spsa_.emplace_back(cfg_.spsa, learner_rng_);
        }
        if (uses_nonparametric(cfg_.policy))
            trace_.epsilon.assign(cfg_.n_channels, std::vector<double>(horizon_, 0.0));
    }

    void run() {
        while (t_ < horizon_) step();
    }

    void step() {
        const long long t = t_;
        if (t >= horizon_) throw std::logic_error("engine: stepped past horizon");

        // traffic generation
        for (int d = 0; d < cfg_.n_devices; ++d) {
            auto& dev = devices_[d];
            if (dev.state != Phase::Idle) continue;
            int gen = su_generate(su_params_[d], t, dev.phase_offset, dev.su_rng);
            if (gen > 0) {
                dev.pending = gen;
                dev.state = Phase::Wait;
            }
        }

        // census and exploration trace
        int active = 0;
        for (const auto& dev : devices_)
            if (dev.state != Phase::Idle) ++active;
        trace_.n_active[t] = active;
        if (!trace_.epsilon.empty())
            for (int c = 0; c < cfg_.n_channels; ++c)
                trace_.epsilon[c][t] = channel_epsilon(c, t);

        // assignment round
        waiting_.clear();
        pool_.clear();
        for (int d = 0; d < cfg_.n_devices; ++d)
            if (devices_[d].state == Phase::Wait) waiting_.push_back(d);
        for (int c = 0; c < cfg_.n_channels; ++c)
            if (channels_[c].occupant < 0 && channels_[c].last_busy + 1 != t)
                pool_.push_back(c);  // a just-busy channel sits out one round
        if (!waiting_.empty() && !pool_.empty()) {
            Assignment a = hill_climb(values_, waiting_, pool_, learner_rng_, cfg_.assign);
            for (auto [d, c] : a.pairs) handle_assignment(d, c, t);
        }

        // windows ending this frame
        for (int d = 0; d < cfg_.n_devices; ++d)
            if (devices_[d].state == Phase::Active && devices_[d].terminal == t)
                finish_window(d, t);

        ++t_;
    }

    long long now() const { return t_; }
    long long horizon() const { return horizon_; }
    const MetricsTrace& trace() const { return trace_; }
    const EngineTotals& totals() const { return totals_; }
    const ValueTable& value_table() const { return values_; }
    const ResidualModel* residual_model() const { return residual_.get(); }
    const ParametricResidualModel* parametric_model() const { return parametric_.get(); }
    const std::vector<SpsaState>& spsa_states() const { return spsa_; }
    const PuProcess& channel_pu(int c) const { return channels_.at(c).pu; }
    PolicyKind policy() const { return cfg_.policy; }

    enum class Phase { Idle, Wait, Active };

    struct Device {
        Phase state = Phase::Idle;
        long long pending = 0;
        int channel = -1;
        long long phase_offset = 0;
        // in-flight window
        long long window_start = -1;
        int window_frames = 0;
        int attempted = 0;
        int error_frames = 0;
        bool pu_collision = false;
        double collision_offset = 0.0;
        bool sensed_first = false;
        double pending_tp = 0.0;
        long long terminal = -1;
        Rng su_rng, sense_rng, err_rng;
    };

    const Device& device(int d) const { return devices_.at(d); }
    int channel_occupant(int c) const { return channels_.at(c).occupant; }

    // Structural invariants; throws std::logic_error on violation.
    void audit() const {
        std::vector<int> seen(cfg_.n_channels, -1);
        for (int d = 0; d < cfg_.n_devices; ++d) {
            const auto& dev = devices_[d];
            if (dev.state == Phase::Idle && dev.pending != 0)
                throw std::logic_error("audit: idle device with pending data");
            if (dev.state != Phase::Idle && dev.pending <= 0)
                throw std::logic_error("audit: non-idle device without pending data");
            if (dev.state == Phase::Active) {
                if (dev.channel < 0 || channels_[dev.channel].occupant != d)
                    throw std::logic_error("audit: active device not holding its channel");
                if (seen[dev.channel] >= 0)
                    throw std::logic_error("audit: two devices on one channel");
                seen[dev.channel] = d;
            } else if (dev.channel != -1) {
                throw std::logic_error("audit: inactive device holding a channel");
            }
        }
        for (int c = 0; c < cfg_.n_channels; ++c)
            if (channels_[c].occupant >= 0 && seen[c] != channels_[c].occupant)
                throw std::logic_error("audit: channel occupant without active device");
    }

private:
    struct Channel {
        PuProcess pu;
        Rng rng;
        long long pu_time = 0;
        int occupant = -1;
        long long last_busy = -2;  // frame of the most recent busy sense
    };

    static std::vector<PuProcess> make_processes(const std::vector<PuTrafficModel>& models,
                                                 CollisionMode mode, std::uint64_t master,
                                                 std::uint64_t rep) {
        std::vector<PuProcess> out;
        out.reserve(models.size());
        for (std::size_t c = 0; c < models.size(); ++c) {
            validate(models[c].on);
            validate(models[c].off);
            Rng r = make_rng(master, "pu-init", rep, c);
            out.emplace_back(models[c], r, mode);
            // walk each process to a random phase: cycles must not start
            // aligned across channels, or the first ON periods bunch up
            out.back().advance(std::uniform_real_distribution<double>(0.0, 20000.0)(r), r,
                               [](double, PuState) {});
        }
        return out;
    }

    void validate_config() const {
        if (cfg_.n_channels <= 0 || cfg_.n_devices <= 0)
            throw std::runtime_error("engine: n_channels and n_devices must be > 0");
        if (horizon_ <= 0) throw std::runtime_error("engine: horizon must be > 0");
        validate(cfg_.radio);
        if (cfg_.capacity.size() !=
            static_cast<std::size_t>(cfg_.n_channels) * static_cast<std::size_t>(cfg_.n_devices))
            throw std::runtime_error("engine: capacity matrix must be n_channels x n_devices");
        if (cfg_.kappa < 0.0 || cfg_.kappa > 1.0)
            throw std::runtime_error("engine: kappa must be in [0, 1]");
        if (cfg_.fixed_eps < 0.0 || cfg_.fixed_eps > 1.0)
            throw std::runtime_error("engine: fixed_eps must be in [0, 1]");
        if (cfg_.n_classes <= 0) throw std::runtime_error("engine: n_classes must be > 0");
        if (cfg_.policy == PolicyKind::Spsa) validate(cfg_.spsa);
    }

    double capacity(int c, int d) const {
        return cfg_.capacity[static_cast<std::size_t>(c) * cfg_.n_devices + d];
    }

    void ensure_pu_at(Channel& ch, long long t) {
        if (ch.pu_time < t) {
            ch.pu.advance(static_cast<double>(t - ch.pu_time), ch.rng, [](double, PuState) {});
            ch.pu_time = t;
        }
    }

    double channel_epsilon(int c, long long t) const {
        switch (cfg_.policy) {
            case PolicyKind::FixedEps: return cfg_.fixed_eps;
            case PolicyKind::DecayEps: return current_epsilon(DecayEps{cfg_.decay_beta}, t + 1);
            case PolicyKind::Spsa: return spsa_[c].active;
            default: return 0.0;
        }
    }

    void emit(const FrameEvent& ev) {
        if (sink_) sink_->push_back(ev);
    }

    void handle_assignment(int d, int c, long long t) {
        auto& ch = channels_[c];
        ensure_pu_at(ch, t);

        ++totals_.senses;
        trace_.sensing[t] += 1.0;
        SenseOutcome o = sense(ch.pu, cfg_.radio, devices_[d].sense_rng);
        if (o == SenseOutcome::Busy) {
            ++totals_.busy_senses;
            ch.last_busy = t;
            emit({FrameEvent::Kind::SensedBusy, t, d, c});
            update_value(values_, c, d, 0.0);
            return;
        }
        emit({FrameEvent::Kind::SensedFree, t, d, c});

        int skip = policy_skip(d, c, t);
        if (skip <= 0) return;  // genie declines: no usable free time
        grant(d, c, t, skip, true);
    }

    int policy_skip(int d, int c, long long t) {
        switch (cfg_.policy) {
            case PolicyKind::Traditional:
                return 1;
            case PolicyKind::Genie: {
                const auto& pu = channels_[c].pu;
                if (pu.active()) return 0;  // sensing missed an occupied channel
                long long skip = static_cast<long long>(std::floor(pu.remaining()));
                return static_cast<int>(std::min<long long>(skip, devices_[d].pending));
            }
            case PolicyKind::FixedEps:
                return residual_->predict(c, cfg_.fixed_eps, learner_rng_);
            case PolicyKind::DecayEps:
                return residual_->predict(c, current_epsilon(DecayEps{cfg_.decay_beta}, t + 1),
                                          learner_rng_);
            case PolicyKind::Spsa:
                return residual_->predict(c, spsa_[c].active, learner_rng_);
            case PolicyKind::Parametric:
                return parametric_->predict(c, learner_rng_);
        }
        throw std::logic_error("unknown policy");
    }

    void grant(int d, int c, long long t, int window, bool sensed) {
        auto& dev = devices_[d];
        auto& ch = channels_[c];
        window = static_cast<int>(std::min<long long>(window, horizon_ - t));
        int frames = static_cast<int>(std::min<long long>(window, dev.pending));

        ++totals_.grants;
        emit({FrameEvent::Kind::SkipGranted, t, d, c, 0, 0.0, window});

        WindowResult r = run_tx_window(
            ch.pu, frames, sensed ? cfg_.radio.sensing_overhead : 0.0, cfg_.radio.channel_error,
            ch.rng, dev.err_rng, [&](int f) { trace_.collisions[t + f] += 1.0; });
        ch.pu_time = t + r.frames_attempted;
        if (r.pu_collision) ++totals_.pu_collision_notices;

        dev.state = Phase::Active;
        dev.channel = c;
        ch.occupant = d;
        dev.window_start = t;
        dev.window_frames = window;
        dev.sensed_first = sensed;
        dev.attempted = r.frames_attempted;
        dev.error_frames = r.error_frames;
        dev.pu_collision = r.pu_collision;
        dev.collision_offset = r.collision_offset;
        dev.terminal = t + r.frames_attempted - 1;

        totals_.attempted_frames += r.frames_attempted;
        totals_.error_frames += r.error_frames;
        for (int i = 0; i < r.frames_attempted; ++i) trace_.attempts[t + i] += 1.0;

        if (!r.pu_collision) {
            int delivered = dev.attempted - dev.error_frames;
            double eff = delivered - (sensed ? cfg_.radio.sensing_overhead : 0.0);
            dev.pending_tp = std::max(0.0, eff) * capacity(c, d);
        } else {
            dev.pending_tp = 0.0;
        }
    }

    void finish_window(int d, long long t) {
        auto& dev = devices_[d];
        int c = dev.channel;
        auto& ch = channels_[c];

        double tau;
        if (dev.pu_collision) {
            ++totals_.pu_collisions;
            trace_.collisions[t] += 1.0;
            emit({FrameEvent::Kind::TxCollision, t, d, c, dev.attempted - 1, 0.0, 0, true});
            update_value(values_, c, d, 0.0);
            tau = std::max(dev.collision_offset, 0.25);
        } else {
            ++totals_.successes;
            totals_.throughput += dev.pending_tp;
            trace_.throughput[t] += dev.pending_tp;
            int delivered = dev.attempted - dev.error_frames;
            emit({FrameEvent::Kind::TxSuccess, t, d, c, delivered, dev.pending_tp});
            update_value(values_, c, d, dev.pending_tp);
            dev.pending -= delivered;
            tau = dev.attempted;
        }

        if (residual_) residual_->update(c, tau, dev.window_start);
        if (parametric_) parametric_->update(c, tau);
        if (cfg_.policy == PolicyKind::Spsa) {
            auto& st = spsa_[c];
            ++st.acc_attempts;
            if (dev.pu_collision) ++st.acc_collisions;
            if (st.acc_attempts >= st.p.window) {
                if (auto g = record_collision_window(st.acc_collisions, st.acc_attempts))
                    spsa_update(st, *g, learner_rng_);
                st.acc_attempts = 0;
                st.acc_collisions = 0;
            }
        }

        ch.occupant = -1;
        dev.channel = -1;
        dev.state = dev.pending > 0 ? Phase::Wait : Phase::Idle;
        dev.terminal = -1;
    }

    EngineConfig cfg_;
    long long horizon_;
    std::vector<FrameEvent>* sink_;
    ValueTable values_;
    Rng learner_rng_;
    MetricsTrace trace_;
    EngineTotals totals_;
    std::vector<Channel> channels_;
    std::vector<Device> devices_;
    std::vector<SuTrafficParams> su_params_;
    std::unique_ptr<ResidualModel> residual_;
    std::unique_ptr<ParametricResidualModel> parametric_;
    std::vector<SpsaState> spsa_;
    std::vector<int> waiting_, pool_;
    long long t_ = 0;
};

} // namespace osa
