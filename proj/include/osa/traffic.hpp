#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

#include "rng.hpp"

namespace osa {

// Durations are measured in frames (continuous, one frame = one unit).

struct GpdParams {
    double k = 0.0;      // shape, k >= 0
    double sigma = 1.0;  // scale, > 0
    double theta = 0.0;  // location, >= 0
};

struct HedParams {
    std::vector<double> weights;  // sums to 1
    std::vector<double> means;    // per-component exponential means, > 0
};

struct ExpParams {
    double mean = 1.0;  // > 0
};

inline void validate(const GpdParams& p) {
    if (p.k < 0.0) throw std::runtime_error("gpd shape k must be >= 0");
    if (p.sigma <= 0.0) throw std::runtime_error("gpd scale sigma must be > 0");
    if (p.theta < 0.0) throw std::runtime_error("gpd location theta must be >= 0");
}

inline void validate(const HedParams& p) {
    if (p.weights.empty() || p.weights.size() != p.means.size())
        throw std::runtime_error("hed weights/means must be non-empty and equal length");
    double sum = 0.0;
    for (double w : p.weights) {
        if (w < 0.0) throw std::runtime_error("hed weights must be >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::runtime_error("hed weights must sum to 1");
    for (double m : p.means)
        if (m <= 0.0) throw std::runtime_error("hed component means must be > 0");
}

inline void validate(const ExpParams& p) {
    if (p.mean <= 0.0) throw std::runtime_error("exponential mean must be > 0");
}

// Quantile of the generalized Pareto distribution at u in (0, 1].
// u is the survival-side uniform: u = 1 recovers the location theta.
inline double gpd_quantile(const GpdParams& p, double u) {
    if (u <= 0.0 || u > 1.0) throw std::logic_error("gpd_quantile: u must be in (0, 1]");
    if (p.k == 0.0) return p.theta - p.sigma * std::log(u);
    return p.theta + p.sigma / p.k * (std::pow(u, -p.k) - 1.0);
}

inline double gpd_cdf(const GpdParams& p, double x) {
    if (x <= p.theta) return 0.0;
    if (p.k == 0.0) return 1.0 - std::exp(-(x - p.theta) / p.sigma);
    return 1.0 - std::pow(1.0 + p.k * (x - p.theta) / p.sigma, -1.0 / p.k);
}

// Mean is theta + sigma/(1-k) for k < 1, infinite otherwise.
inline double gpd_mean(const GpdParams& p) {
    if (p.k >= 1.0) return std::numeric_limits<double>::infinity();
    return p.theta + p.sigma / (1.0 - p.k);
}

inline double sample_gpd(const GpdParams& p, Rng& rng) {
    return gpd_quantile(p, uniform_open0(rng));
}

inline double sample_hed(const HedParams& p, Rng& rng) {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::size_t i = 0;
    double acc = 0.0;
    for (; i + 1 < p.weights.size(); ++i) {
        acc += p.weights[i];
        if (u < acc) break;
    }
    return -p.means[i] * std::log(uniform_open0(rng));
}

inline double sample_exp(const ExpParams& p, Rng& rng) {
    return -p.mean * std::log(uniform_open0(rng));
}

inline double hed_mean(const HedParams& p) {
    double m = 0.0;
    for (std::size_t i = 0; i < p.weights.size(); ++i) m += p.weights[i] * p.means[i];
    return m;
}

// A primary-user channel model: independent ON and OFF duration distributions.
using DurationDist = std::variant<ExpParams, GpdParams, HedParams>;

inline double sample_duration(const DurationDist& d, Rng& rng) {
    struct {
        Rng& rng;
        double operator()(const ExpParams& p) const { return sample_exp(p, rng); }
        double operator()(const GpdParams& p) const { return sample_gpd(p, rng); }
        double operator()(const HedParams& p) const { return sample_hed(p, rng); }
    } v{rng};
    return std::visit(v, d);
}

inline double mean_duration(const DurationDist& d) {
    struct {
        double operator()(const ExpParams& p) const { return p.mean; }
        double operator()(const GpdParams& p) const { return gpd_mean(p); }
        double operator()(const HedParams& p) const { return hed_mean(p); }
    } v;
    return std::visit(v, d);
}

inline void validate(const DurationDist& d) {
    std::visit([](const auto& p) { validate(p); }, d);
}

struct PuTrafficModel {
    DurationDist on;
    DurationDist off;
};

enum class PuState { Idle, Active };

struct PuTransition {
    double offset;     // time from the start of the advance, in frames
    PuState to;
};

// What happens to the ON period when a secondary transmission collides with it.
enum class CollisionMode { Restart, Resume };

// Alternating renewal process for one channel's primary user.
// State is (Idle|Active) plus the residual time of the current period.
class PuProcess {
public:
    PuProcess(PuTrafficModel model, Rng& rng, CollisionMode mode = CollisionMode::Restart)
        : model_(std::move(model)), mode_(mode), state_(PuState::Idle),
          remaining_(fresh(model_.off, rng)) {}

    // Controlled start for tests and genie-style introspection.
    PuProcess(PuTrafficModel model, PuState state, double remaining,
              CollisionMode mode = CollisionMode::Restart)
        : model_(std::move(model)), mode_(mode), state_(state), remaining_(remaining) {
        if (remaining <= 0.0) throw std::logic_error("PuProcess: remaining must be > 0");
    }

    PuState state() const { return state_; }
    bool active() const { return state_ == PuState::Active; }
    double remaining() const { return remaining_; }

    // Advances the process by dt frames, invoking on_transition(offset, new_state)
    // at each period boundary crossed, in order.
    template <class F>
    void advance(double dt, Rng& rng, F&& on_transition) {
        if (dt < 0.0) throw std::logic_error("PuProcess::advance: dt must be >= 0");
        double elapsed = 0.0;
        while (remaining_ <= dt - elapsed) {
            elapsed += remaining_;
            state_ = (state_ == PuState::Idle) ? PuState::Active : PuState::Idle;
            remaining_ = fresh(state_ == PuState::Active ? model_.on : model_.off, rng);
            on_transition(elapsed, state_);
        }
        remaining_ -= dt - elapsed;
    }

    std::vector<PuTransition> advance(double dt, Rng& rng) {
        std::vector<PuTransition> out;
        advance(dt, rng, [&](double off, PuState s) { out.push_back({off, s}); });
        return out;
    }

    // A secondary transmission hit the ON period: the primary holds the channel
    // until its data goes through, so the ON duration starts over (Restart mode).
    void notify_collision(Rng& rng) {
        if (state_ != PuState::Active)
            throw std::logic_error("PuProcess::notify_collision: channel is not active");
        if (mode_ == CollisionMode::Restart)
            remaining_ = fresh(model_.on, rng);
    }

    const PuTrafficModel& model() const { return model_; }

private:
    // Zero-length periods would stall frame walks; the quantile at u = 1 can
    // produce them for exponential tails, so durations get a tiny floor.
    static double fresh(const DurationDist& d, Rng& rng) {
        double x = sample_duration(d, rng);
        return x > 0.0 ? x : 1e-12;
    }

    PuTrafficModel model_;
    CollisionMode mode_;
    PuState state_;
    double remaining_;
};

// Secondary-user traffic: either periodic bursts or event-driven arrivals.
struct PeriodicSu {
    int burst_frames = 5;     // payload generated per burst
    int interval_frames = 100;
};

struct EventDrivenSu {
    double firing_freq = 0.05;   // per-frame arrival probability while idle
    double mean_payload = 10.0;  // geometric payload mean, in frames
};

using SuTrafficParams = std::variant<PeriodicSu, EventDrivenSu>;

inline void validate(const SuTrafficParams& p) {
    if (const auto* per = std::get_if<PeriodicSu>(&p)) {
        if (per->burst_frames <= 0) throw std::runtime_error("periodic burst_frames must be > 0");
        if (per->interval_frames <= 0) throw std::runtime_error("periodic interval_frames must be > 0");
    } else {
        const auto& ev = std::get<EventDrivenSu>(p);
        if (ev.firing_freq < 0.0 || ev.firing_freq > 1.0)
            throw std::runtime_error("event-driven firing_freq must be in [0, 1]");
        if (ev.mean_payload < 1.0) throw std::runtime_error("event-driven mean_payload must be >= 1");
    }
}

// Payload (in frames) generated at frame t for an idle device.
// phase shifts the periodic schedule; event-driven devices ignore it.
inline int su_generate(const SuTrafficParams& p, long long t, long long phase, Rng& rng) {
    if (const auto* per = std::get_if<PeriodicSu>(&p)) {
        return ((t + phase) % per->interval_frames == 0) ? per->burst_frames : 0;
    }
    const auto& ev = std::get<EventDrivenSu>(p);
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) >= ev.firing_freq) return 0;
    // geometric on {1, 2, ...} with the requested mean
    double q = 1.0 / ev.mean_payload;
    double u = uniform_open0(rng);
    int n = 1 + static_cast<int>(std::floor(std::log(u) / std::log1p(-q)));
    return n < 1 ? 1 : n;
}

} // namespace osa
