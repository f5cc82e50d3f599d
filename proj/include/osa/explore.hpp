#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "rng.hpp"

namespace osa {

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

struct ConstantEps {
    double eps = 0.1;
};

struct DecayEps {
    double beta = 0.5;  // eps_t = min(1, t^-beta)
};

inline double current_epsilon(const ConstantEps& p, long long /*t*/) { return p.eps; }

inline double current_epsilon(const DecayEps& p, long long t) {
    if (t < 1) throw std::logic_error("current_epsilon: decay needs t >= 1");
    return std::min(1.0, std::pow(static_cast<double>(t), -p.beta));
}

struct SpsaParams {
    double a = 5.0;       // step gain numerator, a_k = (a/k)^alpha
    double alpha = 0.2;
    double v = 0.1;       // perturbation numerator, v_k = (v/k)^gamma
    double gamma = 0.4;
    double eps0 = 0.1;
    double target = 0.1;  // tolerated collision fraction
    int window = 25;      // completed attempts per loss evaluation
};

inline void validate(const SpsaParams& p) {
    if (p.a <= 0.0 || p.v <= 0.0) throw std::runtime_error("spsa gains must be > 0");
    if (p.alpha <= 0.0 || p.gamma <= 0.0) throw std::runtime_error("spsa exponents must be > 0");
    if (p.eps0 < 0.0 || p.eps0 > 1.0) throw std::runtime_error("spsa eps0 must be in [0, 1]");
    if (p.target < 0.0 || p.target > 1.0) throw std::runtime_error("spsa target must be in [0, 1]");
    if (p.window < 1) throw std::runtime_error("spsa window must be >= 1");
}

// Simultaneous-perturbation controller of one channel's exploration factor.
// The loss (target - g)^2 is measured alternately at eps_k + v_k*delta and
// eps_k - v_k*delta; every second measurement yields a gradient estimate and
// an iterate step. The applied epsilon is always the clamped perturbed value.
struct SpsaState {
    SpsaParams p;
    double eps;        // base iterate
    double active;     // perturbed epsilon currently in effect
    double delta;      // Rademacher +-1
    double loss_plus = 0.0;
    long long k = 1;         // gain index
    long long count = 0;     // measurements consumed
    long long acc_attempts = 0;
    long long acc_collisions = 0;

    SpsaState(const SpsaParams& params, Rng& rng) : p(params), eps(params.eps0) {
        validate(p);
        delta = draw_delta(rng);
        active = clamp01(eps + gain_v() * delta);
    }

    double gain_a() const { return std::pow(p.a / static_cast<double>(k), p.alpha); }
    double gain_v() const { return std::pow(p.v / static_cast<double>(k), p.gamma); }

    static double draw_delta(Rng& rng) {
        return std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? -1.0 : 1.0;
    }
};

inline double current_epsilon(const SpsaState& s) { return s.active; }

// Feeds one observed collision fraction g measured under the active epsilon.
inline void spsa_update(SpsaState& s, double g, Rng& rng) {
    if (g < 0.0 || g > 1.0) throw std::logic_error("spsa_update: g must be in [0, 1]");
    double diff = s.p.target - g;
    double loss = diff * diff;
    ++s.count;
    if (s.count % 2 == 1) {
        s.loss_plus = loss;
        s.active = clamp01(s.eps - s.gain_v() * s.delta);
        return;
    }
    double ghat = (s.loss_plus - loss) / (2.0 * s.gain_v() * s.delta);
    s.eps = clamp01(s.eps - s.gain_a() * ghat);
    ++s.k;
    s.delta = SpsaState::draw_delta(rng);
    s.active = clamp01(s.eps + s.gain_v() * s.delta);
}

// Collision fraction over an evaluation window; empty windows yield nothing
// and the caller skips the update.
inline std::optional<double> record_collision_window(long long collisions, long long opportunities) {
    if (collisions < 0 || opportunities < 0 || collisions > opportunities)
        throw std::logic_error("record_collision_window: bad counts");
    if (opportunities == 0) return std::nullopt;
    return static_cast<double>(collisions) / static_cast<double>(opportunities);
}

} // namespace osa
