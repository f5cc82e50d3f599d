#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rng.hpp"

namespace osa {

inline std::vector<double> sample_dirichlet(const std::vector<double>& alpha, Rng& rng) {
    std::vector<double> p(alpha.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        p[i] = std::gamma_distribution<double>(alpha[i], 1.0)(rng);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

// p_hat = (1 - eps) * p + eps * delta(last class). Keeps a floor of
// exploration mass on the longest skip so it is never starved.
inline std::vector<double> augment_tail(std::vector<double> p, double eps) {
    if (eps < 0.0 || eps > 1.0) throw std::logic_error("augment_tail: eps must be in [0, 1]");
    for (double& x : p) x *= 1.0 - eps;
    p.back() += eps;
    return p;
}

// Samples an index from an (approximately normalized) pmf; returns 0-based.
inline std::size_t sample_categorical(const std::vector<double>& p, Rng& rng) {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return i;
    }
    return p.size() - 1;
}

// Dirichlet-categorical estimator of residual channel-free durations,
// quantized to classes 1..n_classes (frames). Observations arriving within
// hold_window frames of the previous window's end on the same channel are
// treated as one continued free period: the provisional count moves to the
// summed class instead of adding a fresh sample.
class ResidualModel {
public:
    ResidualModel(int n_channels, int n_classes, double prior = 1.0, int hold_window = 2)
        : n_classes_(n_classes), hold_window_(hold_window),
          alpha_(n_channels, std::vector<double>(n_classes, prior)),
          last_class_(n_channels, 0), last_end_(n_channels, 0) {
        if (n_channels <= 0) throw std::runtime_error("ResidualModel: n_channels must be > 0");
        if (n_classes <= 0) throw std::runtime_error("ResidualModel: n_classes must be > 0");
        if (prior <= 0.0) throw std::runtime_error("ResidualModel: prior must be > 0");
        if (hold_window < 0) throw std::runtime_error("ResidualModel: hold_window must be >= 0");
    }

    int channels() const { return static_cast<int>(alpha_.size()); }
    int n_classes() const { return n_classes_; }
    const std::vector<double>& alpha(int c) const { return alpha_.at(c); }
    long long truncations() const { return truncations_; }

    // Number of frames to transmit without re-sensing, in 1..n_classes.
    int predict(int c, double eps, Rng& rng) const {
        std::vector<double> p = sample_dirichlet(alpha_.at(c), rng);
        p = augment_tail(std::move(p), eps);
        return static_cast<int>(sample_categorical(p, rng)) + 1;
    }

    // Records an observed free duration tau (frames, > 0) for channel c.
    // now is the frame at which the observed window started.
    void update(int c, double tau, long long now) {
        if (tau <= 0.0) throw std::logic_error("ResidualModel::update: tau must be > 0");
        int k = quantize(tau);
        auto& a = alpha_.at(c);
        int& j = last_class_[c];
        if (j > 0 && now - last_end_[c] <= hold_window_) {
            int merged = std::min(j + k, n_classes_);
            a[j - 1] -= 1.0;
            a[merged - 1] += 1.0;
            j = merged;
        } else {
            a[k - 1] += 1.0;
            j = k;
        }
        last_end_[c] = now + k;
    }

    int quantize(double tau) {
        int k = static_cast<int>(std::floor(tau + 0.5));
        if (k < 1) k = 1;
        if (k > n_classes_) {
            k = n_classes_;
            ++truncations_;
        }
        return k;
    }

private:
    int n_classes_;
    int hold_window_;
    std::vector<std::vector<double>> alpha_;
    std::vector<int> last_class_;
    std::vector<long long> last_end_;
    long long truncations_ = 0;
};

// Conjugate Gamma posterior over the rate of an assumed-exponential residual
// distribution. Baseline for comparing against the non-parametric estimator.
class ParametricResidualModel {
public:
    ParametricResidualModel(int n_channels, int n_classes, double prior_shape = 1.0,
                            double prior_rate = 1.0)
        : n_classes_(n_classes), shape_(n_channels, prior_shape), rate_(n_channels, prior_rate) {
        if (n_channels <= 0) throw std::runtime_error("ParametricResidualModel: n_channels must be > 0");
        if (n_classes <= 0) throw std::runtime_error("ParametricResidualModel: n_classes must be > 0");
        if (prior_shape <= 0.0 || prior_rate <= 0.0)
            throw std::runtime_error("ParametricResidualModel: prior must be > 0");
    }

    int n_classes() const { return n_classes_; }
    double shape(int c) const { return shape_.at(c); }
    double rate(int c) const { return rate_.at(c); }

    int predict(int c, Rng& rng) const {
        double lambda = std::gamma_distribution<double>(shape_.at(c), 1.0 / rate_.at(c))(rng);
        double x = -std::log(uniform_open0(rng)) / lambda;
        int k = static_cast<int>(std::floor(x + 0.5));
        if (k < 1) k = 1;
        if (k > n_classes_) k = n_classes_;
        return k;
    }

    void update(int c, double tau) {
        if (tau <= 0.0) throw std::logic_error("ParametricResidualModel::update: tau must be > 0");
        shape_.at(c) += 1.0;
        rate_.at(c) += tau;
    }

private:
    int n_classes_;
    std::vector<double> shape_;
    std::vector<double> rate_;
};

} // namespace osa
