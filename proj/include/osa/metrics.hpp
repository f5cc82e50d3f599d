#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace osa {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double x) { return std::isnan(x); }

// Per-frame counters accumulated over one replication.
struct MetricsTrace {
    long long horizon = 0;
    std::vector<double> sensing;      // sensing operations performed in the frame
    std::vector<double> throughput;   // delivered data, in frame-capacity units
    std::vector<double> collisions;   // failed transmission frames perceived in the frame
    std::vector<double> attempts;     // transmission frames attempted in the frame
    std::vector<int> n_active;        // devices with pending or in-flight data
    std::vector<std::vector<double>> epsilon;  // [channel][frame]; empty when the policy has none

    explicit MetricsTrace(long long h = 0) { resize(h); }

    void resize(long long h) {
        horizon = h;
        auto n = static_cast<std::size_t>(h);
        sensing.assign(n, 0.0);
        throughput.assign(n, 0.0);
        collisions.assign(n, 0.0);
        attempts.assign(n, 0.0);
        n_active.assign(n, 0);
    }
};

enum class Metric { Sensing, Throughput, Collisions };
enum class Norm { Attempted, WallClock };

inline std::string name(Metric m) {
    switch (m) {
        case Metric::Sensing: return "sensing";
        case Metric::Throughput: return "throughput";
        case Metric::Collisions: return "collisions";
    }
    throw std::logic_error("unknown metric");
}

inline std::string name(Norm n) {
    return n == Norm::Attempted ? "per_attempt" : "per_frame";
}

// Cumulative per-active-device average of a counter:
//   Attempted:  y_t = sum_{n<=t} X_n / (N_active,t * F_t),  F_t = cumulative attempts
//   WallClock:  y_t = sum_{n<=t} X_n / (N_active,t * (t+1))
// Frames with no active device (or, for Attempted, no attempts yet) are missing.
inline std::vector<double> normalized_series(const MetricsTrace& tr, Metric m, Norm norm) {
    const std::vector<double>& x = m == Metric::Sensing ? tr.sensing
                                 : m == Metric::Throughput ? tr.throughput
                                                           : tr.collisions;
    std::vector<double> y(x.size(), kMissing);
    double cum = 0.0, cum_f = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        cum += x[t];
        cum_f += tr.attempts[t];
        double denom = norm == Norm::Attempted ? cum_f : static_cast<double>(t + 1);
        if (tr.n_active[t] > 0 && denom > 0.0)
            y[t] = cum / (tr.n_active[t] * denom);
    }
    return y;
}

// Last defined point of a series, or missing if none.
inline double final_value(const std::vector<double>& y) {
    for (auto it = y.rbegin(); it != y.rend(); ++it)
        if (!is_missing(*it)) return *it;
    return kMissing;
}

struct SeriesStats {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<long long> count;
};

// Pointwise mean and sample standard deviation across replications,
// skipping missing points. Welford accumulation, one series at a time.
class SeriesAccumulator {
public:
    explicit SeriesAccumulator(std::size_t len = 0) { resize(len); }

    void resize(std::size_t len) {
        n_.assign(len, 0);
        mean_.assign(len, 0.0);
        m2_.assign(len, 0.0);
    }

    std::size_t size() const { return n_.size(); }

    void add(const std::vector<double>& y) {
        if (y.size() != n_.size())
            throw std::logic_error("SeriesAccumulator: length mismatch");
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (is_missing(y[i])) continue;
            ++n_[i];
            double d = y[i] - mean_[i];
            mean_[i] += d / n_[i];
            m2_[i] += d * (y[i] - mean_[i]);
        }
    }

    SeriesStats finish() const {
        SeriesStats s;
        s.mean.assign(n_.size(), kMissing);
        s.stddev.assign(n_.size(), kMissing);
        s.count.assign(n_.begin(), n_.end());
        for (std::size_t i = 0; i < n_.size(); ++i) {
            if (n_[i] == 0) continue;
            s.mean[i] = mean_[i];
            s.stddev[i] = n_[i] > 1 ? std::sqrt(m2_[i] / (n_[i] - 1)) : 0.0;
        }
        return s;
    }

private:
    std::vector<long long> n_;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

inline SeriesStats aggregate_replications(const std::vector<std::vector<double>>& reps) {
    if (reps.empty()) throw std::logic_error("aggregate_replications: no series");
    SeriesAccumulator acc(reps.front().size());
    for (const auto& r : reps) acc.add(r);
    return acc.finish();
}

} // namespace osa
