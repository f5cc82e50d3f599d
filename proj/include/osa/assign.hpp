#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rng.hpp"

namespace osa {

// Exponentially averaged throughput estimates V[channel][device].
class ValueTable {
public:
    ValueTable(int n_channels, int n_devices, double kappa)
        : n_channels_(n_channels), n_devices_(n_devices), kappa_(kappa),
          v_(static_cast<std::size_t>(n_channels) * n_devices, 0.0) {
        if (n_channels <= 0 || n_devices <= 0)
            throw std::runtime_error("ValueTable: dimensions must be positive");
        if (kappa < 0.0 || kappa > 1.0)
            throw std::runtime_error("ValueTable: kappa must be in [0, 1]");
    }

    int channels() const { return n_channels_; }
    int devices() const { return n_devices_; }

    double at(int c, int d) const { return v_[index(c, d)]; }
    double& at(int c, int d) { return v_[index(c, d)]; }

    // V <- kappa * T + (1 - kappa) * V
    void update(int c, int d, double throughput) {
        double& v = v_[index(c, d)];
        v = kappa_ * throughput + (1.0 - kappa_) * v;
    }

private:
    std::size_t index(int c, int d) const {
        if (c < 0 || c >= n_channels_ || d < 0 || d >= n_devices_)
            throw std::out_of_range("ValueTable: channel or device out of range");
        return static_cast<std::size_t>(c) * n_devices_ + d;
    }

    int n_channels_;
    int n_devices_;
    double kappa_;
    std::vector<double> v_;
};

inline void update_value(ValueTable& table, int c, int d, double throughput) {
    table.update(c, d, throughput);
}

// A partial injective device -> channel map, sorted by device id.
struct Assignment {
    std::vector<std::pair<int, int>> pairs;  // (device, channel)
};

inline double quality(const ValueTable& table, const Assignment& a) {
    double q = 0.0;
    for (auto [d, c] : a.pairs) q += table.at(c, d);
    return q;
}

struct AssignConfig {
    double eta = 0.1;    // probability of falling back to the random start
    int max_stall = 0;   // non-improving proposals before stopping; 0 = auto
};

struct HillClimbDebug {
    Assignment initial;
    Assignment climbed;
    std::vector<double> accepted_qualities;  // starts with the initial quality
    bool returned_initial = false;
};

namespace detail {

inline Assignment slots_to_assignment(const std::vector<int>& devs,
                                      const std::vector<int>& chans, std::size_t n) {
    Assignment a;
    a.pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) a.pairs.emplace_back(devs[i], chans[i]);
    std::sort(a.pairs.begin(), a.pairs.end());
    return a;
}

} // namespace detail

// Local search over channel assignments for the waiting devices.
// Starts from a uniform random maximal assignment and proposes either a swap of
// two device slots (which exchanges the channels of two assigned devices, or
// swaps an assigned device for an unassigned waiting one) or a move of an
// assigned device to an idle channel. Proposals are accepted when quality does
// not drop; the climb stops once max_stall consecutive proposals fail to
// strictly improve. With probability eta the random start is returned instead,
// which keeps rarely used channels from starving.
inline Assignment hill_climb(const ValueTable& table, const std::vector<int>& waiting,
                             const std::vector<int>& channels, Rng& rng,
                             const AssignConfig& cfg = {}, HillClimbDebug* dbg = nullptr) {
    if (waiting.empty()) throw std::logic_error("hill_climb: waiting set is empty");
    if (channels.empty()) return {};
    if (cfg.eta < 0.0 || cfg.eta > 1.0) throw std::runtime_error("hill_climb: eta must be in [0, 1]");

    const std::size_t w = waiting.size();
    const std::size_t m = channels.size();
    const std::size_t n = std::min(w, m);

    std::vector<int> devs(waiting);
    std::vector<int> chans(channels);
    std::shuffle(devs.begin(), devs.end(), rng);
    std::shuffle(chans.begin(), chans.end(), rng);

    Assignment initial = detail::slots_to_assignment(devs, chans, n);

    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) q += table.at(chans[i], devs[i]);
    if (dbg) {
        dbg->initial = initial;
        dbg->accepted_qualities.assign(1, q);
    }

    const bool can_swap = w >= 2;
    const bool can_move = m > n;
    if (can_swap || can_move) {
        const long long max_stall =
            cfg.max_stall > 0 ? cfg.max_stall : 5LL * static_cast<long long>(w) * m;
        const long long max_steps = 50 * max_stall;
        std::uniform_real_distribution<double> coin(0.0, 1.0);

        long long stall = 0;
        for (long long step = 0; step < max_steps && stall < max_stall; ++step) {
            bool swap = can_swap && (!can_move || coin(rng) < 0.5);
            double dq;
            std::size_t i, j;
            if (swap) {
                i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
                j = std::uniform_int_distribution<std::size_t>(0, w - 2)(rng);
                if (j >= i) ++j;
                dq = table.at(chans[i], devs[j]) - table.at(chans[i], devs[i]);
                if (j < n) dq += table.at(chans[j], devs[i]) - table.at(chans[j], devs[j]);
            } else {
                i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
                j = std::uniform_int_distribution<std::size_t>(n, m - 1)(rng);
                dq = table.at(chans[j], devs[i]) - table.at(chans[i], devs[i]);
            }
            if (dq >= 0.0) {
                if (swap)
                    std::swap(devs[i], devs[j]);
                else
                    std::swap(chans[i], chans[j]);
                q += dq;
                if (dbg) dbg->accepted_qualities.push_back(q);
            }
            if (dq > 0.0)
                stall = 0;
            else
                ++stall;
        }
    }

    Assignment climbed = detail::slots_to_assignment(devs, chans, n);
    if (dbg) dbg->climbed = climbed;

    if (cfg.eta > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < cfg.eta) {
        if (dbg) dbg->returned_initial = true;
        return initial;
    }
    return climbed;
}

} // namespace osa
