#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "simcore.hpp"

namespace osa {

using json = nlohmann::json;

// A scalar that may be randomized: fixed when lo == hi, else drawn U(lo, hi)
// per channel and replication.
struct Range {
    double lo = 0.0;
    double hi = 0.0;

    double draw(Rng& rng) const {
        return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
    }
};

struct ExpSpec {
    Range mean{1.0, 200.0};
};

struct GpdSpec {
    Range k{0.0, 0.5};
    Range sigma{500.0, 500.0};
    Range theta{50.0, 100.0};
};

struct HedSpec {
    std::vector<double> weights;
    std::vector<double> means;
};

using DistSpec = std::variant<ExpSpec, GpdSpec, HedSpec>;

struct PuSpec {
    DistSpec on = ExpSpec{};
    DistSpec off = ExpSpec{};
};

inline DurationDist realize(const DistSpec& spec, Rng& rng) {
    if (const auto* e = std::get_if<ExpSpec>(&spec)) return ExpParams{e->mean.draw(rng)};
    if (const auto* g = std::get_if<GpdSpec>(&spec))
        return GpdParams{g->k.draw(rng), g->sigma.draw(rng), g->theta.draw(rng)};
    const auto& h = std::get<HedSpec>(spec);
    return HedParams{h.weights, h.means};
}

inline PuTrafficModel realize(const PuSpec& spec, Rng& rng) {
    return {realize(spec.on, rng), realize(spec.off, rng)};
}

struct ExperimentConfig {
    std::uint64_t seed = 1;
    int replications = 50;
    long long horizon = 20000;
    int channels = 5;
    int devices = 20;
    std::vector<PolicyKind> policies{PolicyKind::Traditional,  PolicyKind::Genie,
                                     PolicyKind::FixedEps,     PolicyKind::DecayEps,
                                     PolicyKind::Spsa,         PolicyKind::Parametric};
    RadioConfig radio;
    Range capacity{1.0, 5.0};
    std::vector<PuSpec> pu{PuSpec{}};          // one entry for all channels, or per channel
    std::vector<SuTrafficParams> su{EventDrivenSu{}};  // one for all devices, or per device
    double kappa = 0.5;
    AssignConfig assign;
    int n_classes = 100;
    double prior = 1.0;
    int hold_window = 2;
    double fixed_eps = 0.1;
    double decay_beta = 0.5;
    SpsaParams spsa;
    CollisionMode collision_mode = CollisionMode::Restart;
};

namespace cfgio {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
    throw std::runtime_error("config." + path + ": " + msg);
}

inline void expect_keys(const json& j, const std::string& path,
                        std::initializer_list<const char*> keys) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys)
            if (it.key() == k) known = true;
        if (!known) fail(path, "unknown key '" + it.key() + "'");
    }
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

inline Range range(const json& j, const std::string& path) {
    if (j.is_number()) {
        double x = j.get<double>();
        return {x, x};
    }
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
        Range r{j[0].get<double>(), j[1].get<double>()};
        if (r.hi < r.lo) fail(path, "range upper bound below lower bound");
        return r;
    }
    fail(path, "expected a number or [lo, hi]");
}

inline void check_range(const Range& r, double min_lo, const std::string& path) {
    if (r.lo < min_lo) fail(path, "must be >= " + std::to_string(min_lo));
}

inline DistSpec dist_spec(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    std::string model = j.value("model", "");
    if (model == "exponential") {
        expect_keys(j, path, {"model", "mean"});
        ExpSpec e;
        if (j.contains("mean")) e.mean = range(j.at("mean"), path + ".mean");
        if (e.mean.lo <= 0.0) fail(path + ".mean", "must be > 0");
        return e;
    }
    if (model == "gpd") {
        expect_keys(j, path, {"model", "k", "sigma", "theta"});
        GpdSpec g;
        if (j.contains("k")) g.k = range(j.at("k"), path + ".k");
        if (j.contains("sigma")) g.sigma = range(j.at("sigma"), path + ".sigma");
        if (j.contains("theta")) g.theta = range(j.at("theta"), path + ".theta");
        check_range(g.k, 0.0, path + ".k");
        if (g.sigma.lo <= 0.0) fail(path + ".sigma", "must be > 0");
        check_range(g.theta, 0.0, path + ".theta");
        return g;
    }
    if (model == "hed") {
        expect_keys(j, path, {"model", "weights", "means"});
        HedSpec h;
        if (!j.contains("weights") || !j.contains("means"))
            fail(path, "hed needs 'weights' and 'means'");
        h.weights = j.at("weights").get<std::vector<double>>();
        h.means = j.at("means").get<std::vector<double>>();
        validate(HedParams{h.weights, h.means});
        return h;
    }
    fail(path + ".model", "expected 'exponential', 'gpd' or 'hed'");
}

inline PuSpec pu_spec(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    expect_keys(j, path, {"on", "off"});
    PuSpec s;
    if (j.contains("on")) s.on = dist_spec(j.at("on"), path + ".on");
    if (j.contains("off")) s.off = dist_spec(j.at("off"), path + ".off");
    return s;
}

inline SuTrafficParams su_spec(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    std::string kind = j.value("kind", "");
    if (kind == "periodic") {
        expect_keys(j, path, {"kind", "burst_frames", "interval_frames"});
        PeriodicSu p;
        p.burst_frames = j.value("burst_frames", p.burst_frames);
        p.interval_frames = j.value("interval_frames", p.interval_frames);
        try {
            validate(SuTrafficParams{p});
        } catch (const std::exception& e) {
            fail(path, e.what());
        }
        return p;
    }
    if (kind == "event") {
        expect_keys(j, path, {"kind", "firing_freq", "mean_payload"});
        EventDrivenSu e;
        e.firing_freq = j.value("firing_freq", e.firing_freq);
        e.mean_payload = j.value("mean_payload", e.mean_payload);
        try {
            validate(SuTrafficParams{e});
        } catch (const std::exception& ex) {
            fail(path, ex.what());
        }
        return e;
    }
    fail(path + ".kind", "expected 'periodic' or 'event'");
}

inline json to_json(const Range& r) {
    if (r.lo == r.hi) return r.lo;
    return json::array({r.lo, r.hi});
}

inline json to_json(const DistSpec& d) {
    json j;
    if (const auto* e = std::get_if<ExpSpec>(&d)) {
        j["model"] = "exponential";
        j["mean"] = to_json(e->mean);
    } else if (const auto* g = std::get_if<GpdSpec>(&d)) {
        j["model"] = "gpd";
        j["k"] = to_json(g->k);
        j["sigma"] = to_json(g->sigma);
        j["theta"] = to_json(g->theta);
    } else {
        const auto& h = std::get<HedSpec>(d);
        j["model"] = "hed";
        j["weights"] = h.weights;
        j["means"] = h.means;
    }
    return j;
}

inline json to_json(const SuTrafficParams& s) {
    json j;
    if (const auto* p = std::get_if<PeriodicSu>(&s)) {
        j["kind"] = "periodic";
        j["burst_frames"] = p->burst_frames;
        j["interval_frames"] = p->interval_frames;
    } else {
        const auto& e = std::get<EventDrivenSu>(s);
        j["kind"] = "event";
        j["firing_freq"] = e.firing_freq;
        j["mean_payload"] = e.mean_payload;
    }
    return j;
}

} // namespace cfgio

inline json to_json(const ExperimentConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["replications"] = c.replications;
    j["horizon_frames"] = c.horizon;
    j["channels"] = c.channels;
    j["devices"] = c.devices;
    json pol = json::array();
    for (PolicyKind p : c.policies) pol.push_back(policy_name(p));
    j["policies"] = pol;
    j["radio"] = {{"sensing_overhead", c.radio.sensing_overhead},
                  {"p_detect", c.radio.p_detect},
                  {"p_false_alarm", c.radio.p_false_alarm},
                  {"channel_error", c.radio.channel_error}};
    j["capacity"] = cfgio::to_json(c.capacity);
    json pu = json::array();
    for (const auto& s : c.pu)
        pu.push_back({{"on", cfgio::to_json(s.on)}, {"off", cfgio::to_json(s.off)}});
    j["pu_traffic"] = c.pu.size() == 1 ? pu[0] : pu;
    json su = json::array();
    for (const auto& s : c.su) su.push_back(cfgio::to_json(s));
    j["su_traffic"] = c.su.size() == 1 ? su[0] : su;
    j["learner"] = {{"kappa", c.kappa},
                    {"eta", c.assign.eta},
                    {"max_stall", c.assign.max_stall},
                    {"n_classes", c.n_classes},
                    {"prior", c.prior},
                    {"hold_window", c.hold_window},
                    {"fixed_eps", c.fixed_eps},
                    {"decay_beta", c.decay_beta},
                    {"spsa",
                     {{"a", c.spsa.a},
                      {"alpha", c.spsa.alpha},
                      {"v", c.spsa.v},
                      {"gamma", c.spsa.gamma},
                      {"eps0", c.spsa.eps0},
                      {"target", c.spsa.target},
                      {"window", c.spsa.window}}}};
    j["collision_mode"] = c.collision_mode == CollisionMode::Restart ? "restart" : "resume";
    return j;
}

inline ExperimentConfig config_from_json(const json& j) {
    using namespace cfgio;
    if (!j.is_object()) fail("", "top level must be an object");
    expect_keys(j, "", {"seed", "replications", "horizon_frames", "channels", "devices",
                        "policies", "radio", "capacity", "pu_traffic", "su_traffic", "learner",
                        "collision_mode"});
    ExperimentConfig c;
    c.seed = j.value("seed", c.seed);
    c.replications = j.value("replications", c.replications);
    if (c.replications < 1) fail("replications", "must be >= 1");
    c.horizon = j.value("horizon_frames", c.horizon);
    if (c.horizon < 1) fail("horizon_frames", "must be >= 1");
    c.channels = j.value("channels", c.channels);
    if (c.channels < 1) fail("channels", "must be >= 1");
    c.devices = j.value("devices", c.devices);
    if (c.devices < 1) fail("devices", "must be >= 1");

    if (j.contains("policies")) {
        if (!j.at("policies").is_array() || j.at("policies").empty())
            fail("policies", "expected a non-empty array of policy names");
        c.policies.clear();
        for (const auto& name : j.at("policies")) {
            auto p = policy_from_name(name.get<std::string>());
            if (!p) fail("policies", "unknown policy '" + name.get<std::string>() + "'");
            c.policies.push_back(*p);
        }
    }

    if (j.contains("radio")) {
        const json& r = j.at("radio");
        expect_keys(r, "radio", {"sensing_overhead", "p_detect", "p_false_alarm", "channel_error"});
        c.radio.sensing_overhead = r.value("sensing_overhead", c.radio.sensing_overhead);
        c.radio.p_detect = r.value("p_detect", c.radio.p_detect);
        c.radio.p_false_alarm = r.value("p_false_alarm", c.radio.p_false_alarm);
        c.radio.channel_error = r.value("channel_error", c.radio.channel_error);
        try {
            validate(c.radio);
        } catch (const std::exception& e) {
            fail("radio", e.what());
        }
    }

    if (j.contains("capacity")) {
        c.capacity = range(j.at("capacity"), "capacity");
        if (c.capacity.lo <= 0.0) fail("capacity", "must be > 0");
    }

    if (j.contains("pu_traffic")) {
        const json& p = j.at("pu_traffic");
        c.pu.clear();
        if (p.is_array()) {
            if (p.empty()) fail("pu_traffic", "array must not be empty");
            for (std::size_t i = 0; i < p.size(); ++i)
                c.pu.push_back(pu_spec(p[i], "pu_traffic[" + std::to_string(i) + "]"));
        } else {
            c.pu.push_back(pu_spec(p, "pu_traffic"));
        }
    }
    if (c.pu.size() != 1 && static_cast<int>(c.pu.size()) != c.channels)
        fail("pu_traffic", "need one spec or exactly one per channel");

    if (j.contains("su_traffic")) {
        const json& s = j.at("su_traffic");
        c.su.clear();
        if (s.is_array()) {
            if (s.empty()) fail("su_traffic", "array must not be empty");
            for (std::size_t i = 0; i < s.size(); ++i)
                c.su.push_back(su_spec(s[i], "su_traffic[" + std::to_string(i) + "]"));
        } else {
            c.su.push_back(su_spec(s, "su_traffic"));
        }
    }
    if (c.su.size() != 1 && static_cast<int>(c.su.size()) != c.devices)
        fail("su_traffic", "need one spec or exactly one per device");

    if (j.contains("learner")) {
        const json& l = j.at("learner");
        expect_keys(l, "learner",
                    {"kappa", "eta", "max_stall", "n_classes", "prior", "hold_window",
                     "fixed_eps", "decay_beta", "spsa"});
        c.kappa = l.value("kappa", c.kappa);
        if (c.kappa < 0.0 || c.kappa > 1.0) fail("learner.kappa", "must be in [0, 1]");
        c.assign.eta = l.value("eta", c.assign.eta);
        if (c.assign.eta < 0.0 || c.assign.eta > 1.0) fail("learner.eta", "must be in [0, 1]");
        c.assign.max_stall = l.value("max_stall", c.assign.max_stall);
        if (c.assign.max_stall < 0) fail("learner.max_stall", "must be >= 0");
        c.n_classes = l.value("n_classes", c.n_classes);
        if (c.n_classes < 1) fail("learner.n_classes", "must be >= 1");
        c.prior = l.value("prior", c.prior);
        if (c.prior <= 0.0) fail("learner.prior", "must be > 0");
        c.hold_window = l.value("hold_window", c.hold_window);
        if (c.hold_window < 0) fail("learner.hold_window", "must be >= 0");
        c.fixed_eps = l.value("fixed_eps", c.fixed_eps);
        if (c.fixed_eps < 0.0 || c.fixed_eps > 1.0) fail("learner.fixed_eps", "must be in [0, 1]");
        c.decay_beta = l.value("decay_beta", c.decay_beta);
        if (c.decay_beta < 0.0) fail("learner.decay_beta", "must be >= 0");
        if (l.contains("spsa")) {
            const json& s = l.at("spsa");
            expect_keys(s, "learner.spsa", {"a", "alpha", "v", "gamma", "eps0", "target", "window"});
            c.spsa.a = s.value("a", c.spsa.a);
            c.spsa.alpha = s.value("alpha", c.spsa.alpha);
            c.spsa.v = s.value("v", c.spsa.v);
            c.spsa.gamma = s.value("gamma", c.spsa.gamma);
            c.spsa.eps0 = s.value("eps0", c.spsa.eps0);
            c.spsa.target = s.value("target", c.spsa.target);
            c.spsa.window = s.value("window", c.spsa.window);
            try {
                validate(c.spsa);
            } catch (const std::exception& e) {
                fail("learner.spsa", e.what());
            }
        }
    }

    if (j.contains("collision_mode")) {
        std::string m = j.at("collision_mode").get<std::string>();
        if (m == "restart")
            c.collision_mode = CollisionMode::Restart;
        else if (m == "resume")
            c.collision_mode = CollisionMode::Resume;
        else
            fail("collision_mode", "expected 'restart' or 'resume'");
    }
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
    }
    return config_from_json(j);
}

} // namespace osa
