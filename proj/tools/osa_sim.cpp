// Command-line front end for the spectrum-access simulator.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <osa/osa.hpp>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void print_summary(const osa::ExperimentResult& result) {
    std::printf("%-20s %14s %14s %14s\n", "policy", "sensing", "throughput", "collisions");
    std::printf("%-20s %14s %14s %14s\n", "", "(per frame)", "(per frame)", "(per frame)");
    for (const auto& r : result.policies) {
        auto f = [&](osa::Metric m) {
            return osa::final_stat(r.at(m, osa::Norm::WallClock)).mean;
        };
        std::printf("%-20s %14.4f %14.4f %14.4f\n", osa::policy_name(r.policy).c_str(),
                    f(osa::Metric::Sensing), f(osa::Metric::Throughput),
                    f(osa::Metric::Collisions));
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte-Carlo simulator of opportunistic spectrum access"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run the configured experiment");
    std::string config_path;
    std::string out_dir = "out";
    int reps = -1;
    long long frames = -1;
    long long seed = -1;
    std::vector<std::string> policies;
    bool verbose = false;
    run->add_option("--config", config_path, "JSON experiment configuration");
    run->add_option("--out", out_dir, "output directory for CSV traces")
        ->capture_default_str();
    run->add_option("--reps", reps, "override replication count");
    run->add_option("--frames", frames, "override horizon in frames");
    run->add_option("--seed", seed, "override master seed");
    run->add_option("--policies", policies, "override policy list")->delimiter(',');
    run->add_flag("--verbose,-v", verbose, "print per-channel learning summaries");

    CLI11_PARSE(app, argc, argv);

    try {
        osa::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = osa::parse_config(read_file(config_path));
        if (reps > 0) cfg.replications = reps;
        if (frames > 0) cfg.horizon = frames;
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (!policies.empty()) {
            cfg.policies.clear();
            for (const auto& name : policies) {
                auto p = osa::policy_from_name(name);
                if (!p) throw std::runtime_error("unknown policy '" + name + "'");
                cfg.policies.push_back(*p);
            }
        }

        auto t0 = std::chrono::steady_clock::now();
        osa::ExperimentResult result = osa::run_experiment(cfg, {out_dir}, verbose);
        auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        print_summary(result);
        std::printf("\n%d replication(s) x %lld frames per policy, %.1f s; results in %s/\n",
                    cfg.replications, cfg.horizon, dt, out_dir.c_str());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
