/*
 * Copyright 2026 The ccdelivery Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// ccsim: command-line front end for the coded-delivery simulator.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ccdelivery.hpp"

namespace {

using namespace ccdelivery;

int run_simulate(ExperimentConfig config, OutputFormat format, const std::string& out_path) {
    if (config.values.empty())
        config.values = {config.sweep == SweepVariable::profiles ? static_cast<double>(config.profiles)
                                                                 : config.radius};
    const auto results = run_sweep(config);
    if (out_path == "-")
        emit_results(std::cout, results, format);
    else
        emit_results(results, format, out_path);
    return 0;
}

void print_partitions(const PartitionSet& set, std::size_t helpers) {
    for (const auto& p : set.partitions) {
        const auto s = slots(p, helpers);
        for (std::size_t i = 0; i < s.size(); ++i) std::cout << (i ? "-" : "") << (s[i] ? *s[i] : 0);
        std::cout << '\n';
    }
}

int run_partition(const std::string& path, const std::string& method) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open instance '" + path + "'");
    const ProfileSubnetwork sub = read_instance(in);
    if (method == "bb" || method == "greedy") {
        const PartitionSet set = method == "bb" ? bb_partition(sub) : greedy_assign(sub);
        check_partition_set(sub, set);
        std::cout << "partitions: " << set.count() << '\n';
        print_partitions(set, sub.helpers);
    } else if (method == "brute") {
        std::cout << "partitions: " << brute_force_min_partitions(sub) << '\n';
    } else {
        std::cout << "partitions: " << flow_oracle(sub) << '\n';
    }
    return 0;
}

int run_topology(const ExperimentConfig& config, const std::string& out_path) {
    config.check();
    const TrialNetwork net = build_network(config, trial_seed(config.seed, 0));
    if (out_path == "-") {
        dump_topology(std::cout, net.layout, net.field, net.connectivity);
        return 0;
    }
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open '" + out_path + "' for writing");
    dump_topology(out, net.layout, net.field, net.connectivity);
    return 0;
}

int run_trace(const ExperimentConfig& config, Method method, const std::string& out_path) {
    config.check();
    const std::size_t t = cache_multiplicity(config.profiles, config.gamma);
    const std::uint64_t seed = trial_seed(config.seed, 0);
    const TrialNetwork net = build_network(config, seed);
    const DeliveryRun run = run_delivery(net.connectivity, net.profiles, t, method);
    Rng channel_rng = make_rng(seed, Stream::channels);
    verify_delivery(run, draw_channels(net.connectivity, channel_rng), net.profiles, t, seed);
    const auto plans = plan_transmissions(run.schedule, t);
    if (out_path == "-") {
        write_trace(std::cout, plans);
        return 0;
    }
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open '" + out_path + "' for writing");
    write_trace(out, plans);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coded caching delivery over partially connected helper networks"};
    app.require_subcommand(1);

    ExperimentConfig config;
    std::optional<double> density;
    std::optional<double> per_profile;
    OutputFormat format = OutputFormat::csv;
    std::string out_path = "-";
    std::string method_name = "both";

    const std::map<std::string, SweepVariable> sweep_map{{"L", SweepVariable::profiles},
                                                         {"r", SweepVariable::radius}};
    const std::map<std::string, OutputFormat> format_map{{"csv", OutputFormat::csv}, {"json", OutputFormat::json}};

    auto add_network_options = [&](CLI::App* cmd) {
        cmd->add_option("--helpers", config.helpers, "Number of helpers E")->capture_default_str();
        cmd->add_option("--profiles", config.profiles, "Number of cache profiles L")->capture_default_str();
        cmd->add_option("--gamma", config.gamma, "Cached fraction of the library")->capture_default_str();
        cmd->add_option("--radius", config.radius, "Helper transmission radius r")->capture_default_str();
        cmd->add_option("--user-radius", config.user_radius, "Radius of the user disk")->capture_default_str();
        auto* d = cmd->add_option("--density", density, "User density per unit area");
        auto* dp = cmd->add_option("--density-per-profile", per_profile, "User density divided by L");
        d->excludes(dp);
        cmd->add_option("--seed", config.seed, "Master seed")->capture_default_str();
    };

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo sum-DoF sweep");
    add_network_options(simulate);
    simulate->add_option("--sweep", config.sweep, "Sweep variable")
        ->transform(CLI::CheckedTransformer(sweep_map, CLI::ignore_case));
    simulate->add_option("--values", config.values, "Sweep values")->delimiter(',');
    simulate->add_option("--trials", config.trials, "Trials per sweep point")->capture_default_str();
    simulate->add_option("--method", method_name, "bb, greedy or both")
        ->check(CLI::IsMember({"bb", "greedy", "both"}))
        ->capture_default_str();
    simulate->add_flag("--verify-decode", config.verify, "Compose signals and check every user decodes");
    simulate->add_flag("--per-trial", config.keep_trials, "Include per-trial arrays in JSON output");
    simulate->add_option("--threads", config.threads, "Worker threads (0: hardware concurrency)");
    simulate->add_option("--format", format, "csv or json")->transform(CLI::CheckedTransformer(format_map));
    simulate->add_option("--out", out_path, "Output path, '-' for stdout")->capture_default_str();

    std::string instance;
    std::string partition_method = "bb";
    auto* partition = app.add_subcommand("partition", "Partition one dumped subnetwork instance");
    partition->add_option("--instance", instance, "Instance file")->required()->check(CLI::ExistingFile);
    partition->add_option("--method", partition_method, "bb, greedy, brute or flow")
        ->check(CLI::IsMember({"bb", "greedy", "brute", "flow"}))
        ->capture_default_str();

    auto* topology = app.add_subcommand("topology", "Dump one sampled topology");
    add_network_options(topology);
    topology->add_option("--out", out_path, "Output path, '-' for stdout");

    std::string trace_method = "bb";
    auto* trace = app.add_subcommand("trace", "Verify one trial and print its transmissions");
    add_network_options(trace);
    trace->add_option("--method", trace_method, "bb or greedy")->check(CLI::IsMember({"bb", "greedy"}));
    trace->add_option("--out", out_path, "Output path, '-' for stdout");

    CLI11_PARSE(app, argc, argv);

    if (per_profile) {
        config.density_mode = DensityMode::per_profile;
        config.density = *per_profile;
    } else if (density) {
        config.density = *density;
    }
    config.methods = method_name == "bb" ? MethodSelection::bb
                     : method_name == "greedy" ? MethodSelection::greedy
                                               : MethodSelection::both;

    try {
        if (*simulate) return run_simulate(config, format, out_path);
        if (*partition) return run_partition(instance, partition_method);
        if (*topology) return run_topology(config, out_path);
        if (*trace) return run_trace(config, trace_method == "bb" ? Method::bb : Method::greedy, out_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
