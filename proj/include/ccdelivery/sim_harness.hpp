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


#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccdelivery/cache_placement.hpp"
#include "ccdelivery/delivery.hpp"
#include "ccdelivery/error.hpp"
#include "ccdelivery/partitioner.hpp"
#include "ccdelivery/random.hpp"
#include "ccdelivery/topology.hpp"

namespace ccdelivery {

enum class Method { bb, greedy };
enum class MethodSelection { bb, greedy, both };
enum class SweepVariable { profiles, radius };
enum class DensityMode { absolute, per_profile };

inline const char* to_string(Method m) { return m == Method::bb ? "bb" : "greedy"; }
inline const char* to_string(SweepVariable v) { return v == SweepVariable::profiles ? "L" : "r"; }

struct ExperimentConfig {
    std::size_t helpers = 4;
    std::size_t profiles = 10;
    double gamma = 0.1;
    double radius = 1.2;
    double user_radius = 2.7;
    DensityMode density_mode = DensityMode::absolute;
    double density = 12.0 / (1.44 * std::numbers::pi);  // u, or u/L in per-profile mode
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    MethodSelection methods = MethodSelection::both;
    bool verify = false;
    SweepVariable sweep = SweepVariable::radius;
    std::vector<double> values;
    std::size_t threads = 0;  // 0: one per hardware thread
    bool keep_trials = false;

    double user_density() const {
        return density_mode == DensityMode::per_profile ? density * static_cast<double>(profiles) : density;
    }

    std::vector<Method> method_list() const {
        switch (methods) {
            case MethodSelection::bb: return {Method::bb};
            case MethodSelection::greedy: return {Method::greedy};
            default: return {Method::bb, Method::greedy};
        }
    }

    /// Copy with the sweep variable set to `value`.
    ExperimentConfig at(double value) const {
        ExperimentConfig c = *this;
        if (sweep == SweepVariable::profiles) {
            if (!(value >= 1.0) || std::floor(value) != value)
                throw InvalidParameter("sweep over L needs positive integer values");
            c.profiles = static_cast<std::size_t>(value);
        } else {
            c.radius = value;
        }
        return c;
    }

    void check() const {
        if (helpers == 0) throw InvalidParameter("helper count must be at least 1");
        if (profiles == 0) throw InvalidParameter("profile count must be at least 1");
        if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidParameter("gamma must lie in (0,1)");
        if (!(radius >= 0.0)) throw InvalidParameter("radius must be nonnegative");
        if (!(user_radius > 0.0) || !(density > 0.0))
            throw InvalidParameter("user radius and density must be positive");
        cache_multiplicity(profiles, gamma);
    }
};

struct MethodOutcome {
    Method method = Method::bb;
    std::uint64_t transmissions = 0;
    double time = 0.0;
    std::optional<double> sum_dof;
    std::vector<std::size_t> partitions_per_profile;
};

struct TrialResult {
    std::uint64_t seed = 0;
    std::size_t raw_users = 0;
    std::size_t users = 0;
    std::vector<MethodOutcome> outcomes;
    bool verified = false;

    const MethodOutcome* find(Method m) const {
        for (const auto& o : outcomes)
            if (o.method == m) return &o;
        return nullptr;
    }
};

struct DeliveryRun {
    std::vector<PartitionSet> partitions;
    RoundSchedule schedule;
    MethodOutcome outcome;
};

/// Partitions every profile subnetwork with `method` and schedules the
/// resulting rounds.
inline DeliveryRun run_delivery(const Connectivity& conn, const ProfileAssignment& profiles, std::size_t t,
                                Method method) {
    DeliveryRun run;
    run.outcome.method = method;
    for (std::size_t l = 0; l < profiles.profiles(); ++l) {
        const ProfileSubnetwork sub = subnetwork(conn, profiles, l);
        run.partitions.push_back(method == Method::bb ? bb_partition(sub) : greedy_assign(sub));
        run.outcome.partitions_per_profile.push_back(run.partitions.back().count());
    }
    run.schedule = build_schedule(run.partitions);
    run.outcome.transmissions = count_transmissions(run.schedule, t);
    run.outcome.time = delivery_time(run.outcome.transmissions, profiles.profiles(), t);
    run.outcome.sum_dof = sum_dof(profiles.users(), profiles.profiles(), t, run.outcome.transmissions);
    return run;
}

/// Composes every transmission, checks every served user decodes and
/// audits subfile coverage. Throws DecodeFailure or InvariantViolation.
inline void verify_delivery(const DeliveryRun& run, const ChannelMatrix& channel, const ProfileAssignment& profiles,
                            std::size_t t, std::uint64_t symbol_seed) {
    const auto plans = plan_transmissions(run.schedule, t);
    const Demands demands = Demands::distinct(profiles.users());
    const SymbolBook symbols(symbol_seed, profiles.profiles());
    for (const auto& plan : plans) verify_decode(compose_signal(plan, channel, demands, symbols), channel, demands, symbols);
    const CoverageReport coverage = coverage_check(plans, profiles, t);
    if (!coverage.ok()) throw InvariantViolation("coverage audit failed: " + coverage.problems.front());
}

struct TrialNetwork {
    HelperLayout layout;
    UserField field;
    Connectivity connectivity;
    ProfileAssignment profiles;
};

/// Topology and profile draw for one trial. Profiles are drawn for every
/// sampled user before pruning, so a fixed seed gives the same users and
/// profiles at every radius.
inline TrialNetwork build_network(const ExperimentConfig& config, std::uint64_t seed) {
    TrialNetwork net;
    net.layout = hex_layout(config.helpers);
    Rng user_rng = make_rng(seed, Stream::users);
    net.field = sample_users(config.user_density(), config.user_radius, user_rng);
    net.connectivity = connect(net.layout, net.field, config.radius);
    Rng profile_rng = make_rng(seed, Stream::profiles);
    net.profiles = assign_profiles(net.field.raw_count, config.profiles, profile_rng)
                       .restrict_to(net.connectivity.reachable_users());
    return net;
}

inline TrialResult run_trial(const ExperimentConfig& config, std::uint64_t seed) {
    config.check();
    const std::size_t t = cache_multiplicity(config.profiles, config.gamma);
    const TrialNetwork net = build_network(config, seed);

    TrialResult result;
    result.seed = seed;
    result.raw_users = net.field.raw_count;
    result.users = net.connectivity.users();

    std::optional<ChannelMatrix> channel;
    if (config.verify) {
        Rng channel_rng = make_rng(seed, Stream::channels);
        channel = draw_channels(net.connectivity, channel_rng);
    }
    for (Method m : config.method_list()) {
        DeliveryRun run = run_delivery(net.connectivity, net.profiles, t, m);
        if (channel) verify_delivery(run, *channel, net.profiles, t, hash_words({seed, 0x5359'4d42ULL}));
        result.outcomes.push_back(std::move(run.outcome));
    }
    result.verified = channel.has_value();

    const MethodOutcome* bb = result.find(Method::bb);
    const MethodOutcome* greedy = result.find(Method::greedy);
    if (bb && greedy && bb->transmissions > greedy->transmissions)
        throw InvariantViolation("branch and bound needed more transmissions than greedy (seed " +
                                 std::to_string(seed) + ")");
    return result;
}

/// Seed of trial `index`. It does not depend on the sweep value, so every
/// sweep point sees the same sequence of random networks.
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t index) {
    return hash_words({master, static_cast<std::uint64_t>(index)});
}

struct MethodSummary {
    Method method = Method::bb;
    double mean_sum_dof = 0.0;
    double std_sum_dof = 0.0;
    std::size_t samples = 0;  // trials with a defined metric
};

struct AggregateResult {
    SweepVariable sweep = SweepVariable::radius;
    double sweep_value = 0.0;
    std::vector<MethodSummary> methods;
    double mean_users = 0.0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    std::vector<TrialResult> per_trial;  // filled when keep_trials is set
};

/// Runs `count` trials of one configuration, in trial-index order
/// regardless of how many worker threads execute them.
inline std::vector<TrialResult> run_trials(const ExperimentConfig& config, std::size_t count) {
    std::vector<TrialResult> results(count);
    std::size_t workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, std::max<std::size_t>(count, 1));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                results[i] = run_trial(config, trial_seed(config.seed, i));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

inline AggregateResult aggregate(const ExperimentConfig& config, double sweep_value,
                                 std::vector<TrialResult> trials) {
    AggregateResult agg;
    agg.sweep = config.sweep;
    agg.sweep_value = sweep_value;
    agg.trials = trials.size();
    agg.seed = config.seed;
    double users = 0.0;
    for (const auto& t : trials) users += static_cast<double>(t.users);
    agg.mean_users = trials.empty() ? 0.0 : users / static_cast<double>(trials.size());

    for (Method m : config.method_list()) {
        MethodSummary s;
        s.method = m;
        double sum = 0.0;
        for (const auto& t : trials)
            if (const auto* o = t.find(m); o && o->sum_dof) {
                sum += *o->sum_dof;
                ++s.samples;
            }
        if (s.samples > 0) {
            s.mean_sum_dof = sum / static_cast<double>(s.samples);
            double sq = 0.0;
            for (const auto& t : trials)
                if (const auto* o = t.find(m); o && o->sum_dof) sq += (*o->sum_dof - s.mean_sum_dof) * (*o->sum_dof - s.mean_sum_dof);
            s.std_sum_dof = std::sqrt(sq / static_cast<double>(s.samples));
        }
        agg.methods.push_back(s);
    }
    if (config.keep_trials) agg.per_trial = std::move(trials);
    return agg;
}

inline std::vector<AggregateResult> run_sweep(const ExperimentConfig& config) {
    if (config.values.empty()) throw InvalidParameter("sweep needs at least one value");
    std::vector<AggregateResult> out;
    for (double value : config.values) {
        const ExperimentConfig point = config.at(value);
        point.check();
        out.push_back(aggregate(point, value, run_trials(point, point.trials)));
    }
    return out;
}

enum class OutputFormat { csv, json };

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline void write_csv(std::ostream& out, const std::vector<AggregateResult>& results) {
    out << "sweep_var,sweep_value,method,mean_sum_dof,std_sum_dof,mean_K,trials,seed\n";
    for (const auto& r : results)
        for (const auto& m : r.methods)
            out << to_string(r.sweep) << ',' << format_number(r.sweep_value) << ',' << to_string(m.method) << ','
                << format_number(m.mean_sum_dof) << ',' << format_number(m.std_sum_dof) << ','
                << format_number(r.mean_users) << ',' << r.trials << ',' << r.seed << '\n';
}

inline nlohmann::json to_json(const std::vector<AggregateResult>& results) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : results) {
        for (const auto& m : r.methods) {
            nlohmann::json row = {
                {"sweep_var", to_string(r.sweep)},
                {"sweep_value", r.sweep_value},
                {"method", to_string(m.method)},
                {"mean_sum_dof", m.mean_sum_dof},
                {"std_sum_dof", m.std_sum_dof},
                {"mean_K", r.mean_users},
                {"trials", r.trials},
                {"seed", r.seed},
            };
            if (!r.per_trial.empty()) {
                nlohmann::json dof = nlohmann::json::array(), users = nlohmann::json::array(),
                               seeds = nlohmann::json::array();
                for (const auto& t : r.per_trial) {
                    const auto* o = t.find(m.method);
                    dof.push_back(o && o->sum_dof ? nlohmann::json(*o->sum_dof) : nlohmann::json());
                    users.push_back(t.users);
                    seeds.push_back(t.seed);
                }
                row["per_trial_sum_dof"] = std::move(dof);
                row["per_trial_K"] = std::move(users);
                row["per_trial_seed"] = std::move(seeds);
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline void emit_results(std::ostream& out, const std::vector<AggregateResult>& results, OutputFormat format) {
    if (format == OutputFormat::csv)
        write_csv(out, results);
    else
        out << to_json(results).dump(2) << '\n';
}

inline void emit_results(const std::vector<AggregateResult>& results, OutputFormat format, const std::string& path) {
    if (results.empty()) throw InvalidParameter("emit_results: no results to write");
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open '" + path + "' for writing");
    emit_results(file, results, format);
    file.flush();
    if (!file) throw IoError("failed writing '" + path + "'");
}

}  // namespace ccdelivery
