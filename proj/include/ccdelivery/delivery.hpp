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
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccdelivery/cache_placement.hpp"
#include "ccdelivery/error.hpp"
#include "ccdelivery/partitioner.hpp"
#include "ccdelivery/random.hpp"
#include "ccdelivery/topology.hpp"

namespace ccdelivery {

using Complex = std::complex<double>;

/// A partition as served in a round: users[k] is driven through helpers[k].
struct ServedPartition {
    std::vector<std::size_t> helpers;
    std::vector<std::size_t> users;
};

struct Round {
    std::vector<std::optional<ServedPartition>> by_profile;  // size L
    std::size_t empty_profiles = 0;                          // v(g)
};

struct RoundSchedule {
    std::size_t profiles = 0;
    std::vector<Round> rounds;

    std::size_t size() const noexcept { return rounds.size(); }
};

/// Round g serves the g-th partition of every profile that has one.
inline RoundSchedule build_schedule(const std::vector<PartitionSet>& per_profile) {
    RoundSchedule schedule;
    schedule.profiles = per_profile.size();
    std::size_t rounds = 0;
    for (const auto& set : per_profile) rounds = std::max(rounds, set.count());
    schedule.rounds.resize(rounds);
    for (std::size_t g = 0; g < rounds; ++g) {
        Round& round = schedule.rounds[g];
        round.by_profile.resize(schedule.profiles);
        for (std::size_t l = 0; l < schedule.profiles; ++l) {
            if (g >= per_profile[l].count()) {
                ++round.empty_profiles;
                continue;
            }
            ServedPartition served;
            Partition links = per_profile[l].partitions[g];
            std::sort(links.begin(), links.end(),
                      [](const Link& a, const Link& b) { return a.helper < b.helper; });
            for (const auto& link : links) {
                served.helpers.push_back(link.helper);
                served.users.push_back(link.user);
            }
            round.by_profile[l] = std::move(served);
        }
    }
    return schedule;
}

/// Number of multicast groups with at least one active profile, summed
/// over rounds: C(L, t+1) - C(v(g), t+1) per round.
inline std::uint64_t count_transmissions(const RoundSchedule& schedule, std::size_t t) {
    std::uint64_t total = 0;
    const std::uint64_t groups = binomial(schedule.profiles, t + 1);
    for (const auto& round : schedule.rounds) total += groups - binomial(round.empty_profiles, t + 1);
    return total;
}

/// Same count by walking every (t+1)-subset of profiles in every round.
inline std::uint64_t enumerate_transmissions(const RoundSchedule& schedule, std::size_t t) {
    std::uint64_t total = 0;
    for (const auto& round : schedule.rounds) {
        for_each_subset(schedule.profiles, t + 1, [&](const std::vector<std::size_t>& group) {
            for (std::size_t l : group) {
                if (round.by_profile[l]) {
                    ++total;
                    return;
                }
            }
        });
    }
    return total;
}

/// Delivery time in file slots: each transmission carries one subfile,
/// 1/C(L,t) of a file, to every user it serves.
inline double delivery_time(std::uint64_t transmissions, std::size_t profiles, std::size_t t) {
    return static_cast<double>(transmissions) / static_cast<double>(binomial(profiles, t));
}

/// K(1 - gamma) / T; empty when there are no users.
inline std::optional<double> sum_dof(std::size_t users, double gamma, double time) {
    if (users == 0) return std::nullopt;
    if (!(time > 0.0)) throw UndefinedMetric("sum-DoF undefined: zero delivery time with users present");
    return static_cast<double>(users) * (1.0 - gamma) / time;
}

/// Same metric from integer counts, K * C(L-1, t) / n_tx, with a single rounding.
inline std::optional<double> sum_dof(std::size_t users, std::size_t profiles, std::size_t t,
                                     std::uint64_t transmissions) {
    if (users == 0) return std::nullopt;
    if (transmissions == 0)
        throw UndefinedMetric("sum-DoF undefined: no transmissions with users present");
    return static_cast<double>(users) * static_cast<double>(binomial(profiles - 1, t)) /
           static_cast<double>(transmissions);
}

inline constexpr double kConditionLimit = 1e12;

/// Inverse of the channel between `users` (rows) and `helpers` (columns).
inline Eigen::MatrixXcd build_precoder(const ChannelMatrix& channel, const std::vector<std::size_t>& helpers,
                                       const std::vector<std::size_t>& users) {
    if (helpers.size() != users.size() || helpers.empty())
        throw InvalidParameter("build_precoder: helper and user vectors must have equal, nonzero length");
    const auto n = static_cast<Eigen::Index>(users.size());
    Eigen::MatrixXcd sub(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            sub(r, c) = channel(users[static_cast<std::size_t>(r)], helpers[static_cast<std::size_t>(c)]);

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(sub);
    const auto& sv = svd.singularValues();
    const double smallest = sv(n - 1);
    if (!(smallest > 0.0) || sv(0) / smallest > kConditionLimit)
        throw SingularMatrix("build_precoder: channel submatrix is numerically singular");
    return sub.partialPivLu().inverse();
}

/// Deterministic unit-variance complex symbols standing in for subfiles.
class SymbolBook {
public:
    explicit SymbolBook(std::uint64_t seed, std::size_t profiles) : seed_(seed), profiles_(profiles) {}

    Complex symbol(std::size_t file, const SubfileIndex& subfile) const {
        const std::uint64_t h = hash_words({seed_, file, subset_rank(subfile, profiles_)});
        const double u1 = (static_cast<double>(mix64(h) >> 11) + 0.5) * 0x1.0p-53;
        const double u2 = (static_cast<double>(mix64(h ^ 0x5bd1e995ULL) >> 11) + 0.5) * 0x1.0p-53;
        const double rho = std::sqrt(-std::log(u1));
        return std::polar(rho, 2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t seed_;
    std::size_t profiles_;
};

/// Worst-case demand: every user asks for a different file.
struct Demands {
    std::vector<std::size_t> file_of;

    static Demands distinct(std::size_t users) {
        Demands d;
        d.file_of.resize(users);
        for (std::size_t k = 0; k < users; ++k) d.file_of[k] = k;
        return d;
    }
};

/// One profile's share of a multicast transmission.
struct PlannedBlock {
    std::size_t profile = 0;
    ServedPartition partition;
    SubfileIndex subfile;  // group minus this profile
};

struct TransmissionPlan {
    std::size_t round = 0;
    std::vector<std::size_t> group;  // sorted profiles, size t+1
    std::vector<PlannedBlock> blocks;
};

inline std::optional<TransmissionPlan> plan_transmission(const RoundSchedule& schedule, std::size_t round,
                                                         const std::vector<std::size_t>& group) {
    TransmissionPlan plan;
    plan.round = round;
    plan.group = group;
    const Round& r = schedule.rounds.at(round);
    for (std::size_t l : group) {
        if (!r.by_profile.at(l)) continue;
        PlannedBlock block;
        block.profile = l;
        block.partition = *r.by_profile[l];
        for (std::size_t m : group)
            if (m != l) block.subfile.members.push_back(m);
        plan.blocks.push_back(std::move(block));
    }
    if (plan.blocks.empty()) return std::nullopt;
    return plan;
}

/// Every transmission of the schedule, round by round, groups in lexicographic order.
inline std::vector<TransmissionPlan> plan_transmissions(const RoundSchedule& schedule, std::size_t t) {
    std::vector<TransmissionPlan> plans;
    for (std::size_t g = 0; g < schedule.size(); ++g)
        for_each_subset(schedule.profiles, t + 1, [&](const std::vector<std::size_t>& group) {
            if (auto p = plan_transmission(schedule, g, group)) plans.push_back(std::move(*p));
        });
    return plans;
}

struct SignalBlock {
    PlannedBlock plan;
    Eigen::VectorXcd message;  // w: one subfile symbol per served user
    Eigen::VectorXcd padded;   // precoded message, zero at unassigned helpers
};

struct TransmissionRecord {
    std::size_t round = 0;
    std::vector<std::size_t> group;
    std::vector<SignalBlock> blocks;
    Eigen::VectorXcd signal;  // sum of padded blocks, length E
};

/// Zero-forcing superposition for one planned transmission.
inline TransmissionRecord compose_signal(const TransmissionPlan& plan, const ChannelMatrix& channel,
                                         const Demands& demands, const SymbolBook& symbols) {
    const auto helpers = channel.coefficients.cols();
    TransmissionRecord record;
    record.round = plan.round;
    record.group = plan.group;
    record.signal = Eigen::VectorXcd::Zero(helpers);
    for (const auto& block : plan.blocks) {
        SignalBlock out;
        out.plan = block;
        const auto& users = block.partition.users;
        out.message.resize(static_cast<Eigen::Index>(users.size()));
        for (std::size_t k = 0; k < users.size(); ++k)
            out.message(static_cast<Eigen::Index>(k)) = symbols.symbol(demands.file_of.at(users[k]), block.subfile);
        const Eigen::VectorXcd precoded = build_precoder(channel, block.partition.helpers, users) * out.message;
        out.padded = Eigen::VectorXcd::Zero(helpers);
        for (std::size_t m = 0; m < block.partition.helpers.size(); ++m)
            out.padded(static_cast<Eigen::Index>(block.partition.helpers[m])) = precoded(static_cast<Eigen::Index>(m));
        record.signal += out.padded;
        record.blocks.push_back(std::move(out));
    }
    return record;
}

/// Signal for group `group` in round `round`; empty when no profile of the group is active.
inline std::optional<TransmissionRecord> compose_signal(std::size_t round, const std::vector<std::size_t>& group,
                                                        const ChannelMatrix& channel,
                                                        const RoundSchedule& schedule, const Demands& demands,
                                                        const SymbolBook& symbols) {
    auto plan = plan_transmission(schedule, round, group);
    if (!plan) return std::nullopt;
    return compose_signal(*plan, channel, demands, symbols);
}

struct DecodeResidual {
    std::size_t user = 0;
    std::size_t profile = 0;
    double residual = 0.0;
};

inline constexpr double kDecodeTolerance = 1e-9;

/// Noiseless reception check: each served user removes the blocks of the
/// other profiles (whose subfiles it caches) and must be left with its
/// own subfile symbol.
inline std::vector<DecodeResidual> verify_decode(const TransmissionRecord& record, const ChannelMatrix& channel,
                                                 const Demands& demands, const SymbolBook& symbols) {
    std::vector<DecodeResidual> out;
    const auto describe = [&](std::size_t user) {
        std::string g;
        for (std::size_t l : record.group) g += (g.empty() ? "" : ",") + std::to_string(l + 1);
        return "user " + std::to_string(user + 1) + ", round " + std::to_string(record.round + 1) + ", group {" +
               g + "}";
    };
    for (const auto& block : record.blocks) {
        const std::size_t own = block.plan.profile;
        for (std::size_t user : block.plan.partition.users) {
            const Eigen::VectorXcd h = channel.coefficients.row(static_cast<Eigen::Index>(user)).transpose();
            Complex received = (h.transpose() * record.signal)(0);
            for (const auto& other : record.blocks) {
                if (other.plan.profile == own) continue;
                if (!cached_by(own, other.plan.subfile))
                    throw DecodeFailure("interference not in cache for " + describe(user));
                received -= (h.transpose() * other.padded)(0);
            }
            const Complex wanted = symbols.symbol(demands.file_of.at(user), block.plan.subfile);
            const double residual = std::abs(received - wanted);
            if (!(residual < kDecodeTolerance * (std::abs(wanted) + 1.0)))
                throw DecodeFailure("residual " + std::to_string(residual) + " for " + describe(user));
            out.push_back({user, own, residual});
        }
    }
    return out;
}

struct CoverageReport {
    std::vector<std::string> problems;

    bool ok() const noexcept { return problems.empty(); }
};

/// Audits that each of `users` users, whose profiles are given, receives
/// every subfile it lacks exactly once and nothing it already caches.
inline CoverageReport coverage_check(const std::vector<TransmissionPlan>& plans, const ProfileAssignment& profiles,
                                     std::size_t t) {
    CoverageReport report;
    const std::size_t L = profiles.profiles();
    std::vector<std::vector<SubfileIndex>> received(profiles.users());
    for (const auto& plan : plans) {
        for (const auto& block : plan.blocks) {
            for (std::size_t user : block.partition.users) {
                if (user >= profiles.users()) {
                    report.problems.push_back("unknown user " + std::to_string(user + 1));
                    continue;
                }
                if (profiles.profile_of[user] != block.profile)
                    report.problems.push_back("user " + std::to_string(user + 1) + " served in a foreign profile block");
                received[user].push_back(block.subfile);
            }
        }
    }
    for (std::size_t user = 0; user < profiles.users(); ++user) {
        auto got = received[user];
        std::sort(got.begin(), got.end());
        const auto need = needed_subfiles(profiles.profile_of[user], L, t);
        if (got != need)
            report.problems.push_back("user " + std::to_string(user + 1) + " received " + std::to_string(got.size()) +
                                      " subfiles, needs exactly the " + std::to_string(need.size()) +
                                      " it does not cache");
    }
    return report;
}

inline CoverageReport coverage_check(const RoundSchedule& schedule, const ProfileAssignment& profiles,
                                     std::size_t t) {
    return coverage_check(plan_transmissions(schedule, t), profiles, t);
}

/// `round,group,profiles_served,users_served,subfile_indices`, 1-based;
/// list fields are space separated, subfile members joined by ';'.
inline void write_trace(std::ostream& out, const std::vector<TransmissionPlan>& plans) {
    out << "round,group,profiles_served,users_served,subfile_indices\n";
    for (const auto& plan : plans) {
        out << plan.round + 1 << ',';
        for (std::size_t i = 0; i < plan.group.size(); ++i) out << (i ? " " : "") << plan.group[i] + 1;
        out << ',';
        std::size_t users = 0;
        for (std::size_t i = 0; i < plan.blocks.size(); ++i) {
            out << (i ? " " : "") << plan.blocks[i].profile + 1;
            users += plan.blocks[i].partition.users.size();
        }
        out << ',' << users << ',';
        for (std::size_t i = 0; i < plan.blocks.size(); ++i) {
            out << (i ? " {" : "{");
            const auto& m = plan.blocks[i].subfile.members;
            for (std::size_t j = 0; j < m.size(); ++j) out << (j ? ";" : "") << m[j] + 1;
            out << '}';
        }
        out << '\n';
    }
}

}  // namespace ccdelivery
