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
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "ccdelivery/cache_placement.hpp"
#include "ccdelivery/error.hpp"
#include "ccdelivery/topology.hpp"

namespace ccdelivery {

/// Users of one cache profile together with the helpers each can hear.
/// Helpers are 0-based; user labels are opaque ids kept in service order.
struct ProfileSubnetwork {
    std::size_t profile = 0;
    std::size_t helpers = 0;
    std::vector<std::size_t> users;
    std::vector<std::vector<std::size_t>> candidates;  // ascending helper indices per user

    std::size_t size() const noexcept { return users.size(); }

    void check() const {
        if (candidates.size() != users.size())
            throw InvariantViolation("subnetwork: one candidate list per user is required");
        for (std::size_t k = 0; k < users.size(); ++k) {
            if (candidates[k].empty())
                throw InvariantViolation("subnetwork: user " + std::to_string(users[k]) +
                                         " has no candidate helper");
            for (std::size_t h : candidates[k])
                if (h >= helpers) throw InvariantViolation("subnetwork: helper index out of range");
        }
    }
};

inline ProfileSubnetwork subnetwork(const Connectivity& conn, const ProfileAssignment& profiles,
                                    std::size_t profile) {
    ProfileSubnetwork s;
    s.profile = profile;
    s.helpers = conn.helpers();
    for (std::size_t k : profiles.members.at(profile)) {
        s.users.push_back(k);
        s.candidates.push_back(conn.candidates(k));
    }
    return s;
}

/// Users split by degree. `single[i]` stacks the users whose only helper
/// is i; `multi` lists the remaining users with their candidate helpers.
struct DegreeTables {
    std::size_t helpers = 0;
    std::vector<std::vector<std::size_t>> single;
    std::vector<std::size_t> multi;
    std::vector<std::vector<std::size_t>> multi_candidates;

    std::vector<std::size_t> single_heights() const {
        std::vector<std::size_t> h;
        h.reserve(single.size());
        for (const auto& column : single) h.push_back(column.size());
        return h;
    }
};

inline DegreeTables build_tables(const ProfileSubnetwork& subnet) {
    subnet.check();
    DegreeTables t;
    t.helpers = subnet.helpers;
    t.single.resize(subnet.helpers);
    for (std::size_t k = 0; k < subnet.size(); ++k) {
        if (subnet.candidates[k].size() == 1) {
            t.single[subnet.candidates[k].front()].push_back(subnet.users[k]);
        } else {
            t.multi.push_back(subnet.users[k]);
            t.multi_candidates.push_back(subnet.candidates[k]);
        }
    }
    return t;
}

/// Helper chosen for each multi-helper user, the resulting per-helper
/// loads and their maximum.
struct Assignment {
    std::vector<std::size_t> helper_of;
    std::vector<std::size_t> loads;
    std::size_t bound = 0;
};

struct Link {
    std::size_t helper = 0;
    std::size_t user = 0;

    friend bool operator==(const Link&, const Link&) = default;
};

/// One jointly servable set: links sorted by helper, helpers and users distinct.
using Partition = std::vector<Link>;

struct PartitionSet {
    std::vector<Partition> partitions;

    std::size_t count() const noexcept { return partitions.size(); }
};

/// Helper-ordered view of a partition with empty slots, e.g. 0-2-0-1.
inline std::vector<std::optional<std::size_t>> slots(const Partition& p, std::size_t helpers) {
    std::vector<std::optional<std::size_t>> out(helpers);
    for (const auto& link : p) out.at(link.helper) = link.user;
    return out;
}

/// Throws unless `set` is an exact cover of the subnetwork by matchings.
inline void check_partition_set(const ProfileSubnetwork& subnet, const PartitionSet& set) {
    std::vector<std::size_t> seen(subnet.size(), 0);
    for (const auto& p : set.partitions) {
        if (p.empty() || p.size() > subnet.helpers)
            throw InvariantViolation("partition size outside [1, E]");
        std::vector<bool> helper_used(subnet.helpers, false);
        for (const auto& link : p) {
            auto it = std::find(subnet.users.begin(), subnet.users.end(), link.user);
            if (it == subnet.users.end()) throw InvariantViolation("partition names an unknown user");
            const auto k = static_cast<std::size_t>(it - subnet.users.begin());
            if (link.helper >= subnet.helpers || helper_used[link.helper])
                throw InvariantViolation("partition reuses a helper");
            helper_used[link.helper] = true;
            const auto& c = subnet.candidates[k];
            if (!std::binary_search(c.begin(), c.end(), link.helper))
                throw InvariantViolation("partition uses a missing link");
            ++seen[k];
        }
    }
    for (std::size_t k = 0; k < seen.size(); ++k)
        if (seen[k] != 1)
            throw InvariantViolation("user " + std::to_string(subnet.users[k]) + " is covered " +
                                     std::to_string(seen[k]) + " times");
}

/// Builds partitions one at a time, giving each helper in index order the
/// first unplaced user it can reach.
inline PartitionSet greedy_assign(const ProfileSubnetwork& subnet) {
    subnet.check();
    PartitionSet set;
    std::vector<bool> placed(subnet.size(), false);
    std::size_t remaining = subnet.size();
    while (remaining > 0) {
        Partition p;
        for (std::size_t h = 0; h < subnet.helpers; ++h) {
            for (std::size_t k = 0; k < subnet.size(); ++k) {
                if (placed[k]) continue;
                const auto& c = subnet.candidates[k];
                if (!std::binary_search(c.begin(), c.end(), h)) continue;
                placed[k] = true;
                --remaining;
                p.push_back({h, subnet.users[k]});
                break;
            }
        }
        set.partitions.push_back(std::move(p));
    }
    return set;
}

struct SearchStats {
    std::size_t generated = 0;
    std::size_t expanded = 0;
};

/// Least-cost branch and bound over helper choices for the multi-helper
/// users, taken in table order. The bound of a partial choice is the
/// largest helper load. The search follows the cheapest child (lowest
/// helper on ties) until that child costs more than the cheapest open
/// state, then resumes from the deepest, earliest-generated cheapest one.
/// States with a load vector already seen at the same depth, or with a
/// bound no better than a complete choice, are not opened.
inline Assignment bb_assign(const DegreeTables& tables, SearchStats* stats = nullptr) {
    Assignment result;
    result.loads = tables.single_heights();
    result.loads.resize(tables.helpers, 0);
    const auto max_of = [](const std::vector<std::size_t>& v) {
        return v.empty() ? std::size_t{0} : *std::max_element(v.begin(), v.end());
    };

    const std::size_t depth_total = tables.multi.size();
    if (depth_total == 0) {
        result.bound = max_of(result.loads);
        return result;
    }

    struct Node {
        std::size_t parent;
        std::size_t helper;
        std::size_t depth;
        std::size_t bound;
        std::vector<std::size_t> loads;
    };
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

    std::vector<Node> nodes;
    nodes.push_back({kNone, kNone, 0, max_of(result.loads), result.loads});

    // Ordered by (bound, deepest first, earliest generated).
    using Key = std::tuple<std::size_t, std::size_t, std::size_t>;
    std::set<Key> open;
    const auto key_of = [&](std::size_t id) {
        return Key{nodes[id].bound, depth_total - nodes[id].depth, id};
    };
    std::set<std::vector<std::size_t>> seen;
    std::size_t incumbent = kNone;

    std::size_t current = 0;
    while (true) {
        const std::size_t depth = nodes[current].depth;
        std::size_t best_child = kNone;
        for (std::size_t h : tables.multi_candidates[depth]) {
            std::vector<std::size_t> loads = nodes[current].loads;
            ++loads[h];
            const std::size_t bound = std::max(nodes[current].bound, loads[h]);
            if (incumbent != kNone && bound >= incumbent) continue;

            std::vector<std::size_t> signature;
            signature.reserve(loads.size() + 1);
            signature.push_back(depth + 1);
            signature.insert(signature.end(), loads.begin(), loads.end());
            if (!seen.insert(std::move(signature)).second) continue;

            nodes.push_back({current, h, depth + 1, bound, std::move(loads)});
            const std::size_t id = nodes.size() - 1;
            if (stats) ++stats->generated;
            if (depth + 1 == depth_total) incumbent = bound;
            open.insert(key_of(id));
            if (best_child == kNone || bound < nodes[best_child].bound) best_child = id;
        }
        open.erase(key_of(current));
        if (stats) ++stats->expanded;

        if (open.empty()) throw InvariantViolation("bb_assign: search space exhausted");
        const std::size_t cheapest_open = std::get<0>(*open.begin());
        if (best_child == kNone || nodes[best_child].bound > cheapest_open)
            current = std::get<2>(*open.begin());
        else
            current = best_child;

        if (nodes[current].depth == depth_total) break;
    }

    result.helper_of.assign(depth_total, 0);
    for (std::size_t id = current; nodes[id].parent != kNone; id = nodes[id].parent)
        result.helper_of[nodes[id].depth - 1] = nodes[id].helper;
    result.loads = nodes[current].loads;
    result.bound = nodes[current].bound;
    return result;
}

/// Each helper serves its single-helper users first, then its assigned
/// multi-helper users in table order; partition g takes every helper's
/// g-th user.
inline PartitionSet partitions_from_assignment(const DegreeTables& tables, const Assignment& a) {
    if (a.helper_of.size() != tables.multi.size())
        throw InvariantViolation("assignment length differs from the multi-helper user count");
    std::vector<std::vector<std::size_t>> queue = tables.single;
    queue.resize(tables.helpers);
    for (std::size_t j = 0; j < tables.multi.size(); ++j) {
        const std::size_t h = a.helper_of[j];
        const auto& c = tables.multi_candidates[j];
        if (!std::binary_search(c.begin(), c.end(), h))
            throw InvariantViolation("assignment uses a helper outside the user's candidates");
        queue[h].push_back(tables.multi[j]);
    }
    std::size_t rounds = 0;
    for (std::size_t h = 0; h < tables.helpers; ++h) {
        if (a.loads.size() != tables.helpers || a.loads[h] != queue[h].size())
            throw InvariantViolation("assignment loads are inconsistent");
        rounds = std::max(rounds, queue[h].size());
    }
    if (rounds != a.bound) throw InvariantViolation("assignment bound is not the maximum load");

    PartitionSet set;
    set.partitions.resize(rounds);
    for (std::size_t g = 0; g < rounds; ++g)
        for (std::size_t h = 0; h < tables.helpers; ++h)
            if (g < queue[h].size()) set.partitions[g].push_back({h, queue[h][g]});
    return set;
}

/// Full pipeline for one subnetwork.
inline PartitionSet bb_partition(const ProfileSubnetwork& subnet, SearchStats* stats = nullptr) {
    const DegreeTables tables = build_tables(subnet);
    return partitions_from_assignment(tables, bb_assign(tables, stats));
}

/// ceil(C / E): no partition holds more than E users.
inline std::size_t lower_bound(const ProfileSubnetwork& subnet) {
    if (subnet.helpers == 0) throw InvalidParameter("lower_bound: no helpers");
    return (subnet.size() + subnet.helpers - 1) / subnet.helpers;
}

inline constexpr std::uint64_t kBruteForceLimit = 10'000'000;

/// Smallest achievable maximum helper load, by enumerating every helper
/// choice of every multi-helper user.
inline std::size_t brute_force_min_partitions(const ProfileSubnetwork& subnet) {
    const DegreeTables tables = build_tables(subnet);
    std::uint64_t product = 1;
    for (const auto& c : tables.multi_candidates) {
        product *= c.size();
        if (product > kBruteForceLimit)
            throw SizeGuardExceeded("brute force: more than 1e7 assignments");
    }
    std::vector<std::size_t> loads = tables.single_heights();
    std::size_t best = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> choice(tables.multi.size(), 0);
    const std::size_t n = tables.multi.size();
    // Odometer over all candidate combinations.
    for (std::size_t j = 0; j < n; ++j) ++loads[tables.multi_candidates[j][0]];
    while (true) {
        best = std::min(best, loads.empty() ? std::size_t{0} : *std::max_element(loads.begin(), loads.end()));
        std::size_t j = 0;
        for (; j < n; ++j) {
            const auto& c = tables.multi_candidates[j];
            --loads[c[choice[j]]];
            if (++choice[j] < c.size()) {
                ++loads[c[choice[j]]];
                break;
            }
            choice[j] = 0;
            ++loads[c[0]];
        }
        if (j == n) break;
    }
    return best;
}

/// True when every user can be matched to a helper with no helper used
/// more than `capacity` times (augmenting paths on the helper-replicated
/// bipartite graph).
inline bool capacitated_matching_exists(const ProfileSubnetwork& subnet, std::size_t capacity) {
    const std::size_t n = subnet.size();
    std::vector<std::vector<std::size_t>> holders(subnet.helpers);
    std::vector<std::size_t> visited(subnet.helpers, 0);
    std::size_t stamp = 0;

    auto augment = [&](auto&& self, std::size_t user) -> bool {
        for (std::size_t h : subnet.candidates[user]) {
            if (visited[h] == stamp) continue;
            visited[h] = stamp;
            if (holders[h].size() < capacity) {
                holders[h].push_back(user);
                return true;
            }
            for (auto& other : holders[h]) {
                if (self(self, other)) {
                    other = user;
                    return true;
                }
            }
        }
        return false;
    };

    for (std::size_t k = 0; k < n; ++k) {
        ++stamp;
        if (!augment(augment, k)) return false;
    }
    return true;
}

/// Minimum number of matchings covering the subnetwork, by binary search
/// on the per-helper capacity.
inline std::size_t flow_oracle(const ProfileSubnetwork& subnet) {
    subnet.check();
    if (subnet.size() == 0) return 0;
    std::size_t lo = lower_bound(subnet);
    std::size_t hi = subnet.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (capacitated_matching_exists(subnet, mid))
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

/// Instance text format: optional `helpers: E` line, then one line per
/// user, `user_id: h_i,h_j,...` with 1-based helpers in ascending order.
/// Blank lines and lines starting with '#' are ignored.
inline void write_instance(std::ostream& out, const ProfileSubnetwork& subnet) {
    out << "helpers: " << subnet.helpers << '\n';
    for (std::size_t k = 0; k < subnet.size(); ++k) {
        out << subnet.users[k] << ':';
        for (std::size_t i = 0; i < subnet.candidates[k].size(); ++i)
            out << (i == 0 ? " " : ",") << subnet.candidates[k][i] + 1;
        out << '\n';
    }
}

inline ProfileSubnetwork read_instance(std::istream& in) {
    ProfileSubnetwork s;
    std::optional<std::size_t> declared;
    std::size_t max_helper = 0;
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> rows;
    std::string line;
    std::size_t line_no = 0;
    const auto fail = [&](const std::string& why) {
        throw InvalidParameter("instance line " + std::to_string(line_no) + ": " + why);
    };
    const auto parse_count = [&](const std::string& text) -> std::size_t {
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(text, &pos);
        } catch (const std::exception&) {
            fail("expected a number, got '" + text + "'");
        }
        for (; pos < text.size(); ++pos)
            if (!std::isspace(static_cast<unsigned char>(text[pos]))) fail("trailing characters");
        return static_cast<std::size_t>(v);
    };

    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos) fail("missing ':'");
        const std::string head = line.substr(first, colon - first);
        const std::string tail = line.substr(colon + 1);
        if (head.rfind("helpers", 0) == 0) {
            declared = parse_count(tail);
            continue;
        }
        std::vector<std::size_t> helpers;
        std::stringstream fields(tail);
        std::string field;
        while (std::getline(fields, field, ',')) {
            const std::size_t h = parse_count(field);
            if (h == 0) fail("helper indices are 1-based");
            helpers.push_back(h - 1);
            max_helper = std::max(max_helper, h);
        }
        std::sort(helpers.begin(), helpers.end());
        if (std::adjacent_find(helpers.begin(), helpers.end()) != helpers.end()) fail("repeated helper");
        rows.emplace_back(parse_count(head), std::move(helpers));
    }
    std::sort(rows.begin(), rows.end());
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].first == rows[i - 1].first)
            throw InvalidParameter("instance: duplicate user " + std::to_string(rows[i].first));
    s.helpers = declared.value_or(max_helper);
    if (s.helpers < max_helper) throw InvalidParameter("instance: helper index exceeds declared count");
    for (auto& [user, helpers] : rows) {
        s.users.push_back(user);
        s.candidates.push_back(std::move(helpers));
    }
    s.check();
    return s;
}

}  // namespace ccdelivery
