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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ccdelivery/error.hpp"
#include "ccdelivery/random.hpp"

namespace ccdelivery {

/// Binomial coefficient; zero when k > n.
constexpr std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) result = result * (n - k + i) / i;
    return result;
}

struct CacheConfig {
    std::size_t profiles = 1;         // L
    double gamma = 0.0;               // cached fraction of the library
    std::uint64_t subpacketization_cap = UINT64_MAX;  // Q
    std::size_t library_size = 0;     // N; 0 means "as many files as users"
};

/// gamma*L as an integer, or MemorySharingUnsupported when it is not integral.
inline std::size_t cache_multiplicity(std::size_t profiles, double gamma) {
    const double t = gamma * static_cast<double>(profiles);
    const double rounded = std::round(t);
    if (std::abs(t - rounded) > 1e-9 || rounded < 0.0)
        throw MemorySharingUnsupported("gamma*L = " + std::to_string(t) +
                                       " is not an integer; memory sharing is unsupported");
    return static_cast<std::size_t>(rounded);
}

inline std::size_t cache_multiplicity(const CacheConfig& config) {
    return cache_multiplicity(config.profiles, config.gamma);
}

/// Lists every violated placement condition; an empty result means the
/// configuration is usable. Non-integral gamma*L throws instead.
inline std::vector<std::string> validate(const CacheConfig& config,
                                         std::optional<std::size_t> users = std::nullopt) {
    std::vector<std::string> violations;
    if (config.profiles == 0) violations.emplace_back("L must be at least 1");
    if (!(config.gamma > 0.0 && config.gamma < 1.0)) violations.emplace_back("gamma must lie in (0,1)");
    const std::size_t t = cache_multiplicity(config);
    if (t > config.profiles) {
        violations.emplace_back("gamma*L exceeds L");
    } else if (binomial(config.profiles, t) > config.subpacketization_cap) {
        violations.emplace_back("C(L, gamma*L) = " + std::to_string(binomial(config.profiles, t)) +
                                " exceeds the subpacketization cap Q = " +
                                std::to_string(config.subpacketization_cap));
    }
    if (users && config.library_size != 0 && config.library_size < *users)
        violations.emplace_back("library size N is smaller than the number of users K");
    return violations;
}

struct ProfileAssignment {
    std::vector<std::size_t> profile_of;             // user -> profile in [0, L)
    std::vector<std::vector<std::size_t>> members;   // profile -> users, ascending

    std::size_t profiles() const noexcept { return members.size(); }
    std::size_t users() const noexcept { return profile_of.size(); }
    std::size_t count(std::size_t profile) const { return members.at(profile).size(); }

    static ProfileAssignment from_profiles(std::vector<std::size_t> profile_of, std::size_t profiles) {
        ProfileAssignment a;
        a.members.resize(profiles);
        for (std::size_t k = 0; k < profile_of.size(); ++k) {
            if (profile_of[k] >= profiles) throw InvalidParameter("profile index out of range");
            a.members[profile_of[k]].push_back(k);
        }
        a.profile_of = std::move(profile_of);
        return a;
    }

    /// Keeps the listed users (indices into this assignment), renumbered in list order.
    ProfileAssignment restrict_to(const std::vector<std::size_t>& kept) const {
        std::vector<std::size_t> sub;
        sub.reserve(kept.size());
        for (std::size_t k : kept) sub.push_back(profile_of.at(k));
        return from_profiles(std::move(sub), profiles());
    }
};

/// Each user independently uniform over the L profiles.
inline ProfileAssignment assign_profiles(std::size_t users, std::size_t profiles, Rng& rng) {
    if (profiles == 0) throw InvalidParameter("assign_profiles: L must be at least 1");
    std::uniform_int_distribution<std::size_t> pick(0, profiles - 1);
    std::vector<std::size_t> profile_of(users);
    for (auto& p : profile_of) p = pick(rng);
    return ProfileAssignment::from_profiles(std::move(profile_of), profiles);
}

/// A size-t subset of the profiles labelling one subfile, kept sorted.
struct SubfileIndex {
    std::vector<std::size_t> members;

    bool contains(std::size_t profile) const {
        return std::binary_search(members.begin(), members.end(), profile);
    }

    friend auto operator<=>(const SubfileIndex&, const SubfileIndex&) = default;
};

/// Calls f(subset) for every k-subset of [0, n) in lexicographic order.
template <typename F>
void for_each_subset(std::size_t n, std::size_t k, F&& f) {
    if (k > n) return;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        f(static_cast<const std::vector<std::size_t>&>(idx));
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

inline std::vector<SubfileIndex> subfile_indices(std::size_t profiles, std::size_t t) {
    if (t > profiles) throw InvalidParameter("subfile_indices: t exceeds L");
    std::vector<SubfileIndex> out;
    out.reserve(binomial(profiles, t));
    for_each_subset(profiles, t, [&](const std::vector<std::size_t>& s) { out.push_back({s}); });
    return out;
}

/// Position of a sorted subset of [0, n) in lexicographic order.
inline std::uint64_t subset_rank(const SubfileIndex& s, std::size_t n) {
    std::uint64_t rank = 0;
    const std::size_t k = s.members.size();
    std::size_t prev = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t first = (i == 0) ? 0 : prev + 1;
        for (std::size_t v = first; v < s.members[i]; ++v) rank += binomial(n - 1 - v, k - 1 - i);
        prev = s.members[i];
    }
    return rank;
}

/// Profile `profile` stores W_S exactly when it belongs to S.
inline bool cached_by(std::size_t profile, const SubfileIndex& s) { return s.contains(profile); }

/// Subfile indices a user of `profile` must receive for its own file.
inline std::vector<SubfileIndex> needed_subfiles(std::size_t profile, std::size_t profiles,
                                                 std::size_t t) {
    if (profile >= profiles) throw InvalidParameter("needed_subfiles: profile out of range");
    std::vector<SubfileIndex> out;
    for (auto& s : subfile_indices(profiles, t))
        if (!cached_by(profile, s)) out.push_back(std::move(s));
    return out;
}

}  // namespace ccdelivery
