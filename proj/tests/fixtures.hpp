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

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "ccdelivery.hpp"

namespace ccdelivery::testing {

/// The 12-user, 4-helper same-profile subnetwork used as the running
/// example: users 1..12, helpers given 0-based.
inline ProfileSubnetwork example_subnetwork() {
    ProfileSubnetwork s;
    s.helpers = 4;
    s.users = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    s.candidates = {{0}, {0, 1}, {0, 1}, {1}, {1}, {0, 1, 2}, {2}, {2}, {1, 3}, {1, 3}, {3}, {3}};
    return s;
}

/// Random subnetwork: `helpers` in [1, max_helpers], users in [0, max_users],
/// each user linked to a uniformly random nonempty helper subset. Draws
/// are repeated until the brute-force enumeration guard is respected.
inline ProfileSubnetwork random_subnetwork(std::mt19937_64& rng, std::size_t max_helpers, std::size_t max_users) {
    std::uniform_int_distribution<std::size_t> helpers_dist(1, max_helpers);
    std::uniform_int_distribution<std::size_t> users_dist(0, max_users);
    while (true) {
        ProfileSubnetwork s;
        s.helpers = helpers_dist(rng);
        const std::size_t users = users_dist(rng);
        std::uniform_int_distribution<unsigned> mask_dist(1, (1u << s.helpers) - 1);
        std::uint64_t product = 1;
        for (std::size_t k = 0; k < users; ++k) {
            const unsigned mask = mask_dist(rng);
            std::vector<std::size_t> c;
            for (std::size_t i = 0; i < s.helpers; ++i)
                if (mask & (1u << i)) c.push_back(i);
            if (c.size() > 1) product *= c.size();
            s.users.push_back(k + 1);
            s.candidates.push_back(std::move(c));
        }
        if (product <= kBruteForceLimit) return s;
    }
}

/// Fully connected network with exactly `per_profile` users in every profile.
struct UniformNetwork {
    Connectivity connectivity;
    ProfileAssignment profiles;
};

inline UniformNetwork uniform_full_network(std::size_t helpers, std::size_t profiles, std::size_t per_profile) {
    const std::size_t users = profiles * per_profile;
    std::vector<std::vector<std::size_t>> cand(users);
    for (auto& c : cand)
        for (std::size_t i = 0; i < helpers; ++i) c.push_back(i);
    std::vector<std::size_t> profile_of(users);
    for (std::size_t k = 0; k < users; ++k) profile_of[k] = k % profiles;
    return {Connectivity::from_candidates(helpers, cand), ProfileAssignment::from_profiles(profile_of, profiles)};
}

}  // namespace ccdelivery::testing
