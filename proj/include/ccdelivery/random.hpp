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

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ccdelivery {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; a stable 64-bit mixing function.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stable hash of a sequence of 64-bit words. Identical on every platform.
constexpr std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) noexcept {
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (std::uint64_t w : words) h = mix64(h ^ mix64(w));
    return h;
}

/// Independent sub-streams of one trial seed, one per pipeline stage.
enum class Stream : std::uint64_t { users = 1, profiles = 2, channels = 3, symbols = 4 };

inline Rng make_rng(std::uint64_t seed, Stream stream) {
    return Rng(hash_words({seed, static_cast<std::uint64_t>(stream)}));
}

}  // namespace ccdelivery
