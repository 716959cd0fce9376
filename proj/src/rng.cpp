/********************************************************************************
* Copyright 2026 The detkit Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*    http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
********************************************************************************/

#include "detkit/rng.hpp"

#include <stdexcept>

namespace detkit {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Rng::Rng(std::uint64_t seed) {
    stream_id_ = seed;
    std::uint64_t x = seed;
    for (auto& word : state_) {
        word = splitmix64(x);
    }
}

Rng Rng::substream(std::uint64_t seed, std::string_view label) {
    // Mix the label hash into the seed; splitmix64 expansion in the
    // constructor decorrelates nearby values.
    std::uint64_t derived = seed ^ (fnv1a64(label) * 0x9e3779b97f4a7c15ULL);
    Rng rng(derived);
    rng.stream_id_ = derived;
    return rng;
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;

    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);

    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
    if (n == 0) {
        throw std::invalid_argument("Rng::uniform_below: n must be > 0");
    }
    // Reject the biased low range so every residue is equally likely.
    const std::uint64_t threshold = (0 - n) % n;
    std::uint64_t r;
    do {
        r = next_u64();
    } while (r < threshold);
    return r % n;
}

int Rng::uniform_int(int lo, int hi) {
    if (lo > hi) {
        throw std::invalid_argument("Rng::uniform_int: lo > hi");
    }
    const std::uint64_t span =
        static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) -
                                   static_cast<std::int64_t>(lo)) + 1;
    return static_cast<int>(static_cast<std::int64_t>(lo) +
                            static_cast<std::int64_t>(uniform_below(span)));
}

}  // namespace detkit
