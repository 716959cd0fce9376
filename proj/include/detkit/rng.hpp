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

#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace detkit {

/// FNV-1a 64-bit hash; used to derive per-image RNG substreams and to
/// fingerprint config files in provenance records.
std::uint64_t fnv1a64(std::string_view bytes);

/// Deterministic, platform-independent random stream.
///
/// Core generator is xoshiro256** seeded through splitmix64, so every draw
/// is a pure function of the seed. Substreams for batch items are derived
/// by hashing (seed, label); draws in one substream are independent of how
/// many draws other substreams made, which keeps parallel batch output
/// identical to serial output.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Substream for one batch item, e.g. Rng::substream(seed, image_id).
    static Rng substream(std::uint64_t seed, std::string_view label);

    std::uint64_t next_u64();

    /// Uniform real in [0, 1) with 53-bit resolution.
    double uniform();

    /// Uniform integer in [0, n), rejection-sampled so it is exactly uniform.
    std::uint64_t uniform_below(std::uint64_t n);

    /// Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi);

    /// Hash identifying this stream; recorded in provenance files.
    std::uint64_t stream_id() const noexcept { return stream_id_; }

private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t stream_id_ = 0;
};

}  // namespace detkit
