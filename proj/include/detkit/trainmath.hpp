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

#include <map>
#include <string>
#include <vector>

#include "detkit/metrics.hpp"
#include "detkit/nettopo.hpp"

namespace detkit::trainmath {

struct HyperParams {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 5e-4;
    int epochs = 40;
};

void validate(const HyperParams& hp);

/// One named parameter tensor.
struct ParamTensor {
    std::string id;
    std::vector<double> values;
};

using ParamSet = std::vector<ParamTensor>;

/// Decay grouping: groups partition the full parameter set.
struct ParamGroup {
    std::vector<std::string> param_ids;
    bool decay_enabled = false;
};

struct AdamWState {
    std::map<std::string, std::vector<double>> m;
    std::map<std::string, std::vector<double>> v;
    long long t = 0;
};

/// One decoupled-weight-decay Adam step:
///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr * mhat / (sqrt(vhat) + eps)
/// plus, for decay-enabled groups, theta <- theta - lr * wd * theta using
/// the pre-step value. Throws on a non-finite gradient, naming the tensor.
void adamw_step(ParamSet& params, const ParamSet& grads, AdamWState& state,
                const HyperParams& hp, const std::vector<ParamGroup>& groups);

/// Decay grouping presets. `standard` decays weights and spares biases;
/// `inverted` decays biases and spares weights (an unconventional grouping
/// some training setups describe; provided so both are reproducible).
enum class DecayPolicy { standard, inverted };

std::vector<ParamGroup> build_param_groups(const nettopo::NetGraph& g,
                                           DecayPolicy policy);

/// Writes the epoch series as CSV
/// ("epoch,precision,recall,map50,map50_95", 6-decimal) and returns the
/// best epoch via metrics::select_best_epoch. Throws on duplicate epochs.
int run_training_log(const std::vector<metrics::EpochMetrics>& series,
                     const std::string& csv_path);

std::string epoch_series_to_csv(const std::vector<metrics::EpochMetrics>& series);
std::vector<metrics::EpochMetrics> parse_epoch_csv(const std::string& text);
std::vector<metrics::EpochMetrics> load_epoch_csv(const std::string& path);

}  // namespace detkit::trainmath
