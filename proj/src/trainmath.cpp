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

#include "detkit/trainmath.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace detkit::trainmath {

void validate(const HyperParams& hp) {
    if (hp.learning_rate <= 0.0) {
        throw std::invalid_argument("learning_rate must be > 0");
    }
    if (hp.beta1 < 0.0 || hp.beta1 >= 1.0 || hp.beta2 < 0.0 || hp.beta2 >= 1.0) {
        throw std::invalid_argument("betas must be in [0, 1)");
    }
    if (hp.epsilon <= 0.0) {
        throw std::invalid_argument("epsilon must be > 0");
    }
    if (hp.weight_decay < 0.0) {
        throw std::invalid_argument("weight_decay must be >= 0");
    }
    if (hp.epochs < 1) {
        throw std::invalid_argument("epochs must be >= 1");
    }
}

void adamw_step(ParamSet& params, const ParamSet& grads, AdamWState& state,
                const HyperParams& hp, const std::vector<ParamGroup>& groups) {
    validate(hp);
    if (params.size() != grads.size()) {
        throw std::invalid_argument("adamw_step: params/grads size mismatch");
    }

    // Groups must partition the parameter set.
    std::map<std::string, bool> decay_by_id;
    for (const auto& group : groups) {
        for (const auto& id : group.param_ids) {
            if (!decay_by_id.emplace(id, group.decay_enabled).second) {
                throw std::invalid_argument(
                    "adamw_step: parameter '" + id + "' appears in two groups");
            }
        }
    }
    for (const auto& p : params) {
        if (decay_by_id.find(p.id) == decay_by_id.end()) {
            throw std::invalid_argument(
                "adamw_step: parameter '" + p.id + "' missing from groups");
        }
    }

    state.t += 1;
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        ParamTensor& p = params[pi];
        const ParamTensor& g = grads[pi];
        if (g.id != p.id || g.values.size() != p.values.size()) {
            throw std::invalid_argument(
                "adamw_step: gradient mismatch for parameter '" + p.id + "'");
        }

        auto& m = state.m[p.id];
        auto& v = state.v[p.id];
        m.resize(p.values.size(), 0.0);
        v.resize(p.values.size(), 0.0);

        const bool decay = decay_by_id.at(p.id);

        for (std::size_t i = 0; i < p.values.size(); ++i) {
            const double grad = g.values[i];
            if (!std::isfinite(grad)) {
                throw std::runtime_error("adamw_step: non-finite gradient in '" +
                                         p.id + "' at index " +
                                         std::to_string(i));
            }
            m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * grad;
            v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * grad * grad;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;

            const double before = p.values[i];
            double after =
                before - hp.learning_rate * mhat / (std::sqrt(vhat) + hp.epsilon);
            if (decay) {
                // Decoupled decay uses the pre-step value.
                after -= hp.learning_rate * hp.weight_decay * before;
            }
            p.values[i] = after;
        }
    }
}

std::vector<ParamGroup> build_param_groups(const nettopo::NetGraph& g,
                                           DecayPolicy policy) {
    ParamGroup weights, biases;
    weights.decay_enabled = policy == DecayPolicy::standard;
    biases.decay_enabled = policy == DecayPolicy::inverted;

    for (const auto& info : nettopo::list_parameters(g)) {
        (info.is_bias ? biases : weights).param_ids.push_back(info.id);
    }
    return {weights, biases};
}

std::string epoch_series_to_csv(
    const std::vector<metrics::EpochMetrics>& series) {
    std::string out = "epoch,precision,recall,map50,map50_95\n";
    char buf[160];
    for (const auto& em : series) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f\n", em.epoch,
                      em.precision, em.recall, em.map50, em.map50_95);
        out += buf;
    }
    return out;
}

std::vector<metrics::EpochMetrics> parse_epoch_csv(const std::string& text) {
    std::vector<metrics::EpochMetrics> series;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        if (line_no == 1) {
            continue;  // header
        }
        metrics::EpochMetrics em;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &em.epoch,
                        &em.precision, &em.recall, &em.map50,
                        &em.map50_95) != 5) {
            throw std::runtime_error("epoch CSV line " +
                                     std::to_string(line_no) +
                                     ": expected 5 comma-separated fields");
        }
        series.push_back(em);
    }
    return series;
}

std::vector<metrics::EpochMetrics> load_epoch_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open epoch CSV '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_epoch_csv(ss.str());
}

int run_training_log(const std::vector<metrics::EpochMetrics>& series,
                     const std::string& csv_path) {
    std::set<int> epochs;
    for (const auto& em : series) {
        if (!epochs.insert(em.epoch).second) {
            throw std::invalid_argument("run_training_log: duplicate epoch " +
                                        std::to_string(em.epoch));
        }
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in01(em.precision) || !in01(em.recall) || !in01(em.map50) ||
            !in01(em.map50_95)) {
            throw std::invalid_argument(
                "run_training_log: metrics of epoch " +
                std::to_string(em.epoch) + " must be in [0, 1]");
        }
    }

    std::ofstream out(csv_path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write epoch CSV '" + csv_path + "'");
    }
    out << epoch_series_to_csv(series);
    out.close();

    return metrics::select_best_epoch(series);
}

}  // namespace detkit::trainmath
