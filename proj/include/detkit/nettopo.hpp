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

#include <optional>
#include <string>
#include <vector>

namespace detkit::nettopo {

struct TensorShape {
    int channels = 0;
    int height = 0;
    int width = 0;

    bool operator==(const TensorShape&) const = default;
};

enum class LayerKind { input, conv, elan, sppcspc, upsample, c3, head };
enum class Activation { silu, none };

/// One top-level layer-table row. Composite kinds (elan, sppcspc, c3, head)
/// expand into primitive sub-convolutions for shape and parameter math.
struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::conv;
    Activation activation = Activation::none;
    int filters = 0;
    int kernel = 0;
    int stride = 1;
    int repeat = 1;
    /// Published output size (square spatial), when the source table lists
    /// one; used for the shape discrepancy report.
    std::optional<int> published_spatial;
};

struct Node {
    LayerSpec spec;
    std::vector<int> inputs;  // node indices; composites concatenate them
};

struct NetGraph {
    TensorShape input_shape{3, 640, 640};
    std::vector<Node> nodes;
    int num_classes = 6;
    int anchors_per_scale = 3;

    int index_of(const std::string& name) const;  // -1 when absent
    const Node& node(const std::string& name) const;
};

/// Same-padding conv arithmetic: out = floor((in + 2p - k)/s) + 1 per axis,
/// with p = floor(k/2) unless overridden. Throws when an output dimension
/// would be non-positive.
TensorShape conv_out_shape(const TensorShape& in, int filters, int kernel,
                           int stride, int padding = -1);

/// Node indices in dependency order; throws on a cycle.
std::vector<int> topological_order(const NetGraph& g);

/// The 640x640 detection backbone+neck table this toolkit models, with the
/// published per-row output sizes attached for discrepancy checking.
NetGraph build_reference_graph(int num_classes = 6, int anchors_per_scale = 3);

struct ShapeDiscrepancy {
    std::string layer;
    TensorShape computed;
    int published_spatial = 0;
};

struct ShapeReport {
    std::vector<TensorShape> shapes;              // one per node
    std::vector<TensorShape> head_outputs;        // per detection scale
    std::vector<ShapeDiscrepancy> discrepancies;  // vs published table sizes
};

/// Propagates shapes through the graph. Published sizes that disagree with
/// the computed arithmetic are reported, never patched. Throws when concat
/// inputs disagree spatially, naming the layer.
ShapeReport propagate_shapes(const NetGraph& g, const TensorShape& input);

/// A single primitive convolution inside a (possibly composite) row.
struct SubConv {
    std::string name;
    int in_ch = 0;
    int out_ch = 0;
    int kernel = 1;
    int stride = 1;

    long long weight_count() const {
        return static_cast<long long>(kernel) * kernel * in_ch * out_ch;
    }
    long long param_count() const { return weight_count() + out_ch; }
};

/// The primitive convolutions of one node given its concatenated input
/// channel count. Pooling, upsampling and concatenation carry no params.
std::vector<SubConv> expand_node(const NetGraph& g, int node_index,
                                 int in_channels);

struct ParamCount {
    std::vector<long long> per_node;
    long long total = 0;
};

ParamCount count_parameters(const NetGraph& g);

/// Named parameter tensors ("<node>.<sub>.weight" / ".bias"), in graph
/// order; the unit the optimizer's grouping policy partitions.
struct ParamInfo {
    std::string id;
    long long count = 0;
    bool is_bias = false;
};

std::vector<ParamInfo> list_parameters(const NetGraph& g);

/// Sigmoid-weighted linear unit: x / (1 + exp(-x)).
double silu(double x);

/// Dense CHW tensor for desk-scale numeric checks.
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    Tensor() = default;
    Tensor(int c, int h, int w)
        : channels(c), height(h), width(w),
          values(static_cast<std::size_t>(c) * h * w, 0.0) {}

    double at(int c, int y, int x) const {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double& at(int c, int y, int x) {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

struct ConvKernel {
    int out_ch = 0;
    int in_ch = 0;
    int kernel = 1;   // square
    int stride = 1;
    int padding = 0;
    std::vector<double> weights;  // (out, in, ky, kx)
    std::vector<double> bias;     // per out channel

    ConvKernel() = default;
    ConvKernel(int out, int in, int k, int s, int p)
        : out_ch(out), in_ch(in), kernel(k), stride(s), padding(p),
          weights(static_cast<std::size_t>(out) * in * k * k, 0.0),
          bias(static_cast<std::size_t>(out), 0.0) {}

    double w(int o, int i, int ky, int kx) const {
        return weights[((static_cast<std::size_t>(o) * in_ch + i) * kernel + ky) *
                           kernel + kx];
    }
    double& w(int o, int i, int ky, int kx) {
        return weights[((static_cast<std::size_t>(o) * in_ch + i) * kernel + ky) *
                           kernel + kx];
    }
};

/// Direct spatial convolution with zero padding, then bias, then optional
/// SiLU. Accumulation runs over input channel, kernel row, kernel column in
/// that order. Throws on channel mismatch or non-positive output size.
Tensor conv2d_forward(const Tensor& input, const ConvKernel& k,
                      bool silu_activation = false);

/// Collapses a 3x3 (stride 1, pad 1) + 1x1 + optional identity branch sum
/// into one 3x3 kernel: the 1x1 taps and the identity land on the center
/// tap, biases add. forward(fused) == forward(w3) + forward(w1) [+ input].
ConvKernel repconv_fuse(const ConvKernel& w3, const ConvKernel& w1,
                        bool identity);

/// Width/depth scaling: repeats scale as max(1, round(repeat * depth));
/// filters scale as round(filters * width) raised to the next multiple of 8
/// (floor 8). Channel counts downstream of concatenations follow from
/// re-propagation.
NetGraph compound_scale(const NetGraph& g, double depth_factor,
                        double width_factor);

/// Text table mirroring the layer-table columns plus computed output sizes
/// and any discrepancy markers.
std::string render_layer_table(const NetGraph& g, const ShapeReport& report,
                               const ParamCount& params);

/// DOT-format export for visualization.
std::string to_dot(const NetGraph& g);

}  // namespace detkit::nettopo
