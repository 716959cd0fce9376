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

#include "detkit/nettopo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace detkit::nettopo {

namespace {

// Canonical block internals. Only shape and parameter behavior is asserted
// downstream, so these are kept in one place and easy to adjust.
constexpr int kElanChainLength = 4;       // chained 3x3 convs per block
constexpr int kSppPoolKernels[] = {5, 9, 13};

[[noreturn]] void fail(const std::string& msg) {
    throw std::runtime_error(msg);
}

}  // namespace

int NetGraph::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].spec.name == name) return static_cast<int>(i);
    }
    return -1;
}

const Node& NetGraph::node(const std::string& name) const {
    const int idx = index_of(name);
    if (idx < 0) fail("no layer named '" + name + "'");
    return nodes[static_cast<std::size_t>(idx)];
}

TensorShape conv_out_shape(const TensorShape& in, int filters, int kernel,
                           int stride, int padding) {
    if (kernel < 1 || stride < 1) {
        throw std::invalid_argument("conv_out_shape: kernel and stride must be >= 1");
    }
    const int p = padding >= 0 ? padding : kernel / 2;
    const int oh = (in.height + 2 * p - kernel) / stride + 1;
    const int ow = (in.width + 2 * p - kernel) / stride + 1;
    if (oh < 1 || ow < 1) {
        throw std::invalid_argument("conv_out_shape: non-positive output size");
    }
    return {filters, oh, ow};
}

std::vector<int> topological_order(const NetGraph& g) {
    const int n = static_cast<int>(g.nodes.size());
    std::vector<int> indegree(n, 0);
    std::vector<std::vector<int>> successors(n);
    for (int i = 0; i < n; ++i) {
        for (const int in : g.nodes[i].inputs) {
            if (in < 0 || in >= n) fail("edge out of range at node " +
                                        g.nodes[i].spec.name);
            successors[in].push_back(i);
            indegree[i]++;
        }
    }
    std::vector<int> ready, order;
    for (int i = 0; i < n; ++i) {
        if (indegree[i] == 0) ready.push_back(i);
    }
    while (!ready.empty()) {
        const int i = ready.back();
        ready.pop_back();
        order.push_back(i);
        for (const int s : successors[i]) {
            if (--indegree[s] == 0) ready.push_back(s);
        }
    }
    if (static_cast<int>(order.size()) != n) fail("graph has a cycle");
    std::sort(order.begin(), order.end());  // builder emits dependency order
    for (int i = 0; i < n; ++i) {
        for (const int in : g.nodes[i].inputs) {
            if (in >= i) fail("graph is not in dependency order");
        }
    }
    return order;
}

NetGraph build_reference_graph(int num_classes, int anchors_per_scale) {
    NetGraph g;
    g.num_classes = num_classes;
    g.anchors_per_scale = anchors_per_scale;
    g.input_shape = {3, 640, 640};

    auto add = [&g](LayerSpec spec, std::vector<int> inputs) {
        g.nodes.push_back({std::move(spec), std::move(inputs)});
        return static_cast<int>(g.nodes.size()) - 1;
    };
    auto conv = [](const char* name, int filters, int kernel, int stride,
                   int table) {
        return LayerSpec{name, LayerKind::conv, Activation::silu,
                         filters, kernel, stride, 1, table};
    };
    auto block = [](const char* name, LayerKind kind, int filters, int table) {
        return LayerSpec{name, kind, Activation::silu, filters, 0, 1, 1, table};
    };

    const int image = add({"Image", LayerKind::input, Activation::none,
                           0, 0, 1, 1, 640}, {});
    const int conv0 = add(conv("Conv0", 32, 3, 2, 320), {image});
    const int conv1 = add(conv("Conv1", 64, 3, 2, 160), {conv0});
    const int conv2 = add(conv("Conv2", 128, 3, 2, 80), {conv1});
    const int conv3 = add(conv("Conv3", 256, 3, 2, 40), {conv2});
    const int elan0 = add(block("ELAN0", LayerKind::elan, 256, 40), {conv3});
    const int conv4 = add(conv("Conv4", 512, 3, 2, 20), {elan0});
    const int elan1 = add(block("ELAN1", LayerKind::elan, 512, 20), {conv4});
    const int conv5 = add(conv("Conv5", 1024, 3, 2, 10), {elan1});
    const int elan2 = add(block("ELAN2", LayerKind::elan, 1024, 10), {conv5});
    const int spp = add(block("SPPCSPC", LayerKind::sppcspc, 1024, 10), {elan2});
    // Published size for this 1x1 row (20x20) disagrees with its own conv
    // arithmetic; propagate_shapes reports that rather than patching it.
    const int conv6 = add(conv("Conv6", 512, 1, 1, 20), {spp});
    const int up0 = add({"Upsample0", LayerKind::upsample, Activation::none,
                         0, 0, 1, 1, 20}, {conv6});
    const int c3_0 = add(block("C3_0", LayerKind::c3, 256, 20), {up0, elan1});
    const int up1 = add({"Upsample1", LayerKind::upsample, Activation::none,
                         0, 0, 1, 1, 40}, {c3_0});
    const int c3_1 = add(block("C3_1", LayerKind::c3, 128, 40), {up1, elan0});
    add({"Head", LayerKind::head, Activation::silu, 0, 0, 1, 1, std::nullopt},
        {c3_1, c3_0, conv6});

    return g;
}

std::vector<SubConv> expand_node(const NetGraph& g, int node_index,
                                 int in_channels) {
    const Node& node = g.nodes.at(static_cast<std::size_t>(node_index));
    const LayerSpec& spec = node.spec;
    std::vector<SubConv> convs;

    switch (spec.kind) {
        case LayerKind::input:
        case LayerKind::upsample:
        case LayerKind::head:  // handled per scale by the caller
            break;

        case LayerKind::conv: {
            // repeat > 1 appends stride-1 convs so spatial math is applied
            // exactly once per row.
            convs.push_back({spec.name + ".conv0", in_channels, spec.filters,
                             spec.kernel, spec.stride});
            for (int r = 1; r < spec.repeat; ++r) {
                convs.push_back({spec.name + ".conv" + std::to_string(r),
                                 spec.filters, spec.filters, spec.kernel, 1});
            }
            break;
        }

        case LayerKind::elan: {
            // Two 1x1 entry branches, a chain of 3x3 convs, concat of the
            // entries and every second chain output, 1x1 transition.
            int cin = in_channels;
            const int e = spec.filters / 2;
            for (int r = 0; r < spec.repeat; ++r) {
                const std::string base =
                    spec.repeat > 1 ? spec.name + ".rep" + std::to_string(r)
                                    : spec.name;
                convs.push_back({base + ".entry_a", cin, e, 1, 1});
                convs.push_back({base + ".entry_b", cin, e, 1, 1});
                for (int i = 0; i < kElanChainLength; ++i) {
                    convs.push_back(
                        {base + ".chain" + std::to_string(i), e, e, 3, 1});
                }
                const int concat_ch = e * (2 + kElanChainLength / 2);
                convs.push_back({base + ".transition", concat_ch, spec.filters,
                                 1, 1});
                cin = spec.filters;
            }
            break;
        }

        case LayerKind::sppcspc: {
            // CSP split around a max-pool pyramid (kernels 5/9/13).
            const int c = spec.filters / 2;
            convs.push_back({spec.name + ".cv1", in_channels, c, 1, 1});
            convs.push_back({spec.name + ".cv2", in_channels, c, 1, 1});
            convs.push_back({spec.name + ".cv3", c, c, 3, 1});
            convs.push_back({spec.name + ".cv4", c, c, 1, 1});
            const int pools = static_cast<int>(std::size(kSppPoolKernels));
            convs.push_back({spec.name + ".cv5", c * (1 + pools), c, 1, 1});
            convs.push_back({spec.name + ".cv6", c, c, 3, 1});
            convs.push_back({spec.name + ".cv7", 2 * c, spec.filters, 1, 1});
            break;
        }

        case LayerKind::c3: {
            // CSP bottleneck stack; `repeat` is the bottleneck count.
            const int c = spec.filters / 2;
            convs.push_back({spec.name + ".cv1", in_channels, c, 1, 1});
            convs.push_back({spec.name + ".cv2", in_channels, c, 1, 1});
            for (int i = 0; i < spec.repeat; ++i) {
                const std::string base = spec.name + ".b" + std::to_string(i);
                convs.push_back({base + ".cv1", c, c, 1, 1});
                convs.push_back({base + ".cv2", c, c, 3, 1});
            }
            convs.push_back({spec.name + ".cv3", 2 * c, spec.filters, 1, 1});
            break;
        }
    }
    return convs;
}

ShapeReport propagate_shapes(const NetGraph& g, const TensorShape& input) {
    ShapeReport report;
    report.shapes.assign(g.nodes.size(), TensorShape{});
    topological_order(g);  // validates the edge structure

    const int head_channels = g.anchors_per_scale * (5 + g.num_classes);

    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const Node& node = g.nodes[i];
        const LayerSpec& spec = node.spec;

        // Concatenated input: channels add, spatial must agree. Head inputs
        // are separate scales, not a concatenation.
        TensorShape in{};
        if (!node.inputs.empty() && spec.kind != LayerKind::head) {
            in = report.shapes[static_cast<std::size_t>(node.inputs[0])];
            for (std::size_t k = 1; k < node.inputs.size(); ++k) {
                const TensorShape& other =
                    report.shapes[static_cast<std::size_t>(node.inputs[k])];
                if (other.height != in.height || other.width != in.width) {
                    fail("concat inputs of '" + spec.name +
                         "' differ in spatial size");
                }
                in.channels += other.channels;
            }
        }

        TensorShape out{};
        switch (spec.kind) {
            case LayerKind::input:
                out = input;
                break;
            case LayerKind::conv:
                out = conv_out_shape(in, spec.filters, spec.kernel, spec.stride);
                break;
            case LayerKind::upsample:
                out = {in.channels, in.height * 2, in.width * 2};
                break;
            case LayerKind::elan:
            case LayerKind::sppcspc:
            case LayerKind::c3:
                out = {spec.filters, in.height, in.width};
                break;
            case LayerKind::head: {
                for (const int src : node.inputs) {
                    const TensorShape& scale =
                        report.shapes[static_cast<std::size_t>(src)];
                    report.head_outputs.push_back(
                        {head_channels, scale.height, scale.width});
                }
                out = report.head_outputs.empty()
                          ? TensorShape{head_channels, 0, 0}
                          : report.head_outputs.front();
                break;
            }
        }
        report.shapes[i] = out;

        if (spec.published_spatial &&
            (out.height != *spec.published_spatial ||
             out.width != *spec.published_spatial)) {
            report.discrepancies.push_back({spec.name, out, *spec.published_spatial});
        }
    }
    return report;
}

ParamCount count_parameters(const NetGraph& g) {
    const ShapeReport report = propagate_shapes(g, g.input_shape);
    const int head_channels = g.anchors_per_scale * (5 + g.num_classes);

    ParamCount out;
    out.per_node.assign(g.nodes.size(), 0);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const Node& node = g.nodes[i];
        long long count = 0;
        if (node.spec.kind == LayerKind::head) {
            for (const int src : node.inputs) {
                const int cin =
                    report.shapes[static_cast<std::size_t>(src)].channels;
                count += static_cast<long long>(cin) * head_channels +
                         head_channels;
            }
        } else {
            int cin = 0;
            for (const int src : node.inputs) {
                cin += report.shapes[static_cast<std::size_t>(src)].channels;
            }
            for (const SubConv& sc : expand_node(g, static_cast<int>(i), cin)) {
                count += sc.param_count();
            }
        }
        out.per_node[i] = count;
        out.total += count;
    }
    return out;
}

std::vector<ParamInfo> list_parameters(const NetGraph& g) {
    const ShapeReport report = propagate_shapes(g, g.input_shape);
    const int head_channels = g.anchors_per_scale * (5 + g.num_classes);

    std::vector<ParamInfo> params;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const Node& node = g.nodes[i];
        auto add_conv = [&params](const std::string& base, long long weights,
                                  long long biases) {
            params.push_back({base + ".weight", weights, false});
            params.push_back({base + ".bias", biases, true});
        };
        if (node.spec.kind == LayerKind::head) {
            for (std::size_t s = 0; s < node.inputs.size(); ++s) {
                const int cin =
                    report.shapes[static_cast<std::size_t>(node.inputs[s])]
                        .channels;
                add_conv(node.spec.name + ".scale" + std::to_string(s),
                         static_cast<long long>(cin) * head_channels,
                         head_channels);
            }
        } else {
            int cin = 0;
            for (const int src : node.inputs) {
                cin += report.shapes[static_cast<std::size_t>(src)].channels;
            }
            for (const SubConv& sc : expand_node(g, static_cast<int>(i), cin)) {
                add_conv(sc.name, sc.weight_count(), sc.out_ch);
            }
        }
    }
    return params;
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

Tensor conv2d_forward(const Tensor& input, const ConvKernel& k,
                      bool silu_activation) {
    if (input.channels != k.in_ch) {
        throw std::invalid_argument("conv2d_forward: channel mismatch");
    }
    const int oh = (input.height + 2 * k.padding - k.kernel) / k.stride + 1;
    const int ow = (input.width + 2 * k.padding - k.kernel) / k.stride + 1;
    if (oh < 1 || ow < 1) {
        throw std::invalid_argument("conv2d_forward: non-positive output size");
    }

    Tensor out(k.out_ch, oh, ow);
    for (int o = 0; o < k.out_ch; ++o) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (int i = 0; i < k.in_ch; ++i) {
                    for (int ky = 0; ky < k.kernel; ++ky) {
                        for (int kx = 0; kx < k.kernel; ++kx) {
                            const int sy = y * k.stride + ky - k.padding;
                            const int sx = x * k.stride + kx - k.padding;
                            if (sy < 0 || sy >= input.height || sx < 0 ||
                                sx >= input.width) {
                                continue;  // zero padding
                            }
                            acc += k.w(o, i, ky, kx) * input.at(i, sy, sx);
                        }
                    }
                }
                acc += k.bias[static_cast<std::size_t>(o)];
                out.at(o, y, x) = silu_activation ? silu(acc) : acc;
            }
        }
    }
    return out;
}

ConvKernel repconv_fuse(const ConvKernel& w3, const ConvKernel& w1,
                        bool identity) {
    if (w3.kernel != 3 || w3.stride != 1 || w3.padding != 1) {
        throw std::invalid_argument(
            "repconv_fuse: main branch must be 3x3, stride 1, padding 1");
    }
    if (w1.kernel != 1 || w1.stride != 1 || w1.padding != 0) {
        throw std::invalid_argument(
            "repconv_fuse: secondary branch must be 1x1, stride 1, padding 0");
    }
    if (w1.in_ch != w3.in_ch || w1.out_ch != w3.out_ch) {
        throw std::invalid_argument("repconv_fuse: branch channel mismatch");
    }
    if (identity && w3.in_ch != w3.out_ch) {
        throw std::invalid_argument(
            "repconv_fuse: identity branch requires in_ch == out_ch");
    }

    ConvKernel fused = w3;
    for (int o = 0; o < fused.out_ch; ++o) {
        for (int i = 0; i < fused.in_ch; ++i) {
            fused.w(o, i, 1, 1) += w1.w(o, i, 0, 0);
            if (identity && o == i) {
                fused.w(o, i, 1, 1) += 1.0;
            }
        }
        fused.bias[static_cast<std::size_t>(o)] +=
            w1.bias[static_cast<std::size_t>(o)];
    }
    return fused;
}

NetGraph compound_scale(const NetGraph& g, double depth_factor,
                        double width_factor) {
    if (depth_factor <= 0.0 || width_factor <= 0.0) {
        throw std::invalid_argument("compound_scale: factors must be > 0");
    }
    auto scale_width = [width_factor](int filters) {
        const long long rounded = std::llround(filters * width_factor);
        const long long up = ((std::max(rounded, 1LL) + 7) / 8) * 8;
        return static_cast<int>(up);
    };

    NetGraph out = g;
    for (Node& node : out.nodes) {
        LayerSpec& spec = node.spec;
        switch (spec.kind) {
            case LayerKind::conv:
            case LayerKind::elan:
            case LayerKind::sppcspc:
            case LayerKind::c3:
                spec.filters = scale_width(spec.filters);
                spec.repeat = std::max<int>(
                    1, static_cast<int>(std::llround(spec.repeat * depth_factor)));
                break;
            case LayerKind::input:
            case LayerKind::upsample:
            case LayerKind::head:
                break;
        }
    }
    return out;
}

std::string render_layer_table(const NetGraph& g, const ShapeReport& report,
                               const ParamCount& params) {
    auto kind_name = [](LayerKind k) {
        switch (k) {
            case LayerKind::input: return "input";
            case LayerKind::conv: return "conv";
            case LayerKind::elan: return "elan";
            case LayerKind::sppcspc: return "sppcspc";
            case LayerKind::upsample: return "upsample";
            case LayerKind::c3: return "c3";
            case LayerKind::head: return "head";
        }
        return "?";
    };

    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-10s %-9s %-10s %8s %-9s %6s %-13s %s\n",
                  "Layer", "Kind", "Activation", "Filters", "Size", "Repeat",
                  "Output", "Params");
    out << line;

    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const LayerSpec& spec = g.nodes[i].spec;
        const TensorShape& shape = report.shapes[i];

        std::string filters = spec.filters > 0 ? std::to_string(spec.filters)
                                               : std::string("-");
        if (spec.kind == LayerKind::head) filters = "varies";

        std::string size = "-";
        if (spec.kind == LayerKind::conv) {
            size = std::to_string(spec.kernel) + "x" +
                   std::to_string(spec.kernel) + "/" +
                   std::to_string(spec.stride);
        }

        std::string output = std::to_string(shape.width) + "x" +
                             std::to_string(shape.height) + "x" +
                             std::to_string(shape.channels);
        if (spec.kind == LayerKind::head) output = "varies";
        if (spec.published_spatial && (shape.height != *spec.published_spatial ||
                                   shape.width != *spec.published_spatial)) {
            output += " [published size " + std::to_string(*spec.published_spatial) +
                      "x" + std::to_string(*spec.published_spatial) + "]";
        }

        std::snprintf(line, sizeof(line),
                      "%-10s %-9s %-10s %8s %-9s %6d %-13s %lld\n",
                      spec.name.c_str(), kind_name(spec.kind),
                      spec.activation == Activation::silu ? "SiLU" : "-",
                      filters.c_str(), size.c_str(), spec.repeat,
                      output.c_str(), params.per_node[i]);
        out << line;
    }

    char total[64];
    std::snprintf(total, sizeof(total), "total parameters: %lld\n",
                  params.total);
    out << total;

    if (report.discrepancies.empty()) {
        out << "shape discrepancies: none\n";
    } else {
        out << "shape discrepancies:\n";
        for (const auto& d : report.discrepancies) {
            out << "  " << d.layer << ": computed " << d.computed.width << "x"
                << d.computed.height << ", published size " << d.published_spatial
                << "x" << d.published_spatial << '\n';
        }
    }
    return out.str();
}

std::string to_dot(const NetGraph& g) {
    std::ostringstream out;
    out << "digraph net {\n  rankdir=TB;\n  node [shape=box];\n";
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const LayerSpec& spec = g.nodes[i].spec;
        out << "  n" << i << " [label=\"" << spec.name;
        if (spec.filters > 0) out << "\\n" << spec.filters << " filters";
        out << "\"];\n";
    }
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        for (const int src : g.nodes[i].inputs) {
            out << "  n" << src << " -> n" << i << ";\n";
        }
    }
    out << "}\n";
    return out.str();
}

}  // namespace detkit::nettopo
