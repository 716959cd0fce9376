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

#include <atomic>
#include <cstdio>
#include <set>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "detkit/augment.hpp"
#include "detkit/csv.hpp"
#include "detkit/dataset.hpp"
#include "detkit/image.hpp"
#include "detkit/metrics.hpp"
#include "detkit/nettopo.hpp"
#include "detkit/rng.hpp"
#include "detkit/svg.hpp"
#include "detkit/trainmath.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

/// Raised for input/validation problems that map to exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << content;
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string image_id_of(const std::string& image_path) {
    return fs::path(image_path).stem().string();
}

std::string fixed6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

struct AugmentOptions {
    std::string manifest_path;
    std::string spec_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 0;
};

int run_augment(const AugmentOptions& opt) {
    using namespace detkit;

    const dataset::FrameManifest manifest =
        dataset::load_manifest(opt.manifest_path);
    augment::AugmentSpec spec = augment::load_augment_spec(opt.spec_path);
    if (opt.seed_set) spec.seed = opt.seed;

    struct Job {
        std::string id;
        ImageBuffer image;
        std::vector<augment::NormalizedBox> boxes;
        std::string out_image;  // relative to out dir
        std::string out_label;
        std::uint64_t substream = 0;
        // results
        std::vector<std::uint8_t> png;
        std::string label_text;
        std::string error;
    };

    // Load + validate everything up front; report all problems at once.
    std::vector<Job> jobs;
    std::vector<std::string> problems;
    std::set<std::string> used_ids;
    for (const auto& entry : manifest.entries) {
        Job job;
        job.id = image_id_of(entry.image_path);
        if (!used_ids.insert(job.id).second) {
            problems.push_back("duplicate image id '" + job.id +
                               "' from " + entry.image_path);
            continue;
        }
        try {
            job.image = read_png(entry.image_path);
        } catch (const std::exception& e) {
            problems.push_back(e.what());
        }
        try {
            const auto records =
                dataset::parse_label_file(read_file(entry.label_path));
            for (const auto& r : records) {
                job.boxes.push_back({r.class_id, r.cx, r.cy, r.w, r.h});
            }
        } catch (const std::exception& e) {
            problems.push_back(std::string(e.what()) + " (" +
                               entry.label_path + ")");
        }
        job.out_image = "images/" + job.id + ".png";
        job.out_label = "labels/" + job.id + ".txt";
        job.substream = Rng::substream(spec.seed, job.id).stream_id();
        jobs.push_back(std::move(job));
    }
    if (!problems.empty()) {
        for (const auto& p : problems) std::cerr << "error: " << p << '\n';
        return kExitData;
    }

    // Parallel compute phase; per-image substreams make the result
    // independent of scheduling.
    const unsigned hardware = std::thread::hardware_concurrency();
    const unsigned workers = opt.jobs > 0
                                 ? static_cast<unsigned>(opt.jobs)
                                 : std::max(1u, hardware);
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= jobs.size()) break;
            Job& job = jobs[i];
            try {
                const auto result =
                    augment::apply_pipeline(job.image, job.boxes, spec, job.id);
                job.png = encode_png(result.image);
                std::vector<dataset::LabelRecord> records;
                records.reserve(result.boxes.size());
                for (const auto& b : result.boxes) {
                    records.push_back({b.class_id, b.cx, b.cy, b.w, b.h});
                }
                job.label_text = dataset::write_label_file(records);
            } catch (const std::exception& e) {
                job.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    for (const auto& job : jobs) {
        if (!job.error.empty()) {
            problems.push_back(job.id + ": " + job.error);
        }
    }
    if (!problems.empty()) {
        for (const auto& p : problems) std::cerr << "error: " << p << '\n';
        return kExitData;
    }

    // Single-writer phase, manifest order.
    const fs::path out_dir(opt.out_dir);
    fs::create_directories(out_dir / "images");
    fs::create_directories(out_dir / "labels");

    json provenance;
    provenance["command"] = "augment";
    provenance["seed"] = spec.seed;
    provenance["spec_hash"] =
        "fnv1a64:" + hex64(detkit::fnv1a64(augment::to_config_text(spec)));
    provenance["images"] = json::array();

    dataset::FrameManifest out_manifest;
    for (const auto& job : jobs) {
        std::ofstream img_out(out_dir / job.out_image, std::ios::binary);
        if (!img_out) throw DataError("cannot write " + job.out_image);
        img_out.write(reinterpret_cast<const char*>(job.png.data()),
                      static_cast<std::streamsize>(job.png.size()));
        write_file(out_dir / job.out_label, job.label_text);

        provenance["images"].push_back({{"id", job.id},
                                        {"substream", hex64(job.substream)},
                                        {"image", job.out_image},
                                        {"label", job.out_label}});
        out_manifest.entries.push_back({job.out_image, job.out_label, ""});
    }
    write_file(out_dir / "manifest.txt", dataset::write_manifest(out_manifest));
    write_file(out_dir / "provenance.json", provenance.dump(2) + "\n");

    std::cout << "augmented " << jobs.size() << " images into " << opt.out_dir
              << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOptions {
    std::string dets_path;
    std::string manifest_path;
    std::string taxonomy_path;
    std::string out_dir;
    std::string epochs_path;
    double iou_thresh = 0.5;
    double conf_thresh = 0.25;
    std::string format = "both";
};

std::string curve_csv(const detkit::metrics::Curve& curve,
                      const detkit::dataset::ClassTaxonomy& taxonomy) {
    using detkit::csv::format_row;
    std::string out = format_row({"threshold", "class", "value"});
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
        out += format_row({fixed6(curve.thresholds[i]), "all",
                           fixed6(curve.all_classes[i])});
    }
    for (const auto& [class_id, values] : curve.per_class) {
        for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
            out += format_row({fixed6(curve.thresholds[i]),
                               taxonomy.name(class_id), fixed6(values[i])});
        }
    }
    return out;
}

std::vector<detkit::svg::Series> curve_series(
    const detkit::metrics::Curve& curve,
    const detkit::dataset::ClassTaxonomy& taxonomy) {
    std::vector<detkit::svg::Series> series;
    series.push_back({"all classes", curve.thresholds, curve.all_classes});
    for (const auto& [class_id, values] : curve.per_class) {
        series.push_back({taxonomy.name(class_id), curve.thresholds, values});
    }
    return series;
}

int run_eval(const EvalOptions& opt) {
    using namespace detkit;

    const dataset::ClassTaxonomy taxonomy =
        opt.taxonomy_path.empty() ? dataset::ClassTaxonomy::knife_safety()
                                  : dataset::ClassTaxonomy::load(opt.taxonomy_path);
    const int num_classes = taxonomy.size();

    std::vector<metrics::Detection> dets;
    try {
        dets = metrics::load_detections(opt.dets_path);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }

    const dataset::FrameManifest manifest =
        dataset::load_manifest(opt.manifest_path);
    std::vector<metrics::GroundTruth> gts;
    for (const auto& entry : manifest.entries) {
        const std::string id = image_id_of(entry.image_path);
        std::vector<dataset::LabelRecord> records;
        try {
            records = dataset::parse_label_file(read_file(entry.label_path));
        } catch (const std::exception& e) {
            throw DataError(std::string(e.what()) + " (" + entry.label_path + ")");
        }
        for (const auto& r : records) {
            if (r.class_id >= num_classes) {
                throw DataError("ground-truth class id " +
                                std::to_string(r.class_id) +
                                " outside taxonomy (" + entry.label_path + ")");
            }
            gts.push_back(
                {id, r.class_id, metrics::box_from_center(r.cx, r.cy, r.w, r.h)});
        }
    }
    for (const auto& d : dets) {
        if (d.class_id >= num_classes) {
            throw DataError("detection class id " + std::to_string(d.class_id) +
                            " outside taxonomy");
        }
    }
    if (gts.empty()) {
        throw DataError("no ground truth in manifest '" + opt.manifest_path + "'");
    }

    const auto ap50 = metrics::map_at(dets, gts, num_classes, 0.50);
    const auto ap_at = metrics::map_at(dets, gts, num_classes, opt.iou_thresh);
    const double map_range = metrics::map_range(dets, gts, num_classes);
    const auto pr =
        metrics::precision_recall_at(dets, gts, num_classes, opt.conf_thresh,
                                     opt.iou_thresh);
    const auto curves =
        metrics::confidence_curves(dets, gts, num_classes, opt.iou_thresh);
    const auto confusion = metrics::build_confusion_matrix(
        dets, gts, num_classes, opt.conf_thresh, opt.iou_thresh);

    const auto p_peak = curves.precision.peak();
    const auto r_peak = curves.recall.peak();
    const auto f_peak = curves.f1.peak();

    std::ostringstream summary;
    summary << "detections: " << dets.size() << '\n';
    summary << "ground_truth: " << gts.size() << '\n';
    summary << "iou_thresh: " << fixed6(opt.iou_thresh) << '\n';
    summary << "conf_thresh: " << fixed6(opt.conf_thresh) << '\n';
    summary << "precision: " << fixed6(pr.precision) << '\n';
    summary << "recall: " << fixed6(pr.recall) << '\n';
    summary << "map50: " << fixed6(ap50.mean) << '\n';
    if (opt.iou_thresh != 0.50) {
        summary << "map" << static_cast<int>(opt.iou_thresh * 100) << ": "
                << fixed6(ap_at.mean) << '\n';
    }
    summary << "map50_95: " << fixed6(map_range) << '\n';
    for (int c = 0; c < num_classes; ++c) {
        if (ap50.class_has_gt[c]) {
            summary << "ap50[" << taxonomy.name(c)
                    << "]: " << fixed6(ap50.per_class_ap[c]) << '\n';
        }
    }
    summary << "max_precision: " << metrics::format_peak(p_peak) << '\n';
    summary << "max_recall: " << metrics::format_peak(r_peak) << '\n';
    summary << "max_f1: " << metrics::format_peak(f_peak) << '\n';

    if (!opt.epochs_path.empty()) {
        const auto series = trainmath::load_epoch_csv(opt.epochs_path);
        if (series.empty()) {
            throw DataError("epoch CSV '" + opt.epochs_path + "' has no rows");
        }
        const int best = metrics::select_best_epoch(series);
        double best_value = 0.0;
        for (const auto& em : series) {
            if (em.epoch == best) best_value = em.map50_95;
        }
        summary << "best_epoch: " << best << " (map50_95 " << fixed6(best_value)
                << ")\n";
    }

    const fs::path out_dir(opt.out_dir);
    fs::create_directories(out_dir);
    write_file(out_dir / "summary.txt", summary.str());
    std::cout << summary.str();

    const bool want_csv = opt.format == "csv" || opt.format == "both";
    const bool want_svg = opt.format == "svg" || opt.format == "both";

    if (want_csv) {
        write_file(out_dir / "precision_curve.csv",
                   curve_csv(curves.precision, taxonomy));
        write_file(out_dir / "recall_curve.csv",
                   curve_csv(curves.recall, taxonomy));
        write_file(out_dir / "f1_curve.csv", curve_csv(curves.f1, taxonomy));

        std::string pr_csv =
            csv::format_row({"class", "recall", "precision", "confidence"});
        for (int c = 0; c < num_classes; ++c) {
            for (const auto& point :
                 metrics::pr_points(c, dets, gts, opt.iou_thresh)) {
                pr_csv += csv::format_row({taxonomy.name(c),
                                           fixed6(point.recall),
                                           fixed6(point.precision),
                                           fixed6(point.confidence)});
            }
        }
        write_file(out_dir / "pr_curve.csv", pr_csv);

        std::vector<std::string> labels = taxonomy.names();
        labels.push_back("background");
        std::string raw = csv::format_row([&] {
            std::vector<std::string> header{"predicted\\true"};
            header.insert(header.end(), labels.begin(), labels.end());
            return header;
        }());
        std::string norm = raw;
        const auto normalized = confusion.normalized();
        for (int row = 0; row <= num_classes; ++row) {
            std::vector<std::string> raw_row{labels[row]};
            std::vector<std::string> norm_row{labels[row]};
            for (int col = 0; col <= num_classes; ++col) {
                raw_row.push_back(std::to_string(confusion.count(row, col)));
                norm_row.push_back(fixed6(normalized[row][col]));
            }
            raw += csv::format_row(raw_row);
            norm += csv::format_row(norm_row);
        }
        write_file(out_dir / "confusion_matrix.csv", raw);
        write_file(out_dir / "confusion_matrix_normalized.csv", norm);
    }

    if (want_svg) {
        write_file(out_dir / "precision_confidence.svg",
                   svg::line_chart("Precision vs confidence", "confidence",
                                   "precision",
                                   curve_series(curves.precision, taxonomy),
                                   "all classes " +
                                       metrics::format_peak(p_peak)));
        write_file(out_dir / "recall_confidence.svg",
                   svg::line_chart("Recall vs confidence", "confidence",
                                   "recall",
                                   curve_series(curves.recall, taxonomy),
                                   "all classes " +
                                       metrics::format_peak(r_peak)));
        write_file(out_dir / "f1_confidence.svg",
                   svg::line_chart("F1 vs confidence", "confidence", "f1",
                                   curve_series(curves.f1, taxonomy),
                                   "all classes " +
                                       metrics::format_peak(f_peak)));

        std::vector<svg::Series> pr_series;
        for (int c = 0; c < num_classes; ++c) {
            const auto points = metrics::pr_points(c, dets, gts, opt.iou_thresh);
            if (points.empty()) continue;
            svg::Series series;
            series.label = taxonomy.name(c) + " (AP " +
                           fixed6(ap_at.per_class_ap[c]).substr(0, 5) + ")";
            for (const auto& p : points) {
                series.x.push_back(p.recall);
                series.y.push_back(p.precision);
            }
            pr_series.push_back(std::move(series));
        }
        write_file(out_dir / "pr_curve.svg",
                   svg::line_chart("Precision vs recall", "recall", "precision",
                                   pr_series,
                                   "mAP@" + fixed6(opt.iou_thresh).substr(0, 4) +
                                       " = " + fixed6(ap_at.mean)));

        std::vector<std::string> labels = taxonomy.names();
        labels.push_back("background");
        write_file(out_dir / "confusion_matrix.svg",
                   svg::heatmap("Confusion matrix (column-normalized)", labels,
                                labels, confusion.normalized()));
    }

    json provenance;
    provenance["command"] = "eval";
    provenance["detections"] = opt.dets_path;
    provenance["manifest"] = opt.manifest_path;
    provenance["iou_thresh"] = opt.iou_thresh;
    provenance["conf_thresh"] = opt.conf_thresh;
    provenance["format"] = opt.format;
    write_file(out_dir / "provenance.json", provenance.dump(2) + "\n");

    return kExitOk;
}

// ---------------------------------------------------------------------------
// topo / fuse
// ---------------------------------------------------------------------------

struct TopoOptions {
    int classes = 6;
    int anchors = 3;
    int input_size = 640;
    double depth = 1.0;
    double width = 1.0;
    std::string dot_path;
    std::string table_path;
};

int run_topo(const TopoOptions& opt) {
    using namespace detkit::nettopo;

    NetGraph graph = build_reference_graph(opt.classes, opt.anchors);
    if (opt.depth != 1.0 || opt.width != 1.0) {
        graph = compound_scale(graph, opt.depth, opt.width);
    }
    graph.input_shape = {3, opt.input_size, opt.input_size};

    const ShapeReport report = propagate_shapes(graph, graph.input_shape);
    const ParamCount params = count_parameters(graph);
    const std::string table = render_layer_table(graph, report, params);
    std::cout << table;
    if (!opt.table_path.empty()) write_file(opt.table_path, table);
    if (!opt.dot_path.empty()) write_file(opt.dot_path, to_dot(graph));
    return kExitOk;
}

struct FuseOptions {
    std::string kernels_path;
    std::string out_path;
    bool random = false;
    int in_ch = 4;
    int out_ch = 4;
    bool identity = false;
    std::uint64_t seed = 0;
    int checks = 20;
    int input_size = 8;
};

detkit::nettopo::ConvKernel kernel_from_json(const json& j, const char* w_key,
                                             const char* b_key, int kernel,
                                             int padding) {
    using detkit::nettopo::ConvKernel;
    const int in_ch = j.at("in_ch").get<int>();
    const int out_ch = j.at("out_ch").get<int>();
    ConvKernel k(out_ch, in_ch, kernel, 1, padding);
    const auto w = j.at(w_key).get<std::vector<double>>();
    const auto b = j.at(b_key).get<std::vector<double>>();
    if (w.size() != k.weights.size() || b.size() != k.bias.size()) {
        throw DataError(std::string("kernel array size mismatch for ") + w_key);
    }
    k.weights = w;
    k.bias = b;
    return k;
}

int run_fuse(const FuseOptions& opt) {
    using namespace detkit::nettopo;
    using detkit::Rng;

    ConvKernel w3, w1;
    bool identity = opt.identity;

    if (opt.random) {
        Rng rng(opt.seed);
        w3 = ConvKernel(opt.out_ch, opt.in_ch, 3, 1, 1);
        w1 = ConvKernel(opt.out_ch, opt.in_ch, 1, 1, 0);
        for (auto& v : w3.weights) v = rng.uniform() * 2.0 - 1.0;
        for (auto& v : w3.bias) v = rng.uniform() * 2.0 - 1.0;
        for (auto& v : w1.weights) v = rng.uniform() * 2.0 - 1.0;
        for (auto& v : w1.bias) v = rng.uniform() * 2.0 - 1.0;
    } else {
        if (opt.kernels_path.empty()) {
            throw DataError("fuse: provide --kernels FILE or --random");
        }
        json j = json::parse(read_file(opt.kernels_path));
        w3 = kernel_from_json(j, "w3", "b3", 3, 1);
        w1 = kernel_from_json(j, "w1", "b1", 1, 0);
        identity = j.value("identity", false);
    }
    if (identity && opt.random && opt.in_ch != opt.out_ch) {
        throw DataError("fuse: --identity requires --in-ch == --out-ch");
    }

    const ConvKernel fused = detkit::nettopo::repconv_fuse(w3, w1, identity);

    // Numeric self-check: branch sum vs fused forward on random inputs.
    Rng rng = Rng::substream(opt.seed, "fuse-check");
    double max_err = 0.0;
    for (int check = 0; check < opt.checks; ++check) {
        Tensor input(w3.in_ch, opt.input_size, opt.input_size);
        for (auto& v : input.values) v = rng.uniform() * 2.0 - 1.0;

        const Tensor a = conv2d_forward(input, w3);
        const Tensor b = conv2d_forward(input, w1);
        const Tensor f = conv2d_forward(input, fused);
        for (std::size_t i = 0; i < f.values.size(); ++i) {
            double expected = a.values[i] + b.values[i];
            if (identity) expected += input.values[i];
            max_err = std::max(max_err, std::fabs(expected - f.values[i]));
        }
    }
    std::printf("max abs error: %.3e over %d random inputs\n", max_err,
                opt.checks);

    if (!opt.out_path.empty()) {
        json out;
        out["in_ch"] = fused.in_ch;
        out["out_ch"] = fused.out_ch;
        out["kernel"] = fused.kernel;
        out["w"] = fused.weights;
        out["b"] = fused.bias;
        write_file(opt.out_path, out.dump(2) + "\n");
        std::cout << "fused kernel written to " << opt.out_path << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// dataset
// ---------------------------------------------------------------------------

detkit::dataset::ClassTaxonomy taxonomy_or_default(const std::string& path) {
    return path.empty() ? detkit::dataset::ClassTaxonomy::knife_safety()
                        : detkit::dataset::ClassTaxonomy::load(path);
}

int run_dataset_validate(const std::string& manifest_path,
                         const std::string& taxonomy_path) {
    using namespace detkit::dataset;
    const auto report = validate_dataset(load_manifest(manifest_path),
                                         taxonomy_or_default(taxonomy_path));
    std::cout << stats_to_table(report.stats,
                                taxonomy_or_default(taxonomy_path));
    if (!report.ok()) {
        for (const auto& v : report.violations) {
            std::cerr << "violation: " << v.path;
            if (v.line > 0) std::cerr << ':' << v.line;
            std::cerr << ": " << v.message << '\n';
        }
        std::cerr << report.violations.size() << " violation(s)\n";
        return kExitData;
    }
    std::cout << "dataset is valid\n";
    return kExitOk;
}

int run_dataset_split(const std::string& manifest_path,
                      const std::string& ratios_text, std::uint64_t seed,
                      const std::string& out_path) {
    using namespace detkit::dataset;

    std::vector<double> ratios;
    std::stringstream ss(ratios_text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            ratios.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw DataError("bad ratio '" + part + "'");
        }
    }

    const FrameManifest result =
        split_dataset(load_manifest(manifest_path), ratios, seed);
    const std::string text = write_manifest(result);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_file(out_path, text);
        std::cout << "split manifest written to " << out_path << '\n';
    }
    return kExitOk;
}

int run_dataset_stats(const std::string& manifest_path,
                      const std::string& taxonomy_path,
                      const std::string& csv_path) {
    using namespace detkit::dataset;
    const ClassTaxonomy taxonomy = taxonomy_or_default(taxonomy_path);
    const auto report = validate_dataset(load_manifest(manifest_path), taxonomy);
    std::cout << stats_to_table(report.stats, taxonomy);
    if (!csv_path.empty()) {
        write_file(csv_path, stats_to_csv(report.stats, taxonomy));
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"detkit: augmentation, dataset, topology and evaluation "
                 "toolkit for detection pipelines"};
    app.require_subcommand(1);

    AugmentOptions aug;
    auto* cmd_augment = app.add_subcommand(
        "augment", "Augment a corpus of images and labels");
    cmd_augment->add_option("--manifest", aug.manifest_path,
                            "Input manifest (image<TAB>label per line)")
        ->required();
    cmd_augment->add_option("--spec", aug.spec_path,
                            "Augmentation config file")->required();
    cmd_augment->add_option("--out", aug.out_dir, "Output directory")
        ->required();
    auto* seed_opt = cmd_augment->add_option(
        "--seed", aug.seed, "Override the seed from the spec file");
    cmd_augment->add_option("--jobs", aug.jobs,
                            "Worker threads (default: hardware)");

    EvalOptions eval;
    auto* cmd_eval = app.add_subcommand(
        "eval", "Evaluate detections against ground truth");
    cmd_eval->add_option("--dets", eval.dets_path, "Detections file")
        ->required();
    cmd_eval->add_option("--manifest", eval.manifest_path,
                         "Ground-truth manifest")->required();
    cmd_eval->add_option("--taxonomy", eval.taxonomy_path,
                         "Class-name file (default: built-in six classes)");
    cmd_eval->add_option("--out", eval.out_dir, "Output directory")->required();
    cmd_eval->add_option("--epochs", eval.epochs_path,
                         "Optional epoch-metrics CSV; adds best-epoch "
                         "selection to the summary");
    cmd_eval->add_option("--iou-thresh", eval.iou_thresh,
                         "IoU threshold for matching (default 0.5)");
    cmd_eval->add_option("--conf-thresh", eval.conf_thresh,
                         "Confidence threshold for the summary and the "
                         "confusion matrix (default 0.25)");
    cmd_eval->add_option("--format", eval.format, "csv|svg|both")
        ->check(CLI::IsMember({"csv", "svg", "both"}));

    TopoOptions topo;
    auto* cmd_topo = app.add_subcommand(
        "topo", "Print the layer table with shapes, params and discrepancies");
    cmd_topo->add_option("--classes", topo.classes, "Number of classes");
    cmd_topo->add_option("--anchors", topo.anchors, "Anchors per scale");
    cmd_topo->add_option("--input-size", topo.input_size,
                         "Input spatial size (default 640)");
    cmd_topo->add_option("--depth", topo.depth, "Depth scaling factor");
    cmd_topo->add_option("--width", topo.width, "Width scaling factor");
    cmd_topo->add_option("--dot", topo.dot_path, "Write DOT graph here");
    cmd_topo->add_option("--out", topo.table_path, "Write the table here too");

    FuseOptions fuse;
    auto* cmd_fuse = app.add_subcommand(
        "fuse", "Fuse 3x3 + 1x1 (+ identity) conv branches into one 3x3");
    cmd_fuse->add_option("--kernels", fuse.kernels_path,
                         "JSON file with w3/b3/w1/b1 (+identity)");
    cmd_fuse->add_flag("--random", fuse.random,
                       "Generate random branches instead of reading a file");
    cmd_fuse->add_option("--in-ch", fuse.in_ch, "Random mode: input channels");
    cmd_fuse->add_option("--out-ch", fuse.out_ch,
                         "Random mode: output channels");
    cmd_fuse->add_flag("--identity", fuse.identity,
                       "Random mode: include the identity branch");
    cmd_fuse->add_option("--seed", fuse.seed, "Random mode seed");
    cmd_fuse->add_option("--checks", fuse.checks,
                         "Random inputs for the self-check (default 20)");
    cmd_fuse->add_option("--out", fuse.out_path, "Write the fused kernel here");

    auto* cmd_dataset = app.add_subcommand("dataset", "Dataset utilities");
    cmd_dataset->require_subcommand(1);

    std::string ds_manifest, ds_taxonomy, ds_ratios = "0.8,0.2", ds_out,
                ds_csv;
    std::uint64_t ds_seed = 0;

    auto* ds_validate = cmd_dataset->add_subcommand(
        "validate", "Validate images and labels, collecting all violations");
    ds_validate->add_option("--manifest", ds_manifest, "Manifest file")
        ->required();
    ds_validate->add_option("--taxonomy", ds_taxonomy, "Class-name file");

    auto* ds_split = cmd_dataset->add_subcommand(
        "split", "Assign split tags deterministically");
    ds_split->add_option("--manifest", ds_manifest, "Manifest file")
        ->required();
    ds_split->add_option("--ratios", ds_ratios,
                         "Comma-separated ratios summing to 1");
    ds_split->add_option("--seed", ds_seed, "Shuffle seed");
    ds_split->add_option("--out", ds_out, "Output manifest path");

    auto* ds_stats = cmd_dataset->add_subcommand(
        "stats", "Print corpus statistics");
    ds_stats->add_option("--manifest", ds_manifest, "Manifest file")
        ->required();
    ds_stats->add_option("--taxonomy", ds_taxonomy, "Class-name file");
    ds_stats->add_option("--csv", ds_csv, "Write stats CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*cmd_augment) {
            aug.seed_set = seed_opt->count() > 0;
            return run_augment(aug);
        }
        if (*cmd_eval) return run_eval(eval);
        if (*cmd_topo) return run_topo(topo);
        if (*cmd_fuse) return run_fuse(fuse);
        if (*ds_validate) return run_dataset_validate(ds_manifest, ds_taxonomy);
        if (*ds_split) {
            return run_dataset_split(ds_manifest, ds_ratios, ds_seed, ds_out);
        }
        if (*ds_stats) return run_dataset_stats(ds_manifest, ds_taxonomy, ds_csv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
