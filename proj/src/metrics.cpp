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

#include "detkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace detkit::metrics {

Box box_from_center(double cx, double cy, double w, double h) {
    return {cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0};
}

double iou(const Box& a, const Box& b) {
    const double ix1 = std::max(a.x1, b.x1);
    const double iy1 = std::max(a.y1, b.y1);
    const double ix2 = std::min(a.x2, b.x2);
    const double iy2 = std::min(a.y2, b.y2);
    const double iw = ix2 - ix1;
    const double ih = iy2 - iy1;
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<GroundTruth>& gts,
                             double iou_thresh) {
    MatchResult result;
    result.det_is_tp.assign(dets.size(), false);
    result.det_matched_gt.assign(dets.size(), -1);
    result.gt_matched.assign(gts.size(), false);

    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return dets[a].confidence > dets[b].confidence;
                     });

    for (const std::size_t di : order) {
        int best_gt = -1;
        double best_iou = 0.0;
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            if (result.gt_matched[gi] ||
                gts[gi].class_id != dets[di].class_id) {
                continue;
            }
            const double v = iou(dets[di].box, gts[gi].box);
            if (v >= iou_thresh && v > best_iou) {
                best_iou = v;
                best_gt = static_cast<int>(gi);
            }
        }
        if (best_gt >= 0) {
            result.det_is_tp[di] = true;
            result.det_matched_gt[di] = best_gt;
            result.gt_matched[static_cast<std::size_t>(best_gt)] = true;
        }
    }
    return result;
}

namespace {

/// Per-detection verdicts for one class across all images, where matching
/// is confined to each detection's own image.
struct ClassSweep {
    // (confidence, is_tp), ordered by descending confidence with input
    // order as the tie break.
    std::vector<std::pair<double, bool>> verdicts;
    long long num_gts = 0;
};

ClassSweep sweep_class(int class_id, const std::vector<Detection>& dets,
                       const std::vector<GroundTruth>& gts,
                       double iou_thresh) {
    ClassSweep sweep;

    std::map<std::string, std::vector<std::size_t>> dets_by_image;
    std::map<std::string, std::vector<GroundTruth>> gts_by_image;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (dets[i].class_id == class_id) {
            dets_by_image[dets[i].image_id].push_back(i);
        }
    }
    for (const auto& gt : gts) {
        if (gt.class_id == class_id) {
            gts_by_image[gt.image_id].push_back(gt);
            sweep.num_gts++;
        }
    }

    std::vector<std::pair<std::size_t, bool>> flat;  // global det index, tp
    for (const auto& [image_id, indices] : dets_by_image) {
        std::vector<Detection> image_dets;
        image_dets.reserve(indices.size());
        for (const std::size_t i : indices) image_dets.push_back(dets[i]);

        const auto it = gts_by_image.find(image_id);
        static const std::vector<GroundTruth> kNone;
        const auto& image_gts = it == gts_by_image.end() ? kNone : it->second;

        const MatchResult match =
            match_detections(image_dets, image_gts, iou_thresh);
        for (std::size_t k = 0; k < indices.size(); ++k) {
            flat.emplace_back(indices[k], match.det_is_tp[k]);
        }
    }

    std::stable_sort(flat.begin(), flat.end(),
                     [&](const auto& a, const auto& b) {
                         if (dets[a.first].confidence !=
                             dets[b.first].confidence) {
                             return dets[a.first].confidence >
                                    dets[b.first].confidence;
                         }
                         return a.first < b.first;
                     });

    sweep.verdicts.reserve(flat.size());
    for (const auto& [idx, tp] : flat) {
        sweep.verdicts.emplace_back(dets[idx].confidence, tp);
    }
    return sweep;
}

}  // namespace

std::vector<PrPoint> pr_points(int class_id,
                               const std::vector<Detection>& dets,
                               const std::vector<GroundTruth>& gts,
                               double iou_thresh) {
    const ClassSweep sweep = sweep_class(class_id, dets, gts, iou_thresh);
    if (sweep.num_gts == 0) return {};

    std::vector<PrPoint> points;
    points.reserve(sweep.verdicts.size());
    long long tp = 0, fp = 0;
    for (const auto& [conf, is_tp] : sweep.verdicts) {
        (is_tp ? tp : fp)++;
        points.push_back({double(tp) / double(sweep.num_gts),
                          double(tp) / double(tp + fp), conf});
    }
    return points;
}

double average_precision(const std::vector<PrPoint>& points) {
    if (points.empty()) return 0.0;

    // Suffix max gives the monotone non-increasing precision envelope;
    // recalls are non-decreasing along the sweep.
    std::vector<double> envelope(points.size());
    double running = 0.0;
    for (std::size_t i = points.size(); i-- > 0;) {
        running = std::max(running, points[i].precision);
        envelope[i] = running;
    }

    double sum = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double r = k / 100.0;
        // First sweep index reaching recall r.
        const auto it = std::lower_bound(
            points.begin(), points.end(), r,
            [](const PrPoint& p, double value) { return p.recall < value; });
        if (it != points.end()) {
            sum += envelope[static_cast<std::size_t>(it - points.begin())];
        }
    }
    return sum / 101.0;
}

APResult map_at(const std::vector<Detection>& dets,
                const std::vector<GroundTruth>& gts, int num_classes,
                double iou_thresh) {
    APResult result;
    result.iou_thresh = iou_thresh;
    result.per_class_ap.assign(num_classes, 0.0);
    result.class_has_gt.assign(num_classes, false);

    for (const auto& gt : gts) {
        if (gt.class_id >= 0 && gt.class_id < num_classes) {
            result.class_has_gt[gt.class_id] = true;
        }
    }

    int with_gt = 0;
    double sum = 0.0;
    for (int c = 0; c < num_classes; ++c) {
        if (!result.class_has_gt[c]) continue;
        result.per_class_ap[c] = average_precision(pr_points(c, dets, gts, iou_thresh));
        sum += result.per_class_ap[c];
        with_gt++;
    }
    if (with_gt == 0) {
        throw std::invalid_argument("map_at: no class has any ground truth");
    }
    result.mean = sum / with_gt;
    return result;
}

double map_range(const std::vector<Detection>& dets,
                 const std::vector<GroundTruth>& gts, int num_classes) {
    double sum = 0.0;
    for (int i = 0; i < 10; ++i) {
        const double thresh = (50 + 5 * i) / 100.0;
        sum += map_at(dets, gts, num_classes, thresh).mean;
    }
    return sum / 10.0;
}

Curve::Peak Curve::peak() const {
    Peak best;
    if (thresholds.empty() || all_classes.empty()) return best;
    best.value = all_classes[0];
    best.threshold = thresholds[0];
    for (std::size_t i = 1; i < all_classes.size(); ++i) {
        if (all_classes[i] > best.value) {
            best.value = all_classes[i];
            best.threshold = thresholds[i];
        }
    }
    return best;
}

std::string format_peak(const Curve::Peak& peak) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f at %.3f", peak.value, peak.threshold);
    return buf;
}

ConfidenceCurves confidence_curves(const std::vector<Detection>& dets,
                                   const std::vector<GroundTruth>& gts,
                                   int num_classes, double iou_thresh,
                                   int num_thresholds) {
    if (num_thresholds < 2) {
        throw std::invalid_argument("confidence_curves: need >= 2 thresholds");
    }

    ConfidenceCurves curves;
    curves.precision.x_label = curves.recall.x_label = curves.f1.x_label =
        "confidence";
    curves.precision.y_label = "precision";
    curves.recall.y_label = "recall";
    curves.f1.y_label = "f1";

    std::vector<double> thresholds(num_thresholds);
    for (int i = 0; i < num_thresholds; ++i) {
        thresholds[i] = double(i) / double(num_thresholds - 1);
    }
    curves.precision.thresholds = curves.recall.thresholds =
        curves.f1.thresholds = thresholds;

    std::vector<int> classes_with_gt;
    std::map<int, ClassSweep> sweeps;
    for (int c = 0; c < num_classes; ++c) {
        ClassSweep sweep = sweep_class(c, dets, gts, iou_thresh);
        if (sweep.num_gts == 0) continue;
        classes_with_gt.push_back(c);
        // Ascending confidence for binary-search cutoffs.
        std::sort(sweep.verdicts.begin(), sweep.verdicts.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        sweeps[c] = std::move(sweep);
    }

    curves.precision.all_classes.assign(num_thresholds, 0.0);
    curves.recall.all_classes.assign(num_thresholds, 0.0);
    curves.f1.all_classes.assign(num_thresholds, 0.0);

    for (const int c : classes_with_gt) {
        const ClassSweep& sweep = sweeps[c];

        // tp_suffix[i] = true positives among verdicts[i..]
        std::vector<long long> tp_suffix(sweep.verdicts.size() + 1, 0);
        for (std::size_t i = sweep.verdicts.size(); i-- > 0;) {
            tp_suffix[i] = tp_suffix[i + 1] + (sweep.verdicts[i].second ? 1 : 0);
        }

        auto& p_vals = curves.precision.per_class[c];
        auto& r_vals = curves.recall.per_class[c];
        auto& f_vals = curves.f1.per_class[c];
        p_vals.resize(num_thresholds);
        r_vals.resize(num_thresholds);
        f_vals.resize(num_thresholds);

        for (int i = 0; i < num_thresholds; ++i) {
            const double t = thresholds[i];
            const auto it = std::lower_bound(
                sweep.verdicts.begin(), sweep.verdicts.end(), t,
                [](const auto& v, double value) { return v.first < value; });
            const std::size_t first = static_cast<std::size_t>(
                it - sweep.verdicts.begin());
            const long long kept =
                static_cast<long long>(sweep.verdicts.size() - first);
            const long long tp = tp_suffix[first];

            // No kept detections: precision carried as the 1.0 limit.
            const double precision = kept > 0 ? double(tp) / double(kept) : 1.0;
            const double recall = double(tp) / double(sweep.num_gts);
            const double f1 = (precision + recall) > 0.0
                                  ? 2.0 * precision * recall / (precision + recall)
                                  : 0.0;
            p_vals[i] = precision;
            r_vals[i] = recall;
            f_vals[i] = f1;

            curves.precision.all_classes[i] += precision;
            curves.recall.all_classes[i] += recall;
            curves.f1.all_classes[i] += f1;
        }
    }

    if (!classes_with_gt.empty()) {
        const double n = static_cast<double>(classes_with_gt.size());
        for (int i = 0; i < num_thresholds; ++i) {
            curves.precision.all_classes[i] /= n;
            curves.recall.all_classes[i] /= n;
            curves.f1.all_classes[i] /= n;
        }
    }
    return curves;
}

PrecisionRecall precision_recall_at(const std::vector<Detection>& dets,
                                    const std::vector<GroundTruth>& gts,
                                    int num_classes, double conf_thresh,
                                    double iou_thresh) {
    PrecisionRecall out;
    int with_gt = 0;
    for (int c = 0; c < num_classes; ++c) {
        const ClassSweep sweep = sweep_class(c, dets, gts, iou_thresh);
        if (sweep.num_gts == 0) continue;
        with_gt++;

        long long kept = 0, tp = 0;
        for (const auto& [conf, is_tp] : sweep.verdicts) {
            if (conf >= conf_thresh) {
                kept++;
                if (is_tp) tp++;
            }
        }
        out.precision += kept > 0 ? double(tp) / double(kept) : 1.0;
        out.recall += double(tp) / double(sweep.num_gts);
    }
    if (with_gt > 0) {
        out.precision /= with_gt;
        out.recall /= with_gt;
    }
    return out;
}

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : num_classes_(num_classes),
      counts_(static_cast<std::size_t>(num_classes + 1) * (num_classes + 1), 0) {
    if (num_classes < 1) {
        throw std::invalid_argument("ConfusionMatrix: need >= 1 class");
    }
}

long long ConfusionMatrix::count(int predicted, int truth) const {
    return counts_.at(static_cast<std::size_t>(predicted) * (num_classes_ + 1) +
                      truth);
}

long long& ConfusionMatrix::count(int predicted, int truth) {
    return counts_.at(static_cast<std::size_t>(predicted) * (num_classes_ + 1) +
                      truth);
}

std::vector<std::vector<double>> ConfusionMatrix::normalized() const {
    const int n = num_classes_ + 1;
    std::vector<std::vector<double>> out(n, std::vector<double>(n, 0.0));
    for (int col = 0; col < n; ++col) {
        long long sum = 0;
        for (int row = 0; row < n; ++row) sum += count(row, col);
        if (sum == 0) continue;
        for (int row = 0; row < n; ++row) {
            out[row][col] = double(count(row, col)) / double(sum);
        }
    }
    return out;
}

long long ConfusionMatrix::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), 0LL);
}

ConfusionMatrix build_confusion_matrix(const std::vector<Detection>& dets,
                                       const std::vector<GroundTruth>& gts,
                                       int num_classes, double conf_thresh,
                                       double iou_thresh) {
    ConfusionMatrix matrix(num_classes);
    const int background = matrix.background_index();

    std::map<std::string, std::vector<std::size_t>> dets_by_image;
    std::map<std::string, std::vector<std::size_t>> gts_by_image;
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (dets[i].confidence >= conf_thresh) {
            kept.push_back(i);
            dets_by_image[dets[i].image_id].push_back(i);
        }
    }
    for (std::size_t i = 0; i < gts.size(); ++i) {
        gts_by_image[gts[i].image_id].push_back(i);
    }

    std::vector<bool> det_matched(dets.size(), false);
    std::vector<bool> gt_matched(gts.size(), false);

    for (const auto& [image_id, image_gts] : gts_by_image) {
        const auto dit = dets_by_image.find(image_id);
        if (dit == dets_by_image.end()) continue;
        const auto& image_dets = dit->second;

        // All candidate pairs, matched greedily by descending IoU
        // regardless of class.
        struct Pair {
            double iou;
            std::size_t det;
            std::size_t gt;
        };
        std::vector<Pair> pairs;
        for (const std::size_t di : image_dets) {
            for (const std::size_t gi : image_gts) {
                const double v = iou(dets[di].box, gts[gi].box);
                if (v >= iou_thresh) {
                    pairs.push_back({v, di, gi});
                }
            }
        }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            if (a.iou != b.iou) return a.iou > b.iou;
            if (a.det != b.det) return a.det < b.det;
            return a.gt < b.gt;
        });
        for (const auto& pair : pairs) {
            if (det_matched[pair.det] || gt_matched[pair.gt]) continue;
            det_matched[pair.det] = true;
            gt_matched[pair.gt] = true;
            matrix.count(dets[pair.det].class_id, gts[pair.gt].class_id)++;
        }
    }

    for (std::size_t i = 0; i < gts.size(); ++i) {
        if (!gt_matched[i]) {
            matrix.count(background, gts[i].class_id)++;  // background FN
        }
    }
    for (const std::size_t i : kept) {
        if (!det_matched[i]) {
            matrix.count(dets[i].class_id, background)++;  // background FP
        }
    }
    return matrix;
}

int select_best_epoch(const std::vector<EpochMetrics>& series) {
    if (series.empty()) {
        throw std::invalid_argument("select_best_epoch: empty series");
    }
    const EpochMetrics* best = &series[0];
    for (const auto& em : series) {
        if (em.map50_95 > best->map50_95 ||
            (em.map50_95 == best->map50_95 && em.epoch < best->epoch)) {
            best = &em;
        }
    }
    return best->epoch;
}

std::vector<Detection> parse_detections(const std::string& text) {
    std::vector<Detection> dets;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        const auto first = raw.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || raw[first] == '#') continue;

        std::istringstream fields(raw);
        Detection det;
        std::string extra;
        if (!(fields >> det.image_id >> det.class_id >> det.box.x1 >>
              det.box.y1 >> det.box.x2 >> det.box.y2 >> det.confidence)) {
            throw std::runtime_error(
                "detections line " + std::to_string(line_no) +
                ": expected 'image_id class x1 y1 x2 y2 confidence'");
        }
        if (fields >> extra) {
            throw std::runtime_error("detections line " +
                                     std::to_string(line_no) +
                                     ": trailing field '" + extra + "'");
        }
        if (det.class_id < 0) {
            throw std::runtime_error("detections line " +
                                     std::to_string(line_no) +
                                     ": class id must be >= 0");
        }
        if (det.box.x1 >= det.box.x2 || det.box.y1 >= det.box.y2) {
            throw std::runtime_error("detections line " +
                                     std::to_string(line_no) +
                                     ": box must satisfy x1 < x2 and y1 < y2");
        }
        if (det.confidence < 0.0 || det.confidence > 1.0) {
            throw std::runtime_error("detections line " +
                                     std::to_string(line_no) +
                                     ": confidence must be in [0, 1]");
        }
        dets.push_back(std::move(det));
    }
    return dets;
}

std::vector<Detection> load_detections(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open detections file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_detections(ss.str());
}

std::string write_detections(const std::vector<Detection>& dets) {
    std::string out;
    char buf[256];
    for (const auto& d : dets) {
        std::snprintf(buf, sizeof(buf), " %d %.6f %.6f %.6f %.6f %.6f\n",
                      d.class_id, d.box.x1, d.box.y1, d.box.x2, d.box.y2,
                      d.confidence);
        out += d.image_id;
        out += buf;
    }
    return out;
}

}  // namespace detkit::metrics
