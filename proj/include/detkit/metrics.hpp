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

namespace detkit::metrics {

/// Axis-aligned box as normalized corners.
struct Box {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double area() const noexcept { return (x2 - x1) * (y2 - y1); }
};

/// Corner box from YOLO center format.
Box box_from_center(double cx, double cy, double w, double h);

struct Detection {
    std::string image_id;
    int class_id = 0;
    Box box;
    double confidence = 0.0;
};

struct GroundTruth {
    std::string image_id;
    int class_id = 0;
    Box box;
};

/// Intersection over union; 0 for disjoint boxes.
double iou(const Box& a, const Box& b);

/// Greedy per-class matching for one image. Detections are processed in
/// descending confidence (ties: earlier input order); each claims the
/// unmatched same-class ground truth with the highest IoU >= threshold
/// (ties: lower ground-truth index).
struct MatchResult {
    std::vector<bool> det_is_tp;
    std::vector<int> det_matched_gt;  // -1 when unmatched
    std::vector<bool> gt_matched;
};

MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<GroundTruth>& gts,
                             double iou_thresh);

/// One point of the cumulative confidence sweep.
struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
    double confidence = 0.0;
};

/// Cumulative (recall, precision) sequence for one class across all images,
/// swept by descending confidence. Empty when the class has no ground truth.
std::vector<PrPoint> pr_points(int class_id,
                               const std::vector<Detection>& dets,
                               const std::vector<GroundTruth>& gts,
                               double iou_thresh);

/// 101-point interpolated average precision: the precision envelope is made
/// monotone non-increasing and sampled at recall 0.00, 0.01, ..., 1.00.
double average_precision(const std::vector<PrPoint>& points);

struct APResult {
    double iou_thresh = 0.0;
    std::vector<double> per_class_ap;  // 0 for classes without ground truth
    std::vector<bool> class_has_gt;
    double mean = 0.0;  // over classes with >= 1 ground truth
};

/// Throws std::invalid_argument when no class has any ground truth.
APResult map_at(const std::vector<Detection>& dets,
                const std::vector<GroundTruth>& gts, int num_classes,
                double iou_thresh);

/// Mean of map_at over IoU 0.50:0.05:0.95 (10 thresholds).
double map_range(const std::vector<Detection>& dets,
                 const std::vector<GroundTruth>& gts, int num_classes);

/// Metric-versus-confidence curve for every class with ground truth, plus
/// the unweighted all-classes mean.
struct Curve {
    std::string x_label;
    std::string y_label;
    std::vector<double> thresholds;               // strictly increasing
    std::map<int, std::vector<double>> per_class;  // class id -> values
    std::vector<double> all_classes;

    struct Peak {
        double value = 0.0;
        double threshold = 0.0;
    };

    /// Highest all-classes value; earliest threshold on ties.
    Peak peak() const;
};

/// "0.75 at 0.102" rendering of a curve peak.
std::string format_peak(const Curve::Peak& peak);

struct ConfidenceCurves {
    Curve precision;
    Curve recall;
    Curve f1;
};

/// Sweeps a uniform grid of confidence thresholds (default 1000 points over
/// [0, 1]). Thresholds with no kept detections report precision 1.0.
ConfidenceCurves confidence_curves(const std::vector<Detection>& dets,
                                   const std::vector<GroundTruth>& gts,
                                   int num_classes, double iou_thresh,
                                   int num_thresholds = 1000);

/// Macro-averaged precision and recall over classes with ground truth, for
/// detections with confidence >= conf_thresh.
struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
};

PrecisionRecall precision_recall_at(const std::vector<Detection>& dets,
                                    const std::vector<GroundTruth>& gts,
                                    int num_classes, double conf_thresh,
                                    double iou_thresh);

/// (C+1) x (C+1) detection confusion matrix; index C is background.
/// Rows are predicted classes, columns are true classes.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int num_classes);

    int num_classes() const noexcept { return num_classes_; }
    int background_index() const noexcept { return num_classes_; }

    long long count(int predicted, int truth) const;
    long long& count(int predicted, int truth);

    /// Column-normalized view: each true-class column divided by its sum.
    std::vector<std::vector<double>> normalized() const;

    long long total() const;

private:
    int num_classes_ = 0;
    std::vector<long long> counts_;
};

/// Class-agnostic greedy-by-IoU matching: detections below conf_thresh are
/// discarded, remaining det/gt pairs with IoU >= iou_thresh are matched
/// greedily by descending IoU. Matched pairs increment (predicted, true);
/// unmatched ground truths land in the background row, unmatched detections
/// in the background column.
ConfusionMatrix build_confusion_matrix(const std::vector<Detection>& dets,
                                       const std::vector<GroundTruth>& gts,
                                       int num_classes, double conf_thresh,
                                       double iou_thresh);

struct EpochMetrics {
    int epoch = 0;
    double precision = 0.0;
    double recall = 0.0;
    double map50 = 0.0;
    double map50_95 = 0.0;

    bool operator==(const EpochMetrics&) const = default;
};

/// Epoch with the highest mAP50-95; earliest epoch on ties.
int select_best_epoch(const std::vector<EpochMetrics>& series);

/// Detections wire format: one per line,
/// "image_id class_id x1 y1 x2 y2 confidence" (whitespace-delimited).
std::vector<Detection> parse_detections(const std::string& text);
std::vector<Detection> load_detections(const std::string& path);
std::string write_detections(const std::vector<Detection>& dets);

}  // namespace detkit::metrics
