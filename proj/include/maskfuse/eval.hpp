// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maskfuse/semantic_fusion.hpp"
#include "maskfuse/suppression.hpp"

namespace maskfuse {

struct GtImage {
    int64_t id = 0;
    int height = 0;
    int width = 0;
};

struct GtCategory {
    int id = 0;
    std::string name;
};

struct GtAnnotation {
    int64_t image_id = 0;
    int category_id = 0;
    RleMask mask;
    Box box;
};

// Annotated instances for one dataset.
struct GroundTruth {
    std::vector<GtImage> images;
    std::vector<GtCategory> categories;
    std::vector<GtAnnotation> annotations;
};

struct EvalParams {
    std::vector<double> iou_thresholds = {0.50, 0.55, 0.60, 0.65, 0.70,
                                          0.75, 0.80, 0.85, 0.90, 0.95};
    int max_detections = 100;
    OverlapKind overlap = OverlapKind::MaskIou;
    static constexpr int kRecallPoints = 101;  // recall sampled at 0.00, 0.01, ..., 1.00
};

// Greedy matching outcome for one (image, category) cell at one IoU threshold.
struct MatchRecords {
    std::vector<int> det_match;       // per detection: matched gt index or -1
    std::vector<uint8_t> gt_matched;  // per ground truth
};

// Matches detections (already sorted by score descending and truncated to
// max_detections) against ground truths: each detection takes the unmatched
// gt with the highest IoU >= iou_t; each gt matches at most once.
MatchRecords match_detections(const std::vector<double>& iou_matrix, size_t n_dets, size_t n_gts,
                              double iou_t);

// 101-point interpolated AP from flat score/match lists for one category at
// one threshold. n_gt == 0 yields 0 (callers exclude such categories).
double average_precision(const std::vector<double>& det_scores,
                         const std::vector<uint8_t>& det_is_tp, size_t n_gt);

struct EvalResult {
    double map_percent = 0.0;
    double mar_percent = 0.0;
};

// Mask (or box) mAP/mAR over the threshold sweep, averaged over categories
// that have ground-truth instances. Throws InputError on unknown ids.
EvalResult evaluate(const std::vector<Detection>& predictions, const GroundTruth& gt,
                    const EvalParams& params);

// Two-class (defect, background) IoU aggregated over all pixels of all
// images, averaged over the classes present, in percent. Maps are paired by
// image_id; an unpaired image throws InputError.
double semantic_mean_iou(const std::vector<SemanticMap>& pred_maps,
                         const std::vector<SemanticMap>& gt_maps);

struct DatasetMetrics {
    double map_percent = 0.0;
    double mar_percent = 0.0;
};

struct MetricsReport {
    std::map<std::string, DatasetMetrics> per_dataset;
    double average_map = 0.0;
    double average_mar = 0.0;
    double combined = 0.0;  // (average_map + average_mar) / 2
    std::map<std::string, double> semantic_miou;
};

// Unweighted arithmetic means across datasets.
MetricsReport aggregate_report(const std::map<std::string, DatasetMetrics>& per_dataset,
                               const std::map<std::string, double>& semantic_mious = {});

}  // namespace maskfuse
