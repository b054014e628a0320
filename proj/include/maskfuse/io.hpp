// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "maskfuse/eval.hpp"

namespace maskfuse::io {

// All interchange is JSON. Ground truth uses the COCO annotation layout with
// uncompressed column-major RLE under "segmentation": {"size":[H,W],"counts":[...]}.
// Predictions are arrays of {image_id, category_id, score, bbox, segmentation};
// semantic maps are arrays of {image_id, segmentation}.

GroundTruth load_ground_truth(const std::string& path);
std::vector<Detection> load_predictions(const std::string& path);
std::vector<SemanticMap> load_semantic_maps(const std::string& path);

void save_predictions(const std::string& path, const std::vector<Detection>& dets);
void save_report(const std::string& path, const MetricsReport& report);

// Aligned plain-text table: datasets as columns, mAP/mAR rows, Average and
// (mAP+mAR)/2 columns. Percentages rounded to two decimals.
std::string render_report_table(const MetricsReport& report);

// Non-throwing schema scan; each diagnostic names the file and record.
std::vector<std::string> scan_prediction_file(const std::string& path,
                                              const GroundTruth* gt = nullptr);
std::vector<std::string> scan_ground_truth_file(const std::string& path);
std::vector<std::string> scan_semantic_file(const std::string& path, const GroundTruth* gt = nullptr);

}  // namespace maskfuse::io
