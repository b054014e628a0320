// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "maskfuse/suppression.hpp"

namespace maskfuse {

// All detections from one model (or one TTA scale) with its ensemble weight.
struct PredictionSet {
    std::string model_id;
    double weight = 1.0;  // confidence multiplier, >= 0
    std::vector<Detection> detections;
};

enum class WeightsMode { Explicit, MapNormalized };

struct EnsembleConfig {
    WeightsMode weights_mode = WeightsMode::Explicit;
    std::map<std::string, double> model_maps;  // model_id -> mask mAP, map-normalized mode
    NmsConfig nms = {NmsMethod::Hard, OverlapKind::MaskIou, 0.5, 0.5, 0.001, true};
};

// weight_m = mAP_m / max_k mAP_k. The strongest model keeps its calibration,
// weaker models' confidences shrink proportionally.
std::map<std::string, double> derive_weights(const std::map<std::string, double>& model_maps);

// Reweight every detection's score by its set's weight (clamped to [0,1]),
// pool, then mask-IoU NMS per (image, category). Pooled order is canonical
// (score desc, model_id, index within set), so permuting sets cannot change
// the result.
std::vector<Detection> ensemble_fuse(const std::vector<PredictionSet>& sets,
                                     const EnsembleConfig& cfg);

// (height, width) a TTA prediction set was inferred at.
using ScaleSize = std::pair<int, int>;

// Resizes every mask and rescales every box to (original_h, original_w),
// then fuses all scales through ensemble_fuse with equal weights 1.0.
std::vector<Detection> tta_merge(const std::vector<std::pair<ScaleSize, PredictionSet>>& scaled_sets,
                                 int original_h, int original_w, const EnsembleConfig& cfg);

}  // namespace maskfuse
