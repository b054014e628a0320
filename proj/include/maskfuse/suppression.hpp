// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "maskfuse/mask.hpp"

namespace maskfuse {

// One predicted instance.
struct Detection {
    int64_t image_id = 0;
    int category_id = 0;
    double score = 0.0;
    Box box;
    BinaryMask mask;

    bool operator==(const Detection&) const = default;
};

enum class NmsMethod { Hard, SoftLinear, SoftGaussian };
enum class OverlapKind { BoxIou, MaskIou };

struct NmsConfig {
    NmsMethod method = NmsMethod::Hard;
    OverlapKind overlap = OverlapKind::BoxIou;
    double iou_threshold = 0.3;   // Nt
    double sigma = 0.5;           // gaussian decay only
    double prune_threshold = 0.001;
    // Group internally by (image_id, category_id). When off, all detections
    // must share one image_id (ContractError otherwise) and one greedy pass
    // runs over the whole list regardless of category.
    bool group = true;
};

// Greedy score-decay suppression. Repeatedly emits the highest-scoring
// remaining detection M, then for each remaining d with ov = IoU(M, d):
//   hard          -> drop d if ov > Nt
//   soft-linear   -> score(d) *= (1 - ov) if ov > Nt
//   soft-gaussian -> score(d) *= exp(-ov^2 / sigma)
// Detections falling below prune_threshold are dropped. Output is sorted by
// final score descending, ties broken by input index.
std::vector<Detection> suppress(const std::vector<Detection>& detections, const NmsConfig& cfg);

}  // namespace maskfuse
