// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "maskfuse/suppression.hpp"

namespace maskfuse {

// Binary defect-vs-background map for one image.
struct SemanticMap {
    int64_t image_id = 0;
    BinaryMask mask;  // true = defect pixel
};

enum class RegionRule { BboxClip, WholeImage };

struct SemanticFusionConfig {
    double tau1 = 0.5;  // bbox-confidence gate
    RegionRule region_rule = RegionRule::BboxClip;
};

// Supplements instance masks with semantic defect pixels. For each instance
// with score > tau1: new_mask = mask ∪ (semantic ∩ region), where region is
// the bbox interior (bbox-clip) or the whole image; the box is recomputed
// from the fused mask. Instances at or below tau1 pass through unchanged.
// Order and count are preserved.
std::vector<Detection> fuse_semantic(const std::vector<Detection>& instances,
                                     const SemanticMap& semantic,
                                     const SemanticFusionConfig& cfg);

}  // namespace maskfuse
