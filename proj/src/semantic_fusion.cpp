// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#include "maskfuse/semantic_fusion.hpp"

#include <algorithm>
#include <cmath>

#include "maskfuse/errors.hpp"

namespace maskfuse {

namespace {

Detection fuse_one(const Detection& inst, const BinaryMask& semantic, RegionRule rule) {
    Detection out = inst;
    int r0 = 0, r1 = semantic.height, c0 = 0, c1 = semantic.width;
    if (rule == RegionRule::BboxClip) {
        r0 = std::max(0, static_cast<int>(std::floor(inst.box.y)));
        r1 = std::min(semantic.height, static_cast<int>(std::ceil(inst.box.y + inst.box.h)));
        c0 = std::max(0, static_cast<int>(std::floor(inst.box.x)));
        c1 = std::min(semantic.width, static_cast<int>(std::ceil(inst.box.x + inst.box.w)));
    }
    for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
            if (semantic.at(r, c)) out.mask.set(r, c);
        }
    }
    out.box = bbox_from_mask(out.mask);
    return out;
}

}  // namespace

std::vector<Detection> fuse_semantic(const std::vector<Detection>& instances,
                                     const SemanticMap& semantic,
                                     const SemanticFusionConfig& cfg) {
    if (cfg.tau1 < 0.0 || cfg.tau1 > 1.0) throw ConfigError("tau1 must be in [0,1]");
    // Validate before the parallel region; exceptions may not cross it.
    for (const Detection& inst : instances) {
        if (inst.image_id != semantic.image_id)
            throw ContractError("instance image_id does not match semantic map");
        if (inst.mask.height != semantic.mask.height || inst.mask.width != semantic.mask.width)
            throw ShapeError("instance mask dimensions disagree with semantic map");
    }
    std::vector<Detection> out(instances.size());
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < static_cast<int64_t>(instances.size()); ++i) {
        const Detection& inst = instances[static_cast<size_t>(i)];
        out[static_cast<size_t>(i)] =
            inst.score > cfg.tau1 ? fuse_one(inst, semantic.mask, cfg.region_rule) : inst;
    }
    return out;
}

}  // namespace maskfuse
