// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#include "maskfuse/reference.hpp"

#include <algorithm>
#include <numeric>

namespace maskfuse::ref {

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    int64_t inter = 0, uni = 0;
    for (int r = 0; r < a.height; ++r) {
        for (int c = 0; c < a.width; ++c) {
            const bool av = a.at(r, c) != 0;
            const bool bv = b.at(r, c) != 0;
            if (av && bv) ++inter;
            if (av || bv) ++uni;
        }
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<size_t> hard_nms(const std::vector<Detection>& dets, OverlapKind overlap,
                             double iou_threshold) {
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return dets[a].score > dets[b].score; });

    std::vector<size_t> kept;
    for (size_t d : order) {
        bool suppressed = false;
        for (size_t k : kept) {
            const double ov = overlap == OverlapKind::BoxIou
                                  ? bbox_iou(dets[k].box, dets[d].box)
                                  : ref::mask_iou(dets[k].mask, dets[d].mask);
            if (ov > iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

std::vector<double> mask_iou_matrix(const std::vector<const BinaryMask*>& a,
                                    const std::vector<const BinaryMask*>& b) {
    std::vector<double> out(a.size() * b.size(), 0.0);
    for (size_t i = 0; i < a.size(); ++i) {
        for (size_t j = 0; j < b.size(); ++j) {
            out[i * b.size() + j] = ref::mask_iou(*a[i], *b[j]);
        }
    }
    return out;
}

}  // namespace maskfuse::ref
