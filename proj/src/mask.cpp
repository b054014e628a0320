// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#include "maskfuse/mask.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "maskfuse/errors.hpp"

namespace maskfuse {

namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
    if (a.height != b.height || a.width != b.width) {
        throw ShapeError("mask shape mismatch: " + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                         std::to_string(b.width));
    }
}

}  // namespace

RleMask rle_encode(const BinaryMask& mask) {
    RleMask rle;
    rle.height = mask.height;
    rle.width = mask.width;
    const int64_t n = static_cast<int64_t>(mask.height) * mask.width;
    uint8_t cur = 0;  // runs start counting zeros
    uint32_t run = 0;
    for (int c = 0; c < mask.width; ++c) {
        for (int r = 0; r < mask.height; ++r) {
            const uint8_t v = mask.at(r, c);
            if (v == cur) {
                ++run;
            } else {
                rle.counts.push_back(run);
                cur = v;
                run = 1;
            }
        }
    }
    if (n > 0) rle.counts.push_back(run);
    if (rle.counts.empty()) rle.counts.push_back(0);
    return rle;
}

BinaryMask rle_decode(const RleMask& rle) {
    const int64_t n = static_cast<int64_t>(rle.height) * rle.width;
    int64_t total = 0;
    for (uint32_t c : rle.counts) total += c;
    if (total != n) {
        throw InputError("malformed RLE: counts sum to " + std::to_string(total) +
                         ", expected " + std::to_string(n));
    }
    BinaryMask mask(rle.height, rle.width);
    int64_t pos = 0;
    uint8_t val = 0;
    for (uint32_t run : rle.counts) {
        if (val) {
            for (uint32_t k = 0; k < run; ++k) {
                const int64_t p = pos + k;
                const int r = static_cast<int>(p % rle.height);
                const int c = static_cast<int>(p / rle.height);
                mask.set(r, c);
            }
        }
        pos += run;
        val ^= 1;
    }
    return mask;
}

int64_t mask_area(const BinaryMask& a) {
    int64_t area = 0;
    for (uint8_t b : a.bits) area += b;
    return area;
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    BinaryMask out(a.height, a.width);
    for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] | b.bits[i];
    return out;
}

BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    BinaryMask out(a.height, a.width);
    for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] & b.bits[i];
    return out;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    int64_t inter = 0;
    int64_t uni = 0;
    const size_t n = a.bits.size();
    for (size_t i = 0; i < n; ++i) {
        inter += a.bits[i] & b.bits[i];
        uni += a.bits[i] | b.bits[i];
    }
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

Box bbox_from_mask(const BinaryMask& mask) {
    int rmin = mask.height, rmax = -1, cmin = mask.width, cmax = -1;
    for (int r = 0; r < mask.height; ++r) {
        const uint8_t* row = mask.bits.data() + static_cast<size_t>(r) * mask.width;
        for (int c = 0; c < mask.width; ++c) {
            if (row[c]) {
                rmin = std::min(rmin, r);
                rmax = std::max(rmax, r);
                cmin = std::min(cmin, c);
                cmax = std::max(cmax, c);
            }
        }
    }
    if (rmax < 0) return Box{};  // empty mask
    return Box{static_cast<double>(cmin), static_cast<double>(rmin),
               static_cast<double>(cmax - cmin + 1), static_cast<double>(rmax - rmin + 1)};
}

double bbox_iou(const Box& a, const Box& b) {
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

BinaryMask mask_resize(const BinaryMask& mask, int new_h, int new_w) {
    BinaryMask out(std::max(new_h, 0), std::max(new_w, 0));
    if (out.empty_grid() || mask.empty_grid()) return out;
    for (int r = 0; r < out.height; ++r) {
        int sr = static_cast<int>(std::floor((r + 0.5) * mask.height / out.height));
        sr = std::clamp(sr, 0, mask.height - 1);
        for (int c = 0; c < out.width; ++c) {
            int sc = static_cast<int>(std::floor((c + 0.5) * mask.width / out.width));
            sc = std::clamp(sc, 0, mask.width - 1);
            out.set(r, c, mask.at(sr, sc) != 0);
        }
    }
    return out;
}

std::vector<double> mask_iou_matrix(const std::vector<const BinaryMask*>& a,
                                    const std::vector<const BinaryMask*>& b) {
    const int64_t na = static_cast<int64_t>(a.size());
    const int64_t nb = static_cast<int64_t>(b.size());
    std::vector<double> out(static_cast<size_t>(na * nb), 0.0);
#pragma omp parallel for schedule(dynamic) collapse(2)
    for (int64_t i = 0; i < na; ++i) {
        for (int64_t j = 0; j < nb; ++j) {
            out[static_cast<size_t>(i * nb + j)] = mask_iou(*a[i], *b[j]);
        }
    }
    return out;
}

}  // namespace maskfuse
