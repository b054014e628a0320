// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace maskfuse {

// Dense row-major binary mask. Masks stay dense in memory; RLE is an I/O format.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> bits;  // exactly height*width entries, 0 or 1

    BinaryMask() = default;
    BinaryMask(int h, int w) : height(h), width(w), bits(static_cast<size_t>(h) * w, 0) {}

    uint8_t at(int r, int c) const { return bits[static_cast<size_t>(r) * width + c]; }
    void set(int r, int c, bool v = true) { bits[static_cast<size_t>(r) * width + c] = v ? 1 : 0; }
    bool empty_grid() const { return height == 0 || width == 0; }

    bool operator==(const BinaryMask&) const = default;
};

// COCO uncompressed RLE: column-major (Fortran order) run lengths,
// first run counts zeros. A leading zero count marks a mask starting with 1.
struct RleMask {
    int height = 0;
    int width = 0;
    std::vector<uint32_t> counts;

    bool operator==(const RleMask&) const = default;
};

// Axis-aligned box in pixel coordinates, COCO [x, y, w, h] layout.
struct Box {
    double x = 0;
    double y = 0;
    double w = 0;
    double h = 0;

    double area() const { return w * h; }
    bool operator==(const Box&) const = default;
};

RleMask rle_encode(const BinaryMask& mask);

// Throws InputError when sum(counts) != height*width.
BinaryMask rle_decode(const RleMask& rle);

// |a|, element-wise OR / AND. Binary ops throw ShapeError on dimension mismatch.
int64_t mask_area(const BinaryMask& a);
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b);

// |a∩b| / |a∪b|; 0 when the union is empty. Throws ShapeError on mismatch.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

// Tightest box containing all true pixels; empty mask gives a zero-area box at the origin.
Box bbox_from_mask(const BinaryMask& mask);

// Rectangle IoU; 0 when the union area is 0.
double bbox_iou(const Box& a, const Box& b);

// Nearest-neighbor resample. Source pixel for output (r,c) is
// (floor((r+0.5)*H/new_h), floor((c+0.5)*W/new_w)).
BinaryMask mask_resize(const BinaryMask& mask, int new_h, int new_w);

// IoU of every pair (a_i, b_j), parallelized over pairs. Row-major n_a x n_b.
std::vector<double> mask_iou_matrix(const std::vector<const BinaryMask*>& a,
                                    const std::vector<const BinaryMask*>& b);

}  // namespace maskfuse
