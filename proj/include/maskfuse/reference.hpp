// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "maskfuse/suppression.hpp"

// Plain serial implementations kept as independent baselines for the tests
// and the benchmark. They share no code path with the OpenMP kernels.
namespace maskfuse::ref {

// Naive double-loop pixel counter.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

// O(n^2) hard NMS: a detection survives iff no higher-scoring surviving
// detection overlaps it beyond the threshold. Single group, no rescoring.
std::vector<size_t> hard_nms(const std::vector<Detection>& dets, OverlapKind overlap,
                             double iou_threshold);

// Pairwise IoU of every (a_i, b_j), serial.
std::vector<double> mask_iou_matrix(const std::vector<const BinaryMask*>& a,
                                    const std::vector<const BinaryMask*>& b);

}  // namespace maskfuse::ref
