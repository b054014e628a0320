// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
//
// Compares the OpenMP kernels against the serial reference implementations.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "maskfuse/mask.hpp"
#include "maskfuse/reference.hpp"
#include "maskfuse/suppression.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace maskfuse;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

BinaryMask random_blob(std::mt19937& rng, int h, int w) {
    std::uniform_int_distribution<int> cy(4, h - 5), cx(4, w - 5), radius(3, h / 4);
    BinaryMask m(h, w);
    const int y = cy(rng), x = cx(rng), ry = radius(rng), rx = radius(rng);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double dy = (r - y) / static_cast<double>(ry);
            const double dx = (c - x) / static_cast<double>(rx);
            if (dy * dy + dx * dx <= 1.0) m.set(r, c);
        }
    }
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    int n = argc > 1 ? std::atoi(argv[1]) : 160;
    const int h = 256, w = 256;
    std::mt19937 rng(12345);

    std::vector<BinaryMask> masks;
    masks.reserve(n);
    for (int i = 0; i < n; ++i) masks.push_back(random_blob(rng, h, w));
    std::vector<const BinaryMask*> ptrs;
    for (const auto& m : masks) ptrs.push_back(&m);

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (no OpenMP)\n");
#endif
    std::printf("%d masks of %dx%d\n\n", n, h, w);

    auto t0 = std::chrono::steady_clock::now();
    const auto serial = ref::mask_iou_matrix(ptrs, ptrs);
    const double t_serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const auto parallel = mask_iou_matrix(ptrs, ptrs);
    const double t_parallel = seconds_since(t0);

    bool equal = serial == parallel;
    std::printf("iou matrix %dx%d: serial %.3fs, parallel %.3fs, speedup %.2fx, equal: %s\n", n,
                n, t_serial, t_parallel, t_serial / t_parallel, equal ? "yes" : "NO");

    // Hard NMS over many (image, category) groups.
    std::uniform_real_distribution<double> score(0.01, 1.0);
    std::vector<Detection> dets;
    for (int i = 0; i < n; ++i) {
        Detection d;
        d.image_id = i % 16;
        d.category_id = 1;
        d.score = score(rng);
        d.mask = masks[i];
        d.box = bbox_from_mask(d.mask);
        dets.push_back(std::move(d));
    }
    NmsConfig cfg;
    cfg.method = NmsMethod::Hard;
    cfg.overlap = OverlapKind::MaskIou;
    cfg.iou_threshold = 0.5;
    cfg.prune_threshold = 0.0;

    t0 = std::chrono::steady_clock::now();
    const auto kept = suppress(dets, cfg);
    const double t_nms = seconds_since(t0);
    std::printf("grouped mask-IoU NMS on %d detections: %.3fs, %zu kept\n", n, t_nms,
                kept.size());

    return equal ? 0 : 1;
}
