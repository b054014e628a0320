// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "maskfuse/errors.hpp"
#include "maskfuse/reference.hpp"
#include "maskfuse/suppression.hpp"

using namespace maskfuse;

namespace {

// Rectangular mask filled to its box, so mask IoU equals box IoU exactly.
Detection rect_detection(double score, int x, int y, int w, int h, int img_h = 32,
                         int img_w = 32, int64_t image_id = 1, int category_id = 1) {
    Detection d;
    d.image_id = image_id;
    d.category_id = category_id;
    d.score = score;
    d.box = Box{static_cast<double>(x), static_cast<double>(y), static_cast<double>(w),
                static_cast<double>(h)};
    d.mask = BinaryMask(img_h, img_w);
    for (int r = y; r < y + h; ++r)
        for (int c = x; c < x + w; ++c) d.mask.set(r, c);
    return d;
}

std::vector<Detection> random_detections(std::mt19937& rng, int n) {
    std::uniform_int_distribution<int> coord(0, 24);
    std::uniform_int_distribution<int> side(1, 8);
    std::uniform_real_distribution<double> score(0.01, 1.0);
    std::vector<Detection> dets;
    for (int i = 0; i < n; ++i) {
        dets.push_back(rect_detection(score(rng), coord(rng), coord(rng), side(rng), side(rng)));
    }
    return dets;
}

}  // namespace

TEST_CASE("zero overlap leaves scores unchanged for every method") {
    for (NmsMethod method : {NmsMethod::Hard, NmsMethod::SoftLinear, NmsMethod::SoftGaussian}) {
        NmsConfig cfg;
        cfg.method = method;
        cfg.overlap = OverlapKind::MaskIou;
        const std::vector<Detection> dets = {rect_detection(0.9, 0, 0, 4, 4),
                                             rect_detection(0.7, 20, 20, 4, 4)};
        const auto out = suppress(dets, cfg);
        REQUIRE(out.size() == 2);
        CHECK(out[0].score == 0.9);
        CHECK(out[1].score == 0.7);
    }
}

TEST_CASE("soft-linear decay on identical masks prunes the duplicate") {
    NmsConfig cfg;
    cfg.method = NmsMethod::SoftLinear;
    cfg.overlap = OverlapKind::MaskIou;
    cfg.iou_threshold = 0.3;
    const auto a = rect_detection(0.9, 2, 2, 6, 6);
    auto b = a;
    b.score = 0.8;
    const auto out = suppress({a, b}, cfg);
    REQUIRE(out.size() == 1);  // 0.8 * (1 - 1.0) = 0 < prune threshold
    CHECK(out[0].score == 0.9);
}

TEST_CASE("soft-gaussian decay on identical masks matches the formula") {
    NmsConfig cfg;
    cfg.method = NmsMethod::SoftGaussian;
    cfg.overlap = OverlapKind::MaskIou;
    cfg.sigma = 0.5;
    const auto a = rect_detection(0.9, 2, 2, 6, 6);
    auto b = a;
    b.score = 0.8;
    const auto out = suppress({a, b}, cfg);
    REQUIRE(out.size() == 2);
    CHECK(out[1].score == doctest::Approx(0.8 * std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("hard NMS equals the brute-force reference") {
    std::mt19937 rng(31);
    std::uniform_int_distribution<int> count(1, 50);
    for (OverlapKind overlap : {OverlapKind::BoxIou, OverlapKind::MaskIou}) {
        for (int trial = 0; trial < 50; ++trial) {
            const auto dets = random_detections(rng, count(rng));
            NmsConfig cfg;
            cfg.method = NmsMethod::Hard;
            cfg.overlap = overlap;
            cfg.iou_threshold = 0.4;
            cfg.prune_threshold = 0.0;
            cfg.group = false;
            const auto out = suppress(dets, cfg);
            const auto expected = ref::hard_nms(dets, overlap, 0.4);
            REQUIRE(out.size() == expected.size());
            for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == dets[expected[i]]);
        }
    }
}

TEST_CASE("scores never increase and output is a subset of input") {
    std::mt19937 rng(37);
    for (NmsMethod method : {NmsMethod::Hard, NmsMethod::SoftLinear, NmsMethod::SoftGaussian}) {
        const auto dets = random_detections(rng, 30);
        NmsConfig cfg;
        cfg.method = method;
        const auto out = suppress(dets, cfg);
        CHECK(out.size() <= dets.size());
        for (const auto& o : out) {
            // Identity: same box/mask as some input, score at most the original.
            const auto it = std::find_if(dets.begin(), dets.end(), [&](const Detection& d) {
                return d.box == o.box && d.mask == o.mask && d.score >= o.score;
            });
            CHECK(it != dets.end());
            if (method == NmsMethod::Hard) CHECK(it->score == o.score);
        }
    }
}

TEST_CASE("mask-iou mode on rectangular masks equals box-iou mode") {
    std::mt19937 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const auto dets = random_detections(rng, 20);
        for (NmsMethod method :
             {NmsMethod::Hard, NmsMethod::SoftLinear, NmsMethod::SoftGaussian}) {
            NmsConfig cfg;
            cfg.method = method;
            cfg.overlap = OverlapKind::BoxIou;
            NmsConfig mcfg = cfg;
            mcfg.overlap = OverlapKind::MaskIou;
            CHECK(suppress(dets, cfg) == suppress(dets, mcfg));
        }
    }
}

TEST_CASE("determinism: equal scores break ties by input order") {
    const auto a = rect_detection(0.8, 0, 0, 6, 6);
    const auto b = rect_detection(0.8, 2, 2, 6, 6);  // overlaps a
    NmsConfig cfg;
    cfg.method = NmsMethod::Hard;
    cfg.iou_threshold = 0.1;
    const auto ab = suppress({a, b}, cfg);
    REQUIRE(ab.size() == 1);
    CHECK(ab[0] == a);
    const auto ba = suppress({b, a}, cfg);
    REQUIRE(ba.size() == 1);
    CHECK(ba[0] == b);
}

TEST_CASE("empty input and grouping contract") {
    CHECK(suppress({}, NmsConfig{}).empty());

    auto a = rect_detection(0.9, 0, 0, 4, 4);
    auto b = rect_detection(0.8, 0, 0, 4, 4);
    b.image_id = 2;
    NmsConfig ungrouped;
    ungrouped.group = false;
    CHECK_THROWS_AS(suppress({a, b}, ungrouped), ContractError);

    // Grouped: different images never suppress each other.
    NmsConfig grouped;
    grouped.method = NmsMethod::Hard;
    grouped.iou_threshold = 0.1;
    CHECK(suppress({a, b}, grouped).size() == 2);

    // Different categories never suppress each other either.
    auto c = rect_detection(0.8, 0, 0, 4, 4);
    c.category_id = 2;
    CHECK(suppress({a, c}, grouped).size() == 2);
}

TEST_CASE("config validation") {
    NmsConfig bad;
    bad.method = NmsMethod::SoftGaussian;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(suppress({rect_detection(0.5, 0, 0, 2, 2)}, bad), ConfigError);
    NmsConfig bad_t;
    bad_t.iou_threshold = 1.5;
    CHECK_THROWS_AS(suppress({rect_detection(0.5, 0, 0, 2, 2)}, bad_t), ConfigError);
}
