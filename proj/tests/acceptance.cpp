// Copyright (c) maskfuse contributors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one pass/fail line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "maskfuse/ensemble.hpp"
#include "maskfuse/eval.hpp"
#include "maskfuse/io.hpp"
#include "maskfuse/pipeline.hpp"
#include "maskfuse/reference.hpp"
#include "maskfuse/semantic_fusion.hpp"

using namespace maskfuse;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& title, double budget_seconds,
               const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    const auto start = std::chrono::steady_clock::now();
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > budget_seconds) {
        ok = false;
        detail += " [over time budget: " + std::to_string(elapsed) + "s]";
    }
    std::printf("%s  criterion %d: %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", number,
                title.c_str(), elapsed, detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

Detection rect_detection(double score, int x, int y, int w, int h, int img = 32) {
    Detection d;
    d.image_id = 1;
    d.category_id = 1;
    d.score = score;
    d.box = Box{static_cast<double>(x), static_cast<double>(y), static_cast<double>(w),
                static_cast<double>(h)};
    d.mask = BinaryMask(img, img);
    for (int r = y; r < y + h; ++r)
        for (int c = x; c < x + w; ++c) d.mask.set(r, c);
    return d;
}

BinaryMask random_mask(std::mt19937& rng, int max_side) {
    std::uniform_int_distribution<int> side(1, max_side);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    BinaryMask m(side(rng), side(rng));
    const double density = u(rng);
    for (auto& b : m.bits) b = u(rng) < density ? 1 : 0;
    return m;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

// --- criteria ---------------------------------------------------------

bool aggregation_arithmetic(std::string& detail) {
    struct Row {
        std::vector<double> maps, mars;
        double exp_map, exp_mar, exp_combined;
    };
    const std::vector<Row> rows = {
        // HTC
        {{42.7, 54.4, 28.2, 27.7, 59.1, 36.2, 30.2, 44.0, 43.8, 81.5, 93.9, 23.0, 58.3, 38.2},
         {56.1, 69.8, 45.2, 44.4, 72.1, 55.9, 54.1, 58.0, 56.9, 86.9, 96.1, 39.0, 69.4, 52.1},
         47.20, 61.14, 54.17},
        // R50
        {{31.6, 41.5, 21.4, 10.7, 54.4, 21.6, 23.0, 40.0, 38.6, 80.3, 92.7, 18.5, 55.7, 32.4},
         {41.4, 52.1, 34.5, 23.4, 63.7, 32.6, 37.5, 55.1, 50.0, 85.1, 94.9, 26.4, 62.8, 40.9},
         40.17, 50.03, 45.10},
        // final fused row
        {{42.8, 54.4, 28.2, 29.1, 63.4, 38.4, 30.2, 44.9, 51.2, 81.6, 93.9, 23.5, 59.0, 38.2},
         {63.0, 75.2, 49.8, 49.2, 78.7, 59.5, 58.5, 71.0, 68.5, 90.7, 97.5, 45.6, 71.7, 54.6},
         48.49, 66.71, 57.60},
    };
    for (size_t r = 0; r < rows.size(); ++r) {
        std::map<std::string, DatasetMetrics> per;
        for (size_t i = 0; i < rows[r].maps.size(); ++i) {
            char name[8];
            std::snprintf(name, sizeof(name), "d%02zu", i);
            per[name] = {rows[r].maps[i], rows[r].mars[i]};
        }
        const auto rep = aggregate_report(per);
        const double mar_tol = r == 0 ? 0.01 : 0.05;
        if (!near(rep.average_mar, rows[r].exp_mar, mar_tol) ||
            !near(rep.average_map, rows[r].exp_map, 0.05) ||
            !near(rep.combined, rows[r].exp_combined, 0.05)) {
            detail = "row " + std::to_string(r) + " got mAP " + std::to_string(rep.average_map) +
                     " mAR " + std::to_string(rep.average_mar) + " combined " +
                     std::to_string(rep.combined);
            return false;
        }
    }
    return true;
}

bool evaluator_oracle(std::string& detail) {
    const std::string dir = std::string(FIXTURE_DIR) + "/eval";
    const auto gt = io::load_ground_truth(dir + "/gt.json");
    const auto preds = io::load_predictions(dir + "/pred.json");
    std::ifstream f(dir + "/expected.json");
    const auto expected = nlohmann::json::parse(f);
    const auto r = evaluate(preds, gt, EvalParams{});
    const double em = expected.at("mAP").get<double>();
    const double er = expected.at("mAR").get<double>();
    if (!near(r.map_percent, em, 1e-4) || !near(r.mar_percent, er, 1e-4)) {
        detail = "got mAP " + std::to_string(r.map_percent) + " vs " + std::to_string(em) +
                 ", mAR " + std::to_string(r.mar_percent) + " vs " + std::to_string(er);
        return false;
    }
    return true;
}

bool mask_kernel_properties(std::string& detail) {
    std::mt19937 rng(101);
    for (int i = 0; i < 1000; ++i) {
        const BinaryMask m = random_mask(rng, 64);
        if (rle_decode(rle_encode(m)) != m) {
            detail = "round-trip failed at case " + std::to_string(i);
            return false;
        }
    }
    for (int i = 0; i < 1000; ++i) {
        BinaryMask a = random_mask(rng, 16);
        BinaryMask b = random_mask(rng, 16);
        b.height = a.height;
        b.width = a.width;
        b.bits.resize(a.bits.size(), 0);
        if (mask_iou(a, b) != ref::mask_iou(a, b)) {
            detail = "IoU oracle mismatch at case " + std::to_string(i);
            return false;
        }
        if (mask_area(mask_union(a, b)) + mask_area(mask_intersection(a, b)) !=
            mask_area(a) + mask_area(b)) {
            detail = "set-algebra identity failed at case " + std::to_string(i);
            return false;
        }
    }
    return true;
}

bool suppression_oracle(std::string& detail) {
    std::mt19937 rng(103);
    std::uniform_int_distribution<int> count(1, 50), coord(0, 24), side(1, 8);
    std::uniform_real_distribution<double> score(0.01, 1.0);

    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Detection> dets;
        const int n = count(rng);
        for (int i = 0; i < n; ++i)
            dets.push_back(rect_detection(score(rng), coord(rng), coord(rng), side(rng),
                                          side(rng)));
        const OverlapKind overlap = trial % 2 ? OverlapKind::BoxIou : OverlapKind::MaskIou;
        NmsConfig cfg;
        cfg.method = NmsMethod::Hard;
        cfg.overlap = overlap;
        cfg.iou_threshold = 0.4;
        cfg.prune_threshold = 0.0;
        cfg.group = false;
        const auto out = suppress(dets, cfg);
        const auto expected = ref::hard_nms(dets, overlap, 0.4);
        if (out.size() != expected.size()) {
            detail = "hard NMS size mismatch at trial " + std::to_string(trial);
            return false;
        }
        for (size_t i = 0; i < out.size(); ++i) {
            if (!(out[i] == dets[expected[i]])) {
                detail = "hard NMS order mismatch at trial " + std::to_string(trial);
                return false;
            }
        }
    }

    // Soft rescoring vs direct formula evaluation.
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Detection> dets;
        const int n = 1 + trial % 10;
        for (int i = 0; i < n; ++i)
            dets.push_back(rect_detection(score(rng), coord(rng), coord(rng), side(rng),
                                          side(rng)));
        for (NmsMethod method : {NmsMethod::SoftLinear, NmsMethod::SoftGaussian}) {
            NmsConfig cfg;
            cfg.method = method;
            cfg.overlap = OverlapKind::BoxIou;
            cfg.prune_threshold = 0.0;
            cfg.group = false;
            const auto out = suppress(dets, cfg);

            // Direct evaluation of the decay recurrence.
            std::vector<double> s(dets.size());
            std::vector<bool> used(dets.size(), false);
            for (size_t i = 0; i < dets.size(); ++i) s[i] = dets[i].score;
            std::vector<std::pair<size_t, double>> emitted;
            for (size_t step = 0; step < dets.size(); ++step) {
                size_t m = dets.size();
                for (size_t i = 0; i < dets.size(); ++i)
                    if (!used[i] && (m == dets.size() || s[i] > s[m])) m = i;
                used[m] = true;
                emitted.emplace_back(m, s[m]);
                for (size_t i = 0; i < dets.size(); ++i) {
                    if (used[i]) continue;
                    const double ov = bbox_iou(dets[m].box, dets[i].box);
                    if (method == NmsMethod::SoftLinear) {
                        if (ov > cfg.iou_threshold) s[i] *= (1.0 - ov);
                    } else {
                        s[i] *= std::exp(-(ov * ov) / cfg.sigma);
                    }
                }
            }
            std::sort(emitted.begin(), emitted.end(), [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
            });
            if (out.size() != emitted.size()) {
                detail = "soft NMS size mismatch at trial " + std::to_string(trial);
                return false;
            }
            for (size_t i = 0; i < out.size(); ++i) {
                if (!near(out[i].score, emitted[i].second, 1e-12)) {
                    detail = "soft rescoring mismatch at trial " + std::to_string(trial);
                    return false;
                }
                if (out[i].score > dets[emitted[i].first].score) {
                    detail = "score monotonicity violated at trial " + std::to_string(trial);
                    return false;
                }
            }
        }
    }
    return true;
}

bool semantic_fusion_invariants(std::string& detail) {
    // Worked 4x4 examples.
    Detection inst;
    inst.image_id = 1;
    inst.category_id = 1;
    inst.score = 0.9;
    inst.mask = BinaryMask(4, 4);
    inst.mask.set(1, 1);
    inst.mask.set(1, 2);
    inst.box = Box{1, 1, 2, 1};
    SemanticMap sem;
    sem.image_id = 1;
    sem.mask = BinaryMask(4, 4);
    sem.mask.set(1, 2);
    sem.mask.set(2, 1);
    sem.mask.set(3, 3);

    const auto clipped = fuse_semantic({inst}, sem, {0.5, RegionRule::BboxClip});
    BinaryMask exp_clip(4, 4);
    exp_clip.set(1, 1);
    exp_clip.set(1, 2);
    if (clipped[0].mask != exp_clip || !(clipped[0].box == Box{1, 1, 2, 1})) {
        detail = "bbox-clip worked example mismatch";
        return false;
    }
    const auto whole = fuse_semantic({inst}, sem, {0.5, RegionRule::WholeImage});
    BinaryMask exp_whole = exp_clip;
    exp_whole.set(2, 1);
    exp_whole.set(3, 3);
    if (whole[0].mask != exp_whole || !(whole[0].box == Box{1, 1, 3, 3})) {
        detail = "whole-image worked example mismatch";
        return false;
    }

    // Randomized invariants.
    std::mt19937 rng(107);
    std::uniform_int_distribution<int> coord(0, 11), side(1, 4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Detection> instances;
        for (int i = 0; i < 8; ++i) {
            Detection d;
            d.image_id = 1;
            d.category_id = 1;
            d.score = u(rng);
            d.mask = BinaryMask(16, 16);
            const int r0 = coord(rng), c0 = coord(rng), h = side(rng), w = side(rng);
            for (int r = r0; r < r0 + h; ++r)
                for (int c = c0; c < c0 + w; ++c) d.mask.set(r, c);
            d.box = bbox_from_mask(d.mask);
            instances.push_back(std::move(d));
        }
        SemanticMap map;
        map.image_id = 1;
        map.mask = BinaryMask(16, 16);
        for (auto& b : map.mask.bits) b = u(rng) < 0.3 ? 1 : 0;

        for (RegionRule rule : {RegionRule::BboxClip, RegionRule::WholeImage}) {
            const SemanticFusionConfig cfg{0.5, rule};
            const auto out = fuse_semantic(instances, map, cfg);
            if (out.size() != instances.size()) {
                detail = "count preservation failed";
                return false;
            }
            for (size_t i = 0; i < out.size(); ++i) {
                if (instances[i].score <= cfg.tau1) {
                    if (!(out[i] == instances[i])) {
                        detail = "threshold gate failed";
                        return false;
                    }
                    continue;
                }
                for (size_t p = 0; p < instances[i].mask.bits.size(); ++p) {
                    if (instances[i].mask.bits[p] && !out[i].mask.bits[p]) {
                        detail = "superset property failed";
                        return false;
                    }
                }
            }
            if (!(fuse_semantic(out, map, cfg) == out)) {
                detail = "idempotence failed";
                return false;
            }
        }
    }
    return true;
}

bool ensemble_behavior(std::string& detail) {
    const auto w = derive_weights({{"HTC", 47.20}, {"R50", 40.17}, {"ConvNext", 41.86}});
    if (!near(w.at("HTC"), 1.0, 1e-12) || !near(w.at("R50"), 0.8510, 1e-4) ||
        !near(w.at("ConvNext"), 0.8869, 1e-4)) {
        detail = "derived weights mismatch";
        return false;
    }

    // Single-model identity reduction.
    std::mt19937 rng(109);
    std::uniform_int_distribution<int> coord(0, 20);
    std::uniform_real_distribution<double> score(0.1, 1.0);
    PredictionSet only;
    only.model_id = "only";
    for (int i = 0; i < 25; ++i)
        only.detections.push_back(rect_detection(score(rng), coord(rng), coord(rng), 6, 6));
    const EnsembleConfig cfg;
    if (!(ensemble_fuse({only}, cfg) == suppress(only.detections, cfg.nms))) {
        detail = "single-model reduction failed";
        return false;
    }

    // Disjoint-contribution fixture: fused matches strictly more ground truth.
    const auto gt1 = rect_detection(1.0, 0, 0, 5, 5);
    const auto gt2 = rect_detection(1.0, 12, 12, 5, 5);
    const auto gt3 = rect_detection(1.0, 24, 24, 5, 5);
    PredictionSet m1{"m1", 1.0, {rect_detection(0.9, 0, 0, 5, 5)}};
    PredictionSet m2{"m2", 0.9, {rect_detection(0.8, 12, 12, 5, 5)}};
    PredictionSet m3{"m3", 0.8, {rect_detection(0.7, 24, 24, 5, 5)}};
    const auto fused = ensemble_fuse({m1, m2, m3}, EnsembleConfig{});
    const auto matched = [&](const std::vector<Detection>& dets) {
        int n = 0;
        for (const auto* g : {&gt1, &gt2, &gt3}) {
            for (const auto& d : dets)
                if (mask_iou(d.mask, g->mask) >= 0.5) {
                    ++n;
                    break;
                }
        }
        return n;
    };
    const int best_single = std::max(
        {matched(m1.detections), matched(m2.detections), matched(m3.detections)});
    if (!(matched(fused) > best_single)) {
        detail = "fused matched-GT count not strictly greater than best single model";
        return false;
    }
    return true;
}

bool end_to_end_determinism(std::string& detail) {
    const std::string config = std::string(FIXTURE_DIR) + "/pipeline/config.json";
    const fs::path work = fs::temp_directory_path() / "maskfuse_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    const std::vector<std::pair<std::string, int>> runs = {
        {"run1", 1}, {"run1b", 1}, {"run8", 8}};
    for (const auto& [tag, jobs] : runs) {
        std::ostringstream cmd;
        cmd << '"' << MASKFUSE_BIN << '"' << " run --config \"" << config << "\" --jobs "
            << jobs << " > /dev/null";
        const fs::path out_dir = work / tag;
        fs::create_directories(out_dir);
        const std::string full = "cd \"" + out_dir.string() + "\" && " + cmd.str();
        if (std::system(full.c_str()) != 0) {
            detail = "maskfuse run failed for " + tag;
            return false;
        }
    }

    for (const char* file : {"alpha_fused.json", "beta_fused.json", "report.json", "report.txt"}) {
        const std::string a = slurp(work / "run1" / "out" / file);
        const std::string b = slurp(work / "run1b" / "out" / file);
        const std::string c = slurp(work / "run8" / "out" / file);
        if (a.empty() || a != b || a != c) {
            detail = std::string("output differs or missing: ") + file;
            return false;
        }
    }
    fs::remove_all(work);
    return true;
}

}  // namespace

int main() {
    criterion(1, "aggregation arithmetic reproduces the published row averages", 1.0,
              aggregation_arithmetic);
    criterion(2, "evaluator matches the frozen reference fixture within 1e-4", 10.0,
              evaluator_oracle);
    criterion(3, "mask kernel property suite (1000+ random cases)", 10.0,
              mask_kernel_properties);
    criterion(4, "suppression matches brute-force and direct-formula oracles", 30.0,
              suppression_oracle);
    criterion(5, "semantic fusion invariants and worked examples", 10.0,
              semantic_fusion_invariants);
    criterion(6, "ensemble weights, identity reduction, recall fixture", 10.0,
              ensemble_behavior);
    criterion(7, "end-to-end determinism across --jobs 1 and --jobs 8", 30.0,
              end_to_end_determinism);
    return g_failures == 0 ? 0 : 1;
}
