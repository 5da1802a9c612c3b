// Copyright 2026 The lesionkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// usage: acceptance <test-data-dir> [output-dir]

#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "gradcheck.hpp"
#include "lesionkit/bookmark.hpp"
#include "lesionkit/cluster_metrics.hpp"
#include "lesionkit/dataset.hpp"
#include "lesionkit/detector.hpp"
#include "lesionkit/encoder.hpp"
#include "lesionkit/evaluate.hpp"
#include "lesionkit/geometry.hpp"
#include "lesionkit/kmeans.hpp"
#include "lesionkit/ldpo.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace lesionkit;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass{true};
  std::string detail;
};

// Collects failures without stopping at the first one.
struct Check {
  Outcome& out;
  void operator()(bool ok, const std::string& what) {
    if (!ok && out.pass) out.detail = what;
    out.pass = out.pass && ok;
  }
};

// Shared between the end-to-end run and the protocol fixtures.
struct TrainedDetector {
  DetectorModel model;
  TrainConfig config;
  std::vector<Raster> images;
};
std::optional<TrainedDetector> g_multi;

Outcome geometry_oracles() {
  Outcome o;
  Check check{o};
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> side(64, 1024);
  std::uniform_real_distribution<double> unit(0, 1);
  int clipped = 0;
  for (int i = 0; i < 1000; ++i) {
    const int w = side(rng), h = side(rng);
    auto pt = [&] { return Point2{unit(rng) * (w - 1), unit(rng) * (h - 1)}; };
    const DiameterPair d{{pt(), pt()}, {pt(), pt()}};
    const double pad = i % 4 == 0 ? kDefaultPadding : 1 + 39 * unit(rng);
    const auto got = bbox_from_diameters(d, w, h, pad);
    const auto want = oracle::minmax_box(d, w, h, pad);
    clipped += got.clipped;
    check(got.box == want, fmt::format("bbox case {} differs", i));
  }
  check(clipped > 0, "no clipped bbox case was generated");

  std::uniform_real_distribution<double> pos(0, 60), size(0.5, 40);
  double worst_iou = 0;
  for (int i = 0; i < 1000; ++i) {
    // Every fourth pair is nested or shares an edge.
    const BoundingBox a{pos(rng), pos(rng), size(rng), size(rng)};
    BoundingBox b{pos(rng), pos(rng), size(rng), size(rng)};
    if (i % 4 == 1) b = {a.left_x + 0.25 * a.width, a.top_y + 0.25 * a.height, 0.5 * a.width, 0.5 * a.height};
    if (i % 4 == 2) b.left_x = a.right();
    worst_iou = std::max(worst_iou, std::abs(iou(a, b) - oracle::rasterized_iou(a, b, 20000)));
  }
  check(worst_iou < 1e-3, fmt::format("iou error {:.3g}", worst_iou));

  std::uniform_real_distribution<double> box_size(4, 200), box_pos(0, 500);
  double worst_round = 0;
  for (int i = 0; i < 1000; ++i) {
    const BoundingBox t{box_pos(rng), box_pos(rng), box_size(rng), box_size(rng)};
    const BoundingBox r{box_pos(rng), box_pos(rng), box_size(rng), box_size(rng)};
    const auto back = decode_delta(encode_delta(t, r), r);
    worst_round = std::max({worst_round, std::abs(back.left_x - t.left_x), std::abs(back.top_y - t.top_y),
                            std::abs(back.width - t.width), std::abs(back.height - t.height)});
  }
  check(worst_round < 1e-6, fmt::format("round trip error {:.3g}", worst_round));
  o.detail = o.pass ? fmt::format("clipped cases {}, max iou error {:.2g}, max round-trip error {:.2g}", clipped,
                                  worst_iou, worst_round)
                    : o.detail;
  return o;
}

Outcome clustering_oracles() {
  Outcome o;
  Check check{o};
  std::mt19937_64 rng(202);
  double worst = 0;
  for (int i = 0; i < 500; ++i) {
    const int n = std::uniform_int_distribution<int>(1, 300)(rng);
    std::uniform_int_distribution<int> la(0, std::uniform_int_distribution<int>(0, 9)(rng));
    std::uniform_int_distribution<int> lb(-3, std::uniform_int_distribution<int>(-3, 12)(rng));
    std::vector<int> a(static_cast<std::size_t>(n)), b(a.size());
    for (auto& v : a) v = la(rng);
    for (auto& v : b) v = lb(rng);
    worst = std::max({worst, std::abs(purity(a, b) - oracle::purity(a, b)),
                      std::abs(purity(b, a) - oracle::purity(b, a)), std::abs(nmi(a, b) - oracle::nmi(a, b))});
  }
  check(worst <= 1e-12, fmt::format("metric error {:.3g}", worst));

  std::uniform_real_distribution<double> u(-5, 5);
  int matched = 0;
  for (int trial = 0; trial < 100; ++trial) {
    FeatureMatrix<double> x(6, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    const auto [best, labels] = oracle::best_two_partition(x);
    const auto r = kmeans_fit(x, 2, static_cast<std::uint64_t>(trial));
    const bool ok = std::abs(r.inertia - best) <= 1e-9 * (1 + best) && oracle::same_grouping(r.assignments, labels);
    matched += ok;
  }
  check(matched == 100, fmt::format("kmeans matched exhaustive search on {}/100", matched));
  if (o.pass) o.detail = fmt::format("max metric error {:.2g}, kmeans 100/100", worst);
  return o;
}

Outcome ldpo_convergence() {
  Outcome o;
  Check check{o};
  const auto spec = default_synthetic_spec();
  std::vector<Raster> patches;
  Partition truth;
  for (int i = 0; i < 500; ++i) {
    const int c = i % 5;
    const auto s = generate_synthetic_study(spec, 1000 + static_cast<std::uint64_t>(i), c);
    patches.push_back(crop_patch(s.raster, s.lesions[0].box));
    truth.push_back(c);
  }
  const Eigen::MatrixXd x = patch_matrix(std::span<const Raster>(patches));
  LdpoConfig cfg;
  cfg.threshold = 0.9;
  cfg.max_iter = 20;
  const auto r = run_ldpo(x, std::make_unique<MlpEncoder>(static_cast<int>(x.cols()), cfg.hidden_units, cfg.seed), cfg);
  const double p = purity(r.final_state.assignments, truth);
  check(r.converged, "did not converge within 20 iterations");
  check(p >= 0.95, fmt::format("purity {:.3f} < 0.95", p));
  check(r.final_state.test_top1_accuracy >= 0.90,
        fmt::format("held-out top-1 {:.3f} < 0.90", r.final_state.test_top1_accuracy));
  if (o.pass) {
    o.detail = fmt::format("k={} converged at iteration {}, purity {:.3f}, held-out top-1 {:.3f}", r.final_state.k,
                           r.final_state.iteration, p, r.final_state.test_top1_accuracy);
  }
  return o;
}

Outcome gradient_check() {
  Outcome o;
  std::array<double, 4> worst{};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto e = gradcheck::relative_errors(gradcheck::tiny_instance(seed));
    for (std::size_t t = 0; t < 4; ++t) worst[t] = std::max(worst[t], e[t]);
  }
  for (double w : worst) o.pass = o.pass && w < 1e-4;
  o.detail = fmt::format("max relative error rpn_cls {:.2g} rpn_reg {:.2g} head_cls {:.2g} head_reg {:.2g}", worst[0],
                         worst[1], worst[2], worst[3]);
  return o;
}

Outcome end_to_end(const fs::path& out_dir) {
  Outcome o;
  Check check{o};
  const auto spec = default_synthetic_spec();
  constexpr int kStudies = 200;
  std::vector<SyntheticStudy> studies;
  std::vector<StudyKey> keys;
  std::vector<Raster> patches;
  std::map<std::string, int> index;
  for (int i = 0; i < kStudies; ++i) {
    studies.push_back(generate_synthetic_study(spec, 5000 + static_cast<std::uint64_t>(i)));
    keys.push_back({fmt::format("p{:03}", i), "s0", fmt::format("img{:03}", i)});
    index[keys.back().image_id] = i;
    patches.push_back(crop_patch(studies.back().raster, studies.back().lesions[0].box));
  }
  const auto split = split_patients(std::span<const StudyKey>(keys), {}, 0);

  const Eigen::MatrixXd x = patch_matrix(std::span<const Raster>(patches));
  LdpoConfig lc;
  const auto ldpo = run_ldpo(x, std::make_unique<MlpEncoder>(static_cast<int>(x.cols()), lc.hidden_units, 0), lc);
  const auto& labels = ldpo.final_state.assignments;
  const int k = ldpo.final_state.k;
  check(k == 5, fmt::format("LDPO chose k={}", k));

  TrainConfig tc;
  std::map<int, EvalReport> reports;
  fs::create_directories(out_dir);
  for (int classes : {1, k}) {
    DetectorArch arch;
    arch.num_classes = classes;
    std::vector<TrainingImage> train_set;
    std::shared_ptr<const std::vector<Anchor>> anchors;
    for (const auto& key : split[0].members) {
      const int i = index[key.image_id];
      const std::vector<BoundingBox> boxes{studies[i].lesions[0].box};
      const std::vector<int> cls{classes == 1 ? 1 : labels[i] + 1};
      train_set.push_back(prepare_training_image(studies[i].raster, boxes, cls, arch, tc, anchors));
      anchors = train_set.back().anchors;
    }
    auto model = train(DetectorModel::random(arch, 0), train_set, tc);
    DetectionsByImage dets;
    GroundTruthByImage gt;
    for (const auto& key : split[2].members) {
      const int i = index[key.image_id];
      dets[key.image_id] = detect(model, studies[i].raster, tc);
      gt[key.image_id] = {{studies[i].lesions[0].box, classes == 1 ? 1 : labels[i] + 1}};
    }
    reports[classes] = evaluate(dets, gt);
    const fs::path dir = out_dir / fmt::format("k{}", classes);
    fs::create_directories(dir);
    std::ofstream curve(dir / "iou_curve.csv");
    write_iou_curve(reports[classes].iou_curve, curve);
    for (const auto& [cat, pr] : reports[classes].pr_curves) {
      std::ofstream f(dir / fmt::format("pr_{}.csv", cat));
      write_pr_curve(pr, f);
    }
    if (classes == k) {
      TrainedDetector td{std::move(model), tc, {}};
      for (const auto& key : split[2].members) td.images.push_back(studies[index[key.image_id]].raster);
      g_multi = std::move(td);
    }
  }
  const double single = reports[1].overall_top1_accuracy, multi = reports[k].overall_top1_accuracy;
  check(reports[k].pr_curves.size() == static_cast<std::size_t>(k), "missing per-class PR curves");
  check(multi >= 0.85, fmt::format("multi-class top-1 {:.3f} < 0.85", multi));
  check(multi >= single - 0.02, fmt::format("multi {:.3f} < single {:.3f} - 0.02", multi, single));
  const char* direction = multi > single ? "improved" : multi == single ? "unchanged" : "worse";
  const auto& c1 = reports[1].iou_curve;
  const auto& ck = reports[k].iou_curve;
  std::string curve;
  for (std::size_t i = 0; i < ck.size(); ++i) curve += fmt::format(" {:.1f}:{:.2f}/{:.2f}", ck[i].first, c1[i].second, ck[i].second);
  if (o.pass) {
    o.detail = fmt::format("top-1 single {:.3f} multi {:.3f} ({}), curve single/multi{}", single, multi, direction,
                           curve);
  }
  return o;
}

Outcome protocol_fixtures() {
  Outcome o;
  Check check{o};
  // A box covering exactly half of the gt has IoU 0.5.
  const GroundTruthByImage gt{{"a", {{BoundingBox{0, 0, 10, 10}, 1}}}};
  const DetectionsByImage half{{"a", {{BoundingBox{0, 0, 5, 10}, 1, 0.9}}}};
  check(iou(BoundingBox{0, 0, 5, 10}, BoundingBox{0, 0, 10, 10}) == 0.5, "fixture IoU is not 0.5");
  check(evaluate_top1(half, gt) == 0.0, "IoU 0.5 counted as a hit");
  check(evaluate_top1(half, gt, {0.5, false}) == 1.0, "non-strict mode misses IoU 0.5");

  const auto templates = default_anchor_templates();
  check(templates.size() == 9, "expected nine anchor templates");
  const double scales[3] = {48, 72, 96}, ratios[3] = {1, 0.5, 2};
  for (std::size_t i = 0; i < templates.size() && i < 9; ++i) {
    const auto& t = templates[i];
    check(t.scale == scales[i / 3] && t.ratio == ratios[i % 3], fmt::format("template {} out of order", i));
    check(std::abs(t.width() * t.height() - t.scale * t.scale) <= 1e-9 * t.scale * t.scale,
          fmt::format("template {} does not preserve area", i));
    check(std::abs(t.width() / t.height() - t.ratio) <= 1e-12, fmt::format("template {} aspect", i));
  }

  TrainConfig tc;
  check(learning_rate(tc, tc.lr_decay_every - 1) == tc.base_lr, "rate changed before the boundary");
  check(learning_rate(tc, tc.lr_decay_every) == tc.base_lr / 10, "rate at the boundary is not base/10");

  std::size_t images = 0, boxes = 0;
  if (g_multi) {
    std::vector<Raster> inputs = g_multi->images;
    std::mt19937_64 rng(606);
    std::normal_distribution<double> noise(20000, 3000);
    for (int i = 0; i < 20; ++i) {
      ImageD img(512, 512);
      for (Eigen::Index j = 0; j < img.size(); ++j) img.data()[j] = noise(rng);
      inputs.push_back(to_raster(img));
    }
    for (const auto& img : inputs) {
      const auto d = detect(g_multi->model, img, g_multi->config);
      ++images;
      boxes += d.size();
      check(d.size() <= 5, "more than five detections");
      for (const auto& det : d) check(det.score > 0.5, "detection with score <= 0.5");
    }
  } else {
    check(false, "no trained detector available");
  }
  if (o.pass) o.detail = fmt::format("detect cap checked on {} images ({} boxes)", images, boxes);
  return o;
}

Outcome table1_golden(const fs::path& data) {
  Outcome o;
  std::ifstream fixture(data / "table1_published.json");
  std::ifstream golden(data / "table1_golden.csv", std::ios::binary);
  if (!fixture || !golden) return {false, "fixture files missing"};
  std::ostringstream rendered, expected;
  write_table1_csv(read_table1_fixture(fixture), rendered);
  expected << golden.rdbuf();
  o.pass = rendered.str() == expected.str();
  o.detail = o.pass ? "byte-identical" : "rendered:\n" + rendered.str();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    fmt::print(stderr, "usage: acceptance <test-data-dir> [output-dir]\n");
    return 2;
  }
  const fs::path data = argv[1];
  const fs::path out = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "lesionkit_acceptance";

  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"geometry oracles", 10, geometry_oracles},
      {"clustering oracles", 30, clustering_oracles},
      {"ldpo convergence", 300, ldpo_convergence},
      {"gradient check", 60, gradient_check},
      {"end-to-end detection", 900, [&] { return end_to_end(out); }},
      {"protocol fixtures", 60, protocol_fixtures},
      {"table1 golden", 10, [&] { return table1_golden(data); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = Clock::now();
    Outcome r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (secs > c.budget_s) {
      r.detail = fmt::format("{} [over budget: {:.1f}s > {:.0f}s]", r.detail, secs, c.budget_s);
      r.pass = false;
    }
    failures += !r.pass;
    fmt::print("criterion {} {:<22} {} ({:.1f}s) {}\n", i + 1, c.name, r.pass ? "PASS" : "FAIL", secs, r.detail);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
