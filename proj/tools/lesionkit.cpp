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

// lesionkit command-line front end.
//
// Exit codes: 0 success, 1 invalid input or config, 2 unreadable or
// unwritable files.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <fmt/core.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "lesionkit/bookmark.hpp"
#include "lesionkit/config_io.hpp"
#include "lesionkit/csv.hpp"
#include "lesionkit/dataset.hpp"
#include "lesionkit/detector.hpp"
#include "lesionkit/encoder.hpp"
#include "lesionkit/errors.hpp"
#include "lesionkit/evaluate.hpp"
#include "lesionkit/ldpo.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lesionkit;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads{1};
};

// Pipeline configuration file: optional sections "synthetic", "ldpo",
// "train", "split" and "evaluate".
struct PipelineConfig {
  json raw = json::object();
  SyntheticSpec synthetic = default_synthetic_spec();
  LdpoConfig ldpo;
  TrainConfig train;
  SplitFractions split;
  std::uint64_t split_seed{0};
  std::uint64_t synth_seed{0};
  EvalOptions eval;
  std::optional<int> num_classes;

  json resolved() const {
    return {{"synthetic", to_json(synthetic)},
            {"ldpo", to_json(ldpo)},
            {"train", to_json(train)},
            {"split", {{"train", split.train}, {"val", split.val}, {"test", split.test}, {"seed", split_seed}}},
            {"evaluate", {{"iou_grid", eval.iou_grid}, {"iou_threshold", eval.match.iou_threshold},
                          {"strict", eval.match.strict}}},
            {"num_classes", num_classes ? json(*num_classes) : json(nullptr)}};
  }
};

std::ifstream open_in(const fs::path& p, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(p, mode);
  if (!in) throw IoError("cannot read " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(p, mode);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

template <typename T>
T section_value(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config key '") + key + "': " + e.what());
  }
}

PipelineConfig load_config(const Globals& g) {
  PipelineConfig c;
  if (!g.config_path.empty()) {
    auto in = open_in(g.config_path);
    try {
      c.raw = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!c.raw.is_object()) throw ValidationError("config must be a JSON object");
  }
  const json& r = c.raw;
  if (r.contains("synthetic")) c.synthetic = synthetic_spec_from_json(r["synthetic"]);
  if (r.contains("ldpo")) c.ldpo = ldpo_config_from_json(r["ldpo"]);
  if (r.contains("train")) c.train = train_config_from_json(r["train"]);
  if (r.contains("split")) {
    const json& s = r["split"];
    c.split = {section_value(s, "train", c.split.train), section_value(s, "val", c.split.val),
               section_value(s, "test", c.split.test)};
    c.split_seed = section_value<std::uint64_t>(s, "seed", 0);
  }
  if (r.contains("evaluate")) {
    const json& e = r["evaluate"];
    c.eval.iou_grid = section_value(e, "iou_grid", c.eval.iou_grid);
    c.eval.match.iou_threshold = section_value(e, "iou_threshold", c.eval.match.iou_threshold);
    c.eval.match.strict = section_value(e, "strict", c.eval.match.strict);
  }
  if (r.contains("num_classes")) c.num_classes = section_value<int>(r, "num_classes", 1);
  c.synth_seed = section_value<std::uint64_t>(r, "seed", 0);
  if (g.seed) {
    c.synth_seed = c.split_seed = c.ldpo.seed = c.train.seed = *g.seed;
  }
  return c;
}

fs::path out_dir(const Globals& g) {
  if (g.out.empty()) throw ValidationError("--out is required");
  std::error_code ec;
  fs::create_directories(g.out, ec);
  if (ec) throw IoError("cannot create " + g.out + ": " + ec.message());
  return g.out;
}

void write_run_json(const fs::path& dir, const std::string& command, const Globals& g, const PipelineConfig& c,
                    const json& inputs, const json& results) {
  const json run{{"command", command},     {"seed", g.seed ? json(*g.seed) : json(nullptr)},
                 {"threads", g.threads},    {"config", c.resolved()},
                 {"inputs", inputs},        {"results", results}};
  auto out = open_out(dir / "run.json");
  out << run.dump(2) << '\n';
}

// Raster for an image id, loaded once.
class ImageStore {
 public:
  explicit ImageStore(fs::path dir) : dir_(std::move(dir)) {}
  const Raster& get(const std::string& image_id) {
    auto it = cache_.find(image_id);
    if (it == cache_.end()) it = cache_.emplace(image_id, read_pgm(dir_ / (image_id + ".pgm"))).first;
    return it->second;
  }

 private:
  fs::path dir_;
  std::map<std::string, Raster> cache_;
};

constexpr const char* kPseudoLabelHeader = "patient_id,study_id,image_id,left_x,top_y,width,height,pseudo_label";

// Box manifest rows with an optional pseudo-label column.
struct LabelledBox {
  StudyKey key;
  BoundingBox box;
  int label{0};
};

std::vector<LabelledBox> read_pseudo_labels(std::istream& in) {
  std::vector<LabelledBox> rows;
  for (const auto& f :
       csv::read_table(in, kPseudoLabelHeader)) {
    if (f.size() != 8) throw IoError("pseudo-label row needs 8 fields");
    rows.push_back({{f[0], f[1], f[2]},
                    {csv::to_double(f[3]), csv::to_double(f[4]), csv::to_double(f[5]), csv::to_double(f[6])},
                    static_cast<int>(csv::to_int(f[7]))});
  }
  return rows;
}

// Accepts either a box manifest (every box class 0) or a pseudo-label file.
std::vector<LabelledBox> read_boxes(const fs::path& p) {
  auto in = open_in(p);
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  in.clear();
  in.seekg(0);
  if (header == kPseudoLabelHeader) return read_pseudo_labels(in);
  std::vector<LabelledBox> rows;
  for (const auto& r : read_box_manifest(in)) rows.push_back({r.key, r.box.box, 0});
  return rows;
}

// Image ids of one named split, or every id when no split file is given.
std::optional<std::set<std::string>> split_members(const std::string& splits_path, const std::string& subset) {
  if (splits_path.empty()) return std::nullopt;
  auto in = open_in(splits_path);
  std::set<std::string> ids;
  bool found = false;
  for (const auto& s : read_split_manifest(in)) {
    if (s.split_name != subset) continue;
    found = true;
    for (const auto& k : s.members) ids.insert(k.image_id);
  }
  if (!found) throw ValidationError("split '" + subset + "' not present in " + splits_path);
  return ids;
}

// ---------------------------------------------------------------------------

int cmd_mine(const Globals& g, const std::string& bookmarks_path, int padding_px) {
  const PipelineConfig c = load_config(g);
  auto in = open_in(bookmarks_path);
  const fs::path dir = out_dir(g);
  ParseResult parsed = parse_bookmarks(in);

  std::vector<ManifestRow> rows;
  std::vector<BookmarkRecord> kept;
  for (const auto& rec : parsed.records) {
    try {
      rows.push_back({rec.key, bbox_from_diameters(rec.diameters, rec.image_width, rec.image_height, padding_px)});
      kept.push_back(rec);
    } catch (const ValidationError& e) {
      parsed.rejections.push_back({0, rec.key.image_id + ": " + e.what()});
    }
  }
  {
    auto out = open_out(dir / "manifest.csv");
    write_box_manifest(rows, out);
  }
  {
    auto out = open_out(dir / "rejections.csv");
    out << "line,reason\n";
    for (const auto& r : parsed.rejections) {
      std::string reason = r.reason;
      std::replace(reason.begin(), reason.end(), ',', ';');
      std::replace(reason.begin(), reason.end(), '\n', ' ');
      out << r.line_number << ',' << reason << '\n';
    }
  }
  std::set<std::string> patients;
  for (const auto& r : kept) patients.insert(r.key.patient_id);
  bool split_written = false;
  if (patients.size() >= 3) {
    const auto splits = split_patients(std::span<const BookmarkRecord>(kept), c.split, c.split_seed);
    auto out = open_out(dir / "splits.csv");
    write_split_manifest(splits, out);
    split_written = true;
  } else {
    fmt::print(stderr, "warning: {} patient(s); splits.csv needs at least 3\n", patients.size());
  }
  if (!parsed.rejections.empty()) fmt::print(stderr, "warning: {} bookmark(s) rejected\n", parsed.rejections.size());
  write_run_json(dir, "mine", g, c, {{"bookmarks", bookmarks_path}, {"padding", padding_px}},
                 {{"boxes", rows.size()}, {"rejected", parsed.rejections.size()}, {"splits", split_written}});
  return 0;
}

int cmd_synth(const Globals& g, int studies) {
  const PipelineConfig c = load_config(g);
  if (studies < 0) throw ValidationError("--studies must be non-negative");
  validate(c.synthetic);
  const fs::path dir = out_dir(g);
  fs::create_directories(dir / "images");
  std::vector<ManifestRow> rows;
  std::vector<BookmarkRecord> bookmarks;
  auto classes = open_out(dir / "classes.csv");
  classes << "image_id,lesion,true_class,class_name\n";
  for (int i = 0; i < studies; ++i) {
    const std::uint64_t seed = c.synth_seed * 1000003ULL + static_cast<std::uint64_t>(i);
    const auto study = generate_synthetic_study(c.synthetic, seed);
    const StudyKey key{fmt::format("p{:04}", i), "s0", fmt::format("img{:04}", i)};
    write_pgm(study.raster, dir / "images" / (key.image_id + ".pgm"));
    for (std::size_t l = 0; l < study.lesions.size(); ++l) {
      const auto& lesion = study.lesions[l];
      rows.push_back({key, {lesion.box, false}});
      bookmarks.push_back({key, width_of(study.raster), height_of(study.raster), lesion.diameters});
      classes << key.image_id << ',' << l << ',' << lesion.true_class << ','
              << c.synthetic.classes[static_cast<std::size_t>(lesion.true_class)].name << '\n';
    }
  }
  {
    auto out = open_out(dir / "manifest.csv");
    write_box_manifest(rows, out);
  }
  {
    auto out = open_out(dir / "bookmarks.jsonl");
    serialize_bookmarks(bookmarks, out);
  }
  write_run_json(dir, "synth", g, c, {{"studies", studies}, {"seed", c.synth_seed}},
                 {{"images", studies}, {"lesions", rows.size()}});
  return 0;
}

int cmd_categorize(const Globals& g, const std::string& manifest_path, const std::string& images_dir) {
  const PipelineConfig c = load_config(g);
  const auto boxes = read_boxes(manifest_path);
  ImageStore store(images_dir);
  std::vector<Raster> patches;
  patches.reserve(boxes.size());
  for (const auto& b : boxes) patches.push_back(crop_patch(store.get(b.key.image_id), b.box));
  if (patches.size() < c.ldpo.min_patches) {
    throw ValidationError(fmt::format("{} patches; categorization needs at least {}", patches.size(),
                                      c.ldpo.min_patches));
  }
  const fs::path dir = out_dir(g);
  const Eigen::MatrixXd x = patch_matrix(std::span<const Raster>(patches));
  auto result =
      run_ldpo(x, std::make_unique<MlpEncoder>(static_cast<int>(x.cols()), c.ldpo.hidden_units, c.ldpo.seed), c.ldpo);
  {
    auto out = open_out(dir / "pseudo_labels.csv");
    out << kPseudoLabelHeader << '\n';
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const auto& b = boxes[i];
      out << b.key.patient_id << ',' << b.key.study_id << ',' << b.key.image_id << ',' << csv::number(b.box.left_x)
          << ',' << csv::number(b.box.top_y) << ',' << csv::number(b.box.width) << ','
          << csv::number(b.box.height) << ',' << result.final_state.assignments[i] << '\n';
    }
  }
  {
    auto out = open_out(dir / "history.csv");
    write_ldpo_history(result.history, out);
  }
  write_run_json(dir, "categorize", g, c, {{"manifest", manifest_path}, {"images", images_dir}},
                 {{"converged", result.converged},
                  {"k", result.final_state.k},
                  {"iterations", result.history.size()},
                  {"final_test_top1", result.final_state.test_top1_accuracy}});
  return 0;
}

int cmd_train(const Globals& g, const std::string& boxes_path, const std::string& images_dir,
              const std::string& splits_path, const std::string& resume, bool single_class) {
  PipelineConfig c = load_config(g);
  const auto boxes = read_boxes(boxes_path);
  const auto train_ids = split_members(splits_path, "train");

  int k = 1;
  if (!single_class) {
    for (const auto& b : boxes) k = std::max(k, b.label + 1);
  }
  if (c.num_classes && *c.num_classes != k) {
    throw ValidationError(fmt::format("config num_classes {} but labels give {}", *c.num_classes, k));
  }
  c.num_classes = k;

  DetectorModel model;
  if (!resume.empty()) {
    model = load_checkpoint(fs::path(resume));
    if (model.arch.num_classes != k) {
      throw ValidationError(fmt::format("checkpoint has {} classes, labels give {}", model.arch.num_classes, k));
    }
  } else {
    DetectorArch arch;
    arch.num_classes = k;
    model = DetectorModel::random(arch, c.train.seed);
  }

  // Group boxes by image; images keep first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<BoundingBox>, std::vector<int>>> per_image;
  for (const auto& b : boxes) {
    if (train_ids && !train_ids->count(b.key.image_id)) continue;
    auto [it, fresh] = per_image.try_emplace(b.key.image_id);
    if (fresh) order.push_back(b.key.image_id);
    it->second.first.push_back(b.box);
    it->second.second.push_back(single_class ? 1 : b.label + 1);
  }
  if (order.empty()) throw ValidationError("no training images");

  ImageStore store(images_dir);
  std::vector<TrainingImage> dataset;
  std::shared_ptr<const std::vector<Anchor>> anchors;
  for (const auto& id : order) {
    const auto& [b, cls] = per_image[id];
    dataset.push_back(prepare_training_image(store.get(id), b, cls, model.arch, c.train, anchors));
    anchors = dataset.back().anchors;
  }
  const fs::path dir = out_dir(g);
  const DetectorModel trained = train(std::move(model), dataset, c.train);
  save_checkpoint(trained, dir / "model.bin");
  {
    auto out = open_out(dir / "loss_trace.csv");
    out << "iteration,lr,rpn_cls,rpn_reg,head_cls,head_reg,total\n";
    for (std::size_t i = 0; i < trained.training_log.size(); ++i) {
      const auto& t = trained.training_log[i];
      out << i << ',' << csv::number(learning_rate(c.train, static_cast<int>(i))) << ',' << csv::number(t.rpn_cls)
          << ',' << csv::number(t.rpn_reg) << ',' << csv::number(t.head_cls) << ',' << csv::number(t.head_reg) << ','
          << csv::number(t.total()) << '\n';
    }
  }
  write_run_json(dir, "train", g, c,
                 {{"boxes", boxes_path}, {"images", images_dir}, {"splits", splits_path}, {"resume", resume}},
                 {{"num_classes", k}, {"training_images", order.size()}, {"iterations", trained.training_log.size()}});
  return 0;
}

int cmd_detect(const Globals& g, const std::string& model_path, const std::string& images_dir,
               const std::string& splits_path, const std::string& subset) {
  const PipelineConfig c = load_config(g);
  const DetectorModel model = load_checkpoint(fs::path(model_path));
  if (c.num_classes && *c.num_classes != model.arch.num_classes) {
    throw ValidationError(fmt::format("config num_classes {} but the model has {}", *c.num_classes,
                                      model.arch.num_classes));
  }
  const auto members = split_members(splits_path, subset);
  std::error_code ec;
  if (!fs::is_directory(images_dir, ec)) throw IoError("not a directory: " + images_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(images_dir)) {
    if (e.path().extension() != ".pgm") continue;
    if (members && !members->count(e.path().stem().string())) continue;
    files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  const fs::path dir = out_dir(g);
  DetectionsByImage dets;
  std::size_t count = 0;
  for (const auto& f : files) {
    auto& d = dets[f.stem().string()];
    d = detect(model, read_pgm(f), c.train);
    count += d.size();
  }
  auto out = open_out(dir / "detections.csv");
  write_detections(dets, out);
  write_run_json(dir, "detect", g, c, {{"model", model_path}, {"images", images_dir}, {"splits", splits_path},
                                       {"subset", subset}},
                 {{"images", files.size()}, {"detections", count}, {"num_classes", model.arch.num_classes}});
  return 0;
}

int cmd_evaluate(const Globals& g, const std::string& detections_path, const std::string& gt_path,
                 const std::string& splits_path, const std::string& subset) {
  const PipelineConfig c = load_config(g);
  auto din = open_in(detections_path);
  const DetectionsByImage dets = read_detections(din);
  const auto members = split_members(splits_path, subset);
  GroundTruthByImage gt;
  for (const auto& b : read_boxes(gt_path)) {
    if (members && !members->count(b.key.image_id)) continue;
    gt[b.key.image_id].push_back({b.box, b.label + 1});
  }
  for (const auto& [id, d] : dets) {
    if (!gt.count(id)) throw ValidationError("detections for image '" + id + "' which has no ground truth");
  }
  const EvalReport report = evaluate(dets, gt, c.eval);
  const fs::path dir = out_dir(g);
  {
    auto out = open_out(dir / "iou_curve.csv");
    write_iou_curve(report.iou_curve, out);
  }
  for (const auto& [cat, curve] : report.pr_curves) {
    auto out = open_out(dir / fmt::format("pr_{}.csv", cat));
    write_pr_curve(curve, out);
  }
  {
    auto out = open_out(dir / "per_cluster.csv");
    write_per_cluster(report.per_cluster, out);
  }
  write_run_json(dir, "evaluate", g, c,
                 {{"detections", detections_path}, {"ground_truth", gt_path}, {"splits", splits_path},
                  {"subset", subset}},
                 {{"overall_top1_accuracy", report.overall_top1_accuracy},
                  {"extra_detections", report.extra_detections},
                  {"image_ids", report.image_ids}});
  return 0;
}

EvalReport load_eval_dir(const fs::path& dir) {
  auto in = open_in(dir / "per_cluster.csv");
  EvalReport r;
  r.per_cluster = read_per_cluster(in);
  auto rin = open_in(dir / "run.json");
  try {
    const json run = json::parse(rin);
    r.overall_top1_accuracy = run.at("results").at("overall_top1_accuracy").get<double>();
    r.image_ids = run.at("results").at("image_ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw IoError("bad run.json in " + dir.string() + ": " + e.what());
  }
  return r;
}

int cmd_report(const Globals& g, const std::string& single_dir, const std::string& multi_dir,
               const std::string& fixture) {
  const PipelineConfig c = load_config(g);
  Table1 table;
  if (!fixture.empty()) {
    auto in = open_in(fixture);
    table = read_table1_fixture(in);
  } else {
    if (single_dir.empty() || multi_dir.empty()) throw ValidationError("report needs --single and --multi, or --fixture");
    table = compare_configs(load_eval_dir(single_dir), load_eval_dir(multi_dir));
  }
  const fs::path dir = out_dir(g);
  {
    auto out = open_out(dir / "table1.csv", std::ios::binary);
    write_table1_csv(table, out);
  }
  {
    auto out = open_out(dir / "table1.txt");
    write_table1_text(table, out);
  }
  write_run_json(dir, "report", g, c, {{"single", single_dir}, {"multi", multi_dir}, {"fixture", fixture}},
                 {{"rows", table.rows.size()},
                  {"overall_single", table.overall.acc_single},
                  {"overall_multi", table.overall.acc_multi}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lesionkit: lesion mining, categorization and detection"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "pipeline config JSON");
  auto* seed_opt = app.add_option("--seed", seed, "seed for every random stage");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);

  std::function<int()> run;

  auto* mine = app.add_subcommand("mine", "bookmarks to padded boxes, rejections and patient splits");
  std::string bookmarks;
  int padding = static_cast<int>(kDefaultPadding);
  mine->add_option("bookmarks", bookmarks, "line-delimited JSON bookmarks")->required();
  mine->add_option("--padding", padding, "pixels added on every side");
  mine->callback([&] { run = [&] { return cmd_mine(g, bookmarks, padding); }; });

  auto* synth = app.add_subcommand("synth", "synthetic studies with ground truth");
  int studies = 20;
  synth->add_option("--studies", studies, "number of studies");
  synth->callback([&] { run = [&] { return cmd_synth(g, studies); }; });

  std::string manifest, images, splits, subset = "test";
  auto* categorize = app.add_subcommand("categorize", "iterative pseudo-label categorization");
  categorize->add_option("--manifest", manifest, "box manifest")->required();
  categorize->add_option("--images", images, "directory of <image_id>.pgm")->required();
  categorize->callback([&] { run = [&] { return cmd_categorize(g, manifest, images); }; });

  auto* train_cmd = app.add_subcommand("train", "train the detector");
  std::string resume;
  bool single = false;
  train_cmd->add_option("--boxes", manifest, "box manifest or pseudo_labels.csv")->required();
  train_cmd->add_option("--images", images, "directory of <image_id>.pgm")->required();
  train_cmd->add_option("--splits", splits, "splits.csv; only the train split is used");
  train_cmd->add_option("--resume", resume, "checkpoint to continue from");
  train_cmd->add_flag("--single-class", single, "ignore labels and train one foreground class");
  train_cmd->callback([&] { run = [&] { return cmd_train(g, manifest, images, splits, resume, single); }; });

  auto* detect_cmd = app.add_subcommand("detect", "run a trained detector over a directory of images");
  std::string model;
  detect_cmd->add_option("--model", model, "checkpoint")->required();
  detect_cmd->add_option("--images", images, "directory of <image_id>.pgm")->required();
  detect_cmd->add_option("--splits", splits, "restrict to one split");
  detect_cmd->add_option("--subset", subset, "split name used with --splits");
  detect_cmd->callback([&] { run = [&] { return cmd_detect(g, model, images, splits, subset); }; });

  auto* evaluate_cmd = app.add_subcommand("evaluate", "top-1 accuracy, IoU curve and PR curves");
  std::string detections, gt;
  evaluate_cmd->add_option("--detections", detections, "detections.csv")->required();
  evaluate_cmd->add_option("--gt", gt, "box manifest or pseudo_labels.csv")->required();
  evaluate_cmd->add_option("--splits", splits, "restrict to one split");
  evaluate_cmd->add_option("--subset", subset, "split name used with --splits");
  evaluate_cmd->callback([&] { run = [&] { return cmd_evaluate(g, detections, gt, splits, subset); }; });

  auto* report = app.add_subcommand("report", "single vs multi-class comparison table");
  std::string single_dir, multi_dir, fixture;
  report->add_option("--single", single_dir, "evaluate output of the single-class model");
  report->add_option("--multi", multi_dir, "evaluate output of the multi-class model");
  report->add_option("--fixture", fixture, "stored per-cluster results (JSON)");
  report->callback([&] { run = [&] { return cmd_report(g, single_dir, multi_dir, fixture); }; });

  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (*seed_opt) g.seed = seed;
  Eigen::setNbThreads(g.threads);

  try {
    return run();
  } catch (const ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const TrainingError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const IoError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
}
