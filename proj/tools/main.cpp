/*
 * Copyright 2026 The fixedhead Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "fixedhead/arch.hpp"
#include "fixedhead/cam.hpp"
#include "fixedhead/checkpoint.hpp"
#include "fixedhead/errors.hpp"
#include "fixedhead/report.hpp"
#include "fixedhead/train.hpp"

namespace {

using namespace fixedhead;

std::vector<std::size_t> parse_milestones(const std::string& text) {
  std::vector<std::size_t> out;
  if (text == "none" || text.empty()) return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("bad milestone list '" + text + "'");
    }
    out.push_back(std::stoul(item));
    start = end + 1;
  }
  return out;
}

// Flags shared by `train` and `compare`. A flag given on the command line
// wins over the config file, which wins over the built-in defaults.
struct TrainFlags {
  std::string config;
  std::string head;
  std::vector<std::size_t> widths;
  std::size_t classes = 0;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  double lr = 0, momentum = 0, weight_decay = 0;
  std::string milestones;
  std::uint64_t seed = 0;
  std::string data;
  std::string train_images, train_labels, test_images, test_labels;
  std::size_t per_class = 0, test_per_class = 0, size = 0;
  std::uint64_t synth_seed = 0;
  std::size_t pad = 0, crop = 0;
  double hflip = 0;
  std::vector<double> mean, std;
  bool no_wall_time = false;

  std::map<std::string, CLI::Option*> opts;

  void add(CLI::App& app, bool with_head) {
    app.add_option("--config", config, "JSON config supplying defaults")->check(CLI::ExistingFile);
    if (with_head) opts["head"] = app.add_option("--head", head, "Learned|FixedOrthogonal|FixedHadamard|FixedIdentity");
    opts["widths"] = app.add_option("--widths", widths, "tiny3 block widths")->delimiter(',');
    opts["classes"] = app.add_option("--classes", classes, "number of classes K");
    opts["epochs"] = app.add_option("--epochs", epochs);
    opts["batch_size"] = app.add_option("--batch-size", batch_size);
    opts["lr"] = app.add_option("--lr", lr, "base learning rate");
    opts["momentum"] = app.add_option("--momentum", momentum);
    opts["weight_decay"] = app.add_option("--weight-decay", weight_decay);
    opts["milestones"] = app.add_option("--milestones", milestones, "comma-separated epochs at which lr drops 10x, or none");
    opts["seed"] = app.add_option("--seed", seed);
    opts["data"] = app.add_option("--data", data, "synth or idx")->check(CLI::IsMember({"synth", "idx"}));
    opts["train_images"] = app.add_option("--train-images", train_images);
    opts["train_labels"] = app.add_option("--train-labels", train_labels);
    opts["test_images"] = app.add_option("--test-images", test_images);
    opts["test_labels"] = app.add_option("--test-labels", test_labels);
    opts["per_class"] = app.add_option("--synth-per-class", per_class);
    opts["test_per_class"] = app.add_option("--synth-test-per-class", test_per_class);
    opts["size"] = app.add_option("--synth-size", size);
    opts["synth_seed"] = app.add_option("--synth-seed", synth_seed);
    opts["pad"] = app.add_option("--pad", pad, "zero padding before cropping");
    opts["crop"] = app.add_option("--crop", crop, "crop size, 0 keeps the input size");
    opts["hflip"] = app.add_option("--hflip", hflip, "horizontal flip probability");
    opts["mean"] = app.add_option("--mean", mean, "per-channel normalization mean")->delimiter(',');
    opts["std"] = app.add_option("--std", std, "per-channel normalization std")->delimiter(',');
    app.add_flag("--no-wall-time", no_wall_time, "write 0 in the wall_ms column");
  }

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }

  TrainConfig resolve() const {
    TrainConfig cfg = config.empty() ? TrainConfig{} : load_config(config);
    if (given("head")) cfg.head = parse_head_kind(head);
    if (given("widths")) cfg.widths = widths;
    if (given("classes")) cfg.num_classes = classes;
    if (given("epochs")) cfg.epochs = epochs;
    if (given("batch_size")) cfg.batch_size = batch_size;
    if (given("lr")) cfg.lr = lr;
    if (given("momentum")) cfg.momentum = momentum;
    if (given("weight_decay")) cfg.weight_decay = weight_decay;
    if (given("milestones")) cfg.lr_milestones = parse_milestones(milestones);
    if (given("seed")) cfg.seed = seed;
    if (given("data")) cfg.data.kind = data == "idx" ? DataSource::Kind::Idx : DataSource::Kind::Synth;
    if (given("train_images")) cfg.data.train_images = train_images;
    if (given("train_labels")) cfg.data.train_labels = train_labels;
    if (given("test_images")) cfg.data.test_images = test_images;
    if (given("test_labels")) cfg.data.test_labels = test_labels;
    if (given("per_class")) cfg.data.synth_per_class = per_class;
    if (given("test_per_class")) cfg.data.synth_test_per_class = test_per_class;
    if (given("size")) cfg.data.synth_size = size;
    if (given("synth_seed")) cfg.data.synth_seed = synth_seed;
    if (given("pad")) cfg.augment.pad = pad;
    if (given("crop")) cfg.augment.crop = crop;
    if (given("hflip")) cfg.augment.hflip_prob = hflip;
    if (given("mean")) cfg.normalization.mean = mean;
    if (given("std")) cfg.normalization.std = std;
    if (no_wall_time) cfg.record_wall_time = false;
    cfg.validate();
    return cfg;
  }
};

void print_model_summary(const Model& model) {
  const arch::AuditReport audit = arch::count_total(model.describe());
  std::size_t trainable = 0;
  for (const Parameter* p : model.parameters())
    if (p->trainable) trainable += p->value.size();
  const HeadReport& h = model.head_report();
  std::cout << "model: " << model.describe().name << ", feature width " << model.feature_dim() << "\n"
            << "architecture params: " << audit.total_params << " (classifier " << audit.classifier_params << ")\n"
            << "trainable params: " << trainable << " (head " << h.trainable_param_count << ")\n";
  if (h.duplicate_row_count > 0) std::cout << "head duplicate rows: " << h.duplicate_row_count << "\n";
}

int run_train(const TrainFlags& flags, const std::string& metrics, const std::string& checkpoint,
              const std::string& resume, bool quiet) {
  const TrainConfig cfg = flags.resolve();
  const Datasets data = load_datasets(cfg);
  print_model_summary(build_model(cfg.model_config(data.train.channels)));
  TrainOptions opts;
  if (!metrics.empty()) opts.metrics_path = metrics;
  if (!checkpoint.empty()) opts.checkpoint_dir = checkpoint;
  if (!resume.empty()) opts.resume_from = resume;
  if (!quiet) {
    std::cout << kMetricsHeader << "\n";
    opts.on_epoch = [](const MetricsRow& r) { std::cout << format_metrics_row(r) << std::endl; };
  }
  const TrainResult result = train(cfg, data, opts);
  std::printf("final test_acc: %.6f\n", result.rows.back().test_acc);
  return 0;
}

data::Dataset eval_dataset(const Checkpoint& ck, const std::string& images, const std::string& labels,
                           const std::string& split) {
  if (!images.empty() || !labels.empty()) {
    if (images.empty() || labels.empty()) throw ConfigError("--images and --labels must be given together");
    return data::read_idx(images, labels, ck.config.num_classes, data::Split::Test);
  }
  Datasets d = load_datasets(ck.config);
  return split == "train" ? std::move(d.train) : std::move(d.test);
}

int run_eval(const std::string& checkpoint, const std::string& images, const std::string& labels,
             const std::string& split, std::size_t classes) {
  Checkpoint ck = load_checkpoint(checkpoint);
  data::Dataset ds = eval_dataset(ck, images, labels, split);
  if (classes != 0) ds.num_classes = classes;
  std::printf("top1: %.6f\n", evaluate(ck.model, ds, ck.config.normalization));
  return 0;
}

int run_audit(const std::vector<std::string>& specs, std::size_t classes, bool headless, bool csv) {
  if (csv) std::cout << kAuditCsvHeader << "\n";
  for (const std::string& path : specs) {
    const AuditSummary s =
        audit_spec(arch::load_spec(path), classes ? std::optional<std::size_t>(classes) : std::nullopt, headless);
    std::cout << (csv ? format_audit_csv_row(s) + "\n" : format_audit_text(s));
  }
  return 0;
}

int run_cam(const std::string& checkpoint, const std::string& out, const std::vector<std::size_t>& indices,
            const std::string& images, const std::string& labels, const std::string& split) {
  Checkpoint ck = load_checkpoint(checkpoint);
  const data::Dataset ds = eval_dataset(ck, images, labels, split);
  for (std::size_t i : indices) {
    if (i >= ds.size()) throw ConfigError("image index " + std::to_string(i) + " out of range");
    const Tensor x = data::to_tensor(ds.image(i), 1, ds.channels, ds.height, ds.width, ck.config.normalization);
    const Heatmap cam = compute_cam(ck.model, x, "image" + std::to_string(i));
    write_cam(cam, out);
    std::cout << cam.image_id << ": label " << ds.labels[i] << ", predicted " << cam.predicted << "\n";
  }
  return 0;
}

int run_compare(const TrainFlags& flags, const std::vector<std::string>& heads, const std::string& out) {
  const TrainConfig cfg = flags.resolve();
  std::vector<HeadKind> kinds;
  for (const std::string& h : heads) kinds.push_back(parse_head_kind(h));
  if (kinds.empty()) kinds.assign(kAllHeadKinds.begin(), kAllHeadKinds.end());
  const std::string csv = format_comparison_csv(compare_heads(cfg, kinds, load_datasets(cfg)));
  if (!out.empty()) write_file_atomic(out, csv);
  std::cout << csv;
  return 0;
}

int run_head(const std::string& kind, std::size_t n_c, std::size_t classes, std::uint64_t seed, std::size_t limit) {
  Rng rng(seed);
  const BuiltHead built = build_head(parse_head_kind(kind), n_c, classes, rng);
  const HeadReport& r = built.report;
  std::cout << "head: " << kind << " (n_c " << n_c << ", K " << classes << ")\n"
            << "trainable_params: " << r.trainable_param_count << "\n"
            << "stored_params: " << r.stored_param_count << "\n"
            << "duplicate_rows: " << r.duplicate_row_count << "\n";
  if (!r.duplicate_pairs.empty()) {
    std::cout << "duplicate_pairs: " << format_pairs_one_based(r.duplicate_pairs, limit) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compare learned and fixed classifier heads on small CNNs"};
  app.require_subcommand(1);

  TrainFlags train_flags;
  std::string metrics, checkpoint, resume;
  bool quiet = false;
  CLI::App* train_cmd = app.add_subcommand("train", "train one model");
  train_flags.add(*train_cmd, true);
  train_cmd->add_option("--metrics", metrics, "per-epoch CSV output");
  train_cmd->add_option("--checkpoint", checkpoint, "checkpoint directory written at the end");
  train_cmd->add_option("--resume", resume, "continue from this checkpoint");
  train_cmd->add_flag("-q,--quiet", quiet, "do not echo metrics rows");

  std::string eval_ckpt, images, labels, split = "test";
  std::size_t eval_classes = 0;
  CLI::App* eval_cmd = app.add_subcommand("eval", "top-1 accuracy of a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--images", images, "IDX images (defaults to the checkpoint's data)");
  eval_cmd->add_option("--labels", labels, "IDX labels");
  eval_cmd->add_option("--classes", eval_classes, "class count of the IDX data (defaults to the checkpoint's)");
  eval_cmd->add_option("--split", split, "train or test when using the checkpoint's data")
      ->check(CLI::IsMember({"train", "test"}));

  std::vector<std::string> specs;
  std::size_t audit_classes = 0;
  bool headless = false, csv = false;
  CLI::App* audit_cmd = app.add_subcommand("audit", "count parameters of architecture descriptions");
  audit_cmd->add_option("--spec", specs, "architecture JSON (repeatable)")->required();
  audit_cmd->add_option("--classes", audit_classes, "resize the classifier to K classes");
  audit_cmd->add_flag("--headless", headless, "also count the headless variant");
  audit_cmd->add_flag("--csv", csv, "print CSV instead of text");

  std::string cam_ckpt, cam_out, cam_images, cam_labels, cam_split = "test";
  std::vector<std::size_t> cam_indices = {0};
  CLI::App* cam_cmd = app.add_subcommand("cam", "export class activation maps of an identity-head model");
  cam_cmd->add_option("--checkpoint", cam_ckpt)->required();
  cam_cmd->add_option("--out", cam_out, "output directory")->required();
  cam_cmd->add_option("--index", cam_indices, "image indices")->delimiter(',');
  cam_cmd->add_option("--images", cam_images);
  cam_cmd->add_option("--labels", cam_labels);
  cam_cmd->add_option("--split", cam_split)->check(CLI::IsMember({"train", "test"}));

  TrainFlags compare_flags;
  std::vector<std::string> heads;
  std::string compare_out;
  CLI::App* compare_cmd = app.add_subcommand("compare", "train every head and report accuracy gaps");
  compare_flags.add(*compare_cmd, false);
  compare_cmd->add_option("--heads", heads, "heads to compare (default: all)")->delimiter(',');
  compare_cmd->add_option("--out", compare_out, "CSV output path");

  std::string head_kind;
  std::size_t head_nc = 0, head_classes = 0, head_limit = 8;
  std::uint64_t head_seed = 0;
  CLI::App* head_cmd = app.add_subcommand("head", "build a head and report its parameters and duplicate rows");
  head_cmd->add_option("--kind", head_kind)->required();
  head_cmd->add_option("--n-c", head_nc, "feature width")->required();
  head_cmd->add_option("--classes", head_classes, "number of classes")->required();
  head_cmd->add_option("--seed", head_seed);
  head_cmd->add_option("--show", head_limit, "duplicate pairs to print");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return run_train(train_flags, metrics, checkpoint, resume, quiet);
    if (*eval_cmd) return run_eval(eval_ckpt, images, labels, split, eval_classes);
    if (*audit_cmd) return run_audit(specs, audit_classes, headless, csv);
    if (*cam_cmd) return run_cam(cam_ckpt, cam_out, cam_indices, cam_images, cam_labels, cam_split);
    if (*compare_cmd) return run_compare(compare_flags, heads, compare_out);
    if (*head_cmd) return run_head(head_kind, head_nc, head_classes, head_seed, head_limit);
  } catch (const fixedhead::Error& e) {
    std::cerr << "fixedhead: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fixedhead: unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
