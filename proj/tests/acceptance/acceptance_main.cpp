/* Copyright 2026 The Volcon Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "volcon/contrastive_loss.hpp"
#include "volcon/evaluation.hpp"
#include "volcon/pipeline.hpp"

namespace {

using Clock = std::chrono::steady_clock;
using Eigen::MatrixXd;
using nlohmann::json;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << ": " << name << " -- " << o.detail
            << std::endl;
  if (!o.pass) ++failures;
}

std::string fmt(double v, int precision = 3, bool sci = false) {
  std::ostringstream os;
  if (sci) os << std::scientific;
  else os << std::fixed;
  os.precision(precision);
  os << v;
  return os.str();
}

template <typename Fn>
Outcome guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

const double kTemperatures[] = {0.07, 0.5, 1.0};

std::vector<int> random_labels(int rows, std::mt19937_64& rng) {
  const int classes = std::max(1, rows / 2);
  std::vector<int> labels(static_cast<std::size_t>(rows));
  for (auto& l : labels) l = static_cast<int>(rng() % static_cast<std::uint64_t>(classes));
  return labels;
}

// 1. Vectorized loss against the double-loop oracle.
Outcome loss_oracle() {
  std::mt19937_64 rng(101);
  const auto t0 = Clock::now();
  double worst = 0.0;
  int degenerate = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int b = 2 + static_cast<int>(rng() % 7), d = 2 + static_cast<int>(rng() % 3);
    const double t = kTemperatures[rng() % 3];
    const MatrixXd z = volcon::oracle::random_unit_rows(b, d, rng);
    const auto labels = random_labels(b, rng);
    int used = 0;
    const double ref = volcon::oracle::supcon(z, labels, t, true, &used);
    volcon::EmbeddingBatch<double> batch{z, labels, t, volcon::LossReduction::kMean};
    if (used == 0) {
      ++degenerate;
      try {
        volcon::supcon_loss(batch);
        return {false, "batch without positives was not rejected"};
      } catch (const volcon::DegenerateBatchError&) {
      }
      continue;
    }
    const auto got = volcon::supcon_loss(batch);
    if (got.num_anchors_used != used) return {false, "anchor count differs from oracle"};
    worst = std::max(worst, std::abs(got.value - ref));
  }
  const double elapsed = seconds_since(t0);
  return {worst <= 1e-6 && elapsed < 10.0,
          "1000 batches (" + std::to_string(degenerate) + " degenerate), max |diff| " + fmt(worst, 2, true) +
              " (tol 1e-6), " + fmt(elapsed) + " s (limit 10 s)"};
}

// 2. Analytic gradient against central differences of the oracle loss.
// Relative error per batch is max|analytic - fd| / max(max|fd|, 1e-8).
Outcome gradient_check() {
  std::mt19937_64 rng(202);
  const auto t0 = Clock::now();
  double worst = 0.0;
  int checked = 0;
  while (checked < 100) {
    const int b = 2 + static_cast<int>(rng() % 7), d = 2 + static_cast<int>(rng() % 3);
    const double t = kTemperatures[rng() % 3];
    const MatrixXd z = volcon::oracle::random_unit_rows(b, d, rng);
    const auto labels = random_labels(b, rng);
    int used = 0;
    volcon::oracle::supcon(z, labels, t, true, &used);
    if (used == 0) continue;
    volcon::EmbeddingBatch<double> batch{z, labels, t, volcon::LossReduction::kMean};
    const MatrixXd analytic = volcon::supcon_gradient(batch);
    const MatrixXd fd = volcon::oracle::finite_difference(
        [&](const MatrixXd& x) { return volcon::oracle::supcon(x, labels, t, true); }, z, 1e-5);
    const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-8);
    worst = std::max(worst, (analytic - fd).cwiseAbs().maxCoeff() / scale);
    ++checked;
  }
  const double elapsed = seconds_since(t0);
  return {worst < 1e-4 && elapsed < 30.0,
          "100 batches, max relative error " + fmt(worst, 2, true) + " (tol 1e-4), " + fmt(elapsed) +
              " s (limit 30 s)"};
}

// 3. SimCLR objective as supcon with instance labels, and against NT-Xent.
Outcome simclr_reduction() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int pairs = 1 + static_cast<int>(rng() % 6), d = 2 + static_cast<int>(rng() % 7);
    const double t = kTemperatures[rng() % 3];
    const MatrixXd z = volcon::oracle::random_unit_rows(2 * pairs, d, rng);
    const auto simclr = volcon::simclr_loss<double>(z, t);
    volcon::EmbeddingBatch<double> batch{z, volcon::instance_labels(z.rows()), t, volcon::LossReduction::kMean};
    if (simclr.value != volcon::supcon_loss(batch).value)
      return {false, "simclr_loss differs from supcon_loss with instance labels"};
    worst = std::max(worst, std::abs(simclr.value - volcon::oracle::nt_xent(z, t)));
  }
  return {worst <= 1e-6, "100 paired batches, exact match with instance-label supcon, max |diff| vs NT-Xent " +
                             fmt(worst, 2, true) + " (tol 1e-6)"};
}

// 4. Contiguous, covering, balanced partitions.
Outcome partition_fidelity() {
  const auto a = volcon::assign_volume_labels(700, 100);
  for (std::size_t i = 0; i < a.labels.size(); ++i)
    if (a.labels[i] != static_cast<int>(i / 7)) return {false, "700/100 is not 100 runs of 7"};
  long cases = 0;
  for (int s = 1; s <= 64; ++s)
    for (int n = 1; n <= s; ++n) {
      const auto v = volcon::assign_volume_labels(s, n).labels;
      if (static_cast<int>(v.size()) != s || v.front() != 0 || v.back() != n - 1)
        return {false, "coverage fails at S=" + std::to_string(s) + " N=" + std::to_string(n)};
      std::vector<int> sizes(static_cast<std::size_t>(n), 0);
      for (int i = 0; i < s; ++i) {
        if (i > 0 && v[i] != v[i - 1] && v[i] != v[i - 1] + 1)
          return {false, "contiguity fails at S=" + std::to_string(s) + " N=" + std::to_string(n)};
        ++sizes[static_cast<std::size_t>(v[i])];
      }
      const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
      if (*lo == 0 || *hi - *lo > 1)
        return {false, "balance fails at S=" + std::to_string(s) + " N=" + std::to_string(n)};
      ++cases;
    }
  return {true, "700/100 gives 100 runs of 7; " + std::to_string(cases) + " (S, N) cases with S <= 64 verified"};
}

// 5. Confusion matrix and IoU against pixel counting.
Outcome miou_oracle() {
  std::mt19937_64 rng(505);
  for (int trial = 0; trial < 200; ++trial) {
    const int classes = 1 + static_cast<int>(rng() % 5);
    const int rows = 1 + static_cast<int>(rng() % 16), cols = 1 + static_cast<int>(rng() % 16);
    std::vector<int> pred(static_cast<std::size_t>(rows * cols)), target(pred.size());
    volcon::LabelImage p(rows, cols), t(rows, cols);
    for (std::size_t k = 0; k < pred.size(); ++k) {
      pred[k] = static_cast<int>(rng() % classes);
      target[k] = static_cast<int>(rng() % classes);
      p(static_cast<Eigen::Index>(k)) = pred[k];
      t(static_cast<Eigen::Index>(k)) = target[k];
    }
    volcon::ConfusionMatrix cm(classes);
    cm.update(p, t);
    const auto ref = volcon::oracle::confusion(pred, target, classes);
    for (int a = 0; a < classes; ++a)
      for (int b = 0; b < classes; ++b)
        if (cm.counts()(a, b) != ref[a][b]) return {false, "confusion counts differ at trial " + std::to_string(trial)};
    for (int c = 0; c < classes; ++c) {
      const double r = volcon::oracle::iou(pred, target, c);
      const auto got = cm.class_iou(c);
      if ((r < 0) != !got.has_value() || (got && *got != r))
        return {false, "IoU differs at trial " + std::to_string(trial)};
    }
    if (cm.miou() != volcon::oracle::miou(pred, target, classes))
      return {false, "MIOU differs at trial " + std::to_string(trial)};
    volcon::ConfusionMatrix perfect(classes);
    perfect.update(t, t);
    if (perfect.miou() != 1.0) return {false, "perfect prediction does not score 1.0"};
  }
  volcon::ConfusionMatrix ex(2);
  volcon::LabelImage target(1, 6), pred(1, 6);
  target << 0, 0, 0, 1, 1, 1;
  pred << 0, 0, 1, 1, 1, 0;
  ex.update(pred, target);
  const bool example = ex.counts()(0, 0) == 2 && ex.counts()(0, 1) == 1 && ex.counts()(1, 0) == 1 &&
                       ex.class_iou(0).value() == 0.5;
  return {example, "200 random pairs match exactly; perfect prediction = 1.0; [[2,1],[1,2]] class-0 IoU = " +
                       fmt(ex.class_iou(0).value_or(-1.0), 4)};
}

// Desk-scale benchmark shared by criteria 6 to 9.
struct Benchmark {
  volcon::TrainingData train;
  std::vector<volcon::TestVolume> test;
};

Benchmark make_benchmark(double noise) {
  volcon::SyntheticVolumeConfig syn;
  syn.layers = 3;
  syn.dims = {32, 64, 64};
  syn.noise = noise;
  syn.seed = 1;
  auto [amp, lab] = volcon::generate_synthetic_volume(syn);
  Benchmark b{volcon::make_training_data(std::move(amp), std::move(lab)), {}};
  for (std::uint64_t seed : {2u, 3u}) {
    syn.dims = {32, 30, 64};
    syn.seed = seed;
    auto [tamp, tlab] = volcon::generate_synthetic_volume(syn);
    b.test.push_back({std::move(tamp), std::move(tlab)});
  }
  return b;
}

json tiny_config(std::uint64_t seed, bool random_init) {
  return {{"seed", seed},
          {"model", {{"encoder", {{"family", "tiny"}}}, {"head", {{"num_classes", 3}}}}},
          {"augmentation", {{"crop_size", 32}}},
          {"pretrain",
           {{"epochs", 10}, {"batch_size", 16}, {"num_partitions", 8}, {"optimizer", {{"learning_rate", 0.05}}}}},
          {"finetune",
           {{"epochs", 20},
            {"batch_size", 16},
            {"encoder_init", random_init ? "random" : "pretrained"},
            {"optimizer", {{"learning_rate", 0.05}}}}}};
}

struct RunOutput {
  volcon::TrainResult pretrain;  // checkpoint only for the random baseline
  volcon::TrainResult finetune;
  volcon::EvaluationResult evaluation;
  json summary;
  double seconds = 0.0;
};

RunOutput run_pipeline(const Benchmark& bench, std::uint64_t seed, bool random_init) {
  const auto t0 = Clock::now();
  volcon::RunConfig cfg = volcon::run_config_from_json(tiny_config(seed, random_init));
  volcon::resolve_normalization(cfg, bench.train.amplitude);
  RunOutput out;
  if (random_init) {
    out.pretrain.checkpoint = volcon::make_random_init_checkpoint(
        cfg.encoder, cfg.projection, cfg.seed, {*cfg.normalization_mean, *cfg.normalization_std});
  } else {
    out.pretrain = volcon::run_pretrain(cfg, bench.train);
  }
  out.finetune = volcon::run_finetune(cfg, bench.train, &out.pretrain.checkpoint);
  out.evaluation = volcon::run_evaluate(cfg, out.finetune.checkpoint, bench.test);
  out.summary = volcon::summary_row(cfg, out.evaluation);
  out.seconds = seconds_since(t0);
  return out;
}

bool encoder_bit_identical(const volcon::ModelCheckpoint& pre, const volcon::ModelCheckpoint& fine,
                           long* compared) {
  for (const auto& [name, m] : pre.tensors) {
    if (name.rfind("encoder.", 0) != 0) continue;
    auto it = fine.tensors.find(name);
    if (it == fine.tensors.end() || it->second.rows() != m.rows() || it->second.cols() != m.cols()) return false;
    if (std::memcmp(it->second.data(), m.data(), sizeof(float) * static_cast<std::size_t>(m.size())) != 0)
      return false;
    ++*compared;
  }
  return true;
}

struct Shared {
  std::vector<RunOutput> volume_label_runs;  // seeds 0..4
  std::vector<RunOutput> random_runs;
  RunOutput noiseless;
};

Outcome end_to_end(const Shared& s) {
  const RunOutput& r = s.volume_label_runs.at(0);
  const auto& log = r.pretrain.log.records;
  if (log.size() != 10 || !log.front().mean_loss || !log.back().mean_loss) return {false, "pretrain log incomplete"};
  const double first = *log.front().mean_loss, last = *log.back().mean_loss;
  const double train_miou = r.finetune.checkpoint.metrics.at("train_miou").get<double>();
  const double clean_acc = s.noiseless.finetune.checkpoint.metrics.at("train_pixel_accuracy").get<double>();
  const bool pass = r.seconds < 300.0 && last < first && train_miou > 0.6 && clean_acc > 0.9;
  return {pass, fmt(r.seconds, 2) + " s (limit 300 s); pretrain loss epoch 1 " + fmt(first, 4) + " -> epoch 10 " +
                    fmt(last, 4) + "; train MIOU " + fmt(train_miou, 4) + " (> 0.6); noiseless pixel accuracy " +
                    fmt(clean_acc, 4) + " (> 0.9)"};
}

Outcome method_ordering(const Shared& s) {
  double vl = 0.0, rnd = 0.0;
  std::string per_seed;
  for (std::size_t k = 0; k < s.volume_label_runs.size(); ++k) {
    const double a = s.volume_label_runs[k].evaluation.average_miou;
    const double b = s.random_runs[k].evaluation.average_miou;
    vl += a;
    rnd += b;
    per_seed += " " + fmt(a, 4) + "/" + fmt(b, 4);
  }
  vl /= static_cast<double>(s.volume_label_runs.size());
  rnd /= static_cast<double>(s.random_runs.size());
  return {vl >= rnd, "5-seed test MIOU volume labels " + fmt(vl, 4) + " vs random init " + fmt(rnd, 4) +
                         " (per seed:" + per_seed + ")"};
}

Outcome frozen_encoder(const Shared& s) {
  long compared = 0;
  int runs = 0;
  auto check = [&](const RunOutput& r) {
    ++runs;
    return encoder_bit_identical(r.pretrain.checkpoint, r.finetune.checkpoint, &compared);
  };
  bool ok = check(s.noiseless);
  for (const auto& r : s.volume_label_runs) ok = check(r) && ok;
  for (const auto& r : s.random_runs) ok = check(r) && ok;
  // The rebuilt model must also carry the pretrained payloads.
  volcon::SegmentationModel model = volcon::SegmentationModel::from_checkpoint(s.volume_label_runs[0].finetune.checkpoint);
  for (const auto& [name, p] : model.encoder().parameters().entries())
    ok = ok && p.value == s.volume_label_runs[0].pretrain.checkpoint.tensors.at(name);
  return {ok && compared > 0, std::to_string(runs) + " fine-tune runs, " + std::to_string(compared) +
                                  " encoder tensors compared byte for byte"};
}

Outcome determinism(const Benchmark& bench, const Shared& s) {
  const RunOutput again = run_pipeline(bench, 0, false);
  const RunOutput& first = s.volume_label_runs.at(0);
  double worst = 0.0;
  auto compare = [&](const volcon::TrainLog& a, const volcon::TrainLog& b) {
    if (a.records.size() != b.records.size()) return false;
    for (std::size_t e = 0; e < a.records.size(); ++e) {
      if (a.records[e].mean_loss.has_value() != b.records[e].mean_loss.has_value()) return false;
      if (a.records[e].mean_loss) worst = std::max(worst, std::abs(*a.records[e].mean_loss - *b.records[e].mean_loss));
    }
    return true;
  };
  const bool logs = compare(first.pretrain.log, again.pretrain.log) && compare(first.finetune.log, again.finetune.log);
  const bool summary = first.summary.dump() == again.summary.dump();
  return {logs && worst <= 1e-6 && summary,
          "max loss difference " + fmt(worst, 2, true) + " (tol 1e-6); summary JSON " +
              (summary ? "identical" : "differs")};
}

}  // namespace

int main() {
  report(1, "loss oracle equivalence", guarded(loss_oracle));
  report(2, "gradient check", guarded(gradient_check));
  report(3, "SimCLR reduction", guarded(simclr_reduction));
  report(4, "partition fidelity", guarded(partition_fidelity));
  report(5, "MIOU oracle", guarded(miou_oracle));

  Shared shared;
  Benchmark bench;
  std::string setup_error;
  try {
    bench = make_benchmark(0.05);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      shared.volume_label_runs.push_back(run_pipeline(bench, seed, false));
      shared.random_runs.push_back(run_pipeline(bench, seed, true));
    }
    shared.noiseless = run_pipeline(make_benchmark(0.0), 0, false);
  } catch (const std::exception& e) {
    setup_error = e.what();
  }
  auto with_setup = [&](auto&& fn) {
    if (!setup_error.empty()) return Outcome{false, "pipeline failed: " + setup_error};
    return guarded(fn);
  };
  report(6, "desk-scale end-to-end", with_setup([&] { return end_to_end(shared); }));
  report(7, "method ordering (volume labels >= random init)", with_setup([&] { return method_ordering(shared); }));
  report(8, "frozen encoder", with_setup([&] { return frozen_encoder(shared); }));
  report(9, "determinism", with_setup([&] { return determinism(bench, shared); }));

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
