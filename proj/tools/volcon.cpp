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
// volcon: command-line driver for synthetic data, volume labels, both
// training stages, evaluation and reporting.

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "volcon/checkpoint.hpp"
#include "volcon/errors.hpp"
#include "volcon/pipeline.hpp"
#include "volcon/training.hpp"
#include "volcon/volume.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw volcon::DataError("cannot write '" + path.string() + "'");
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw volcon::MissingArtifactError("'" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// <out>/run-<UTC timestamp>, or <out> itself with --overwrite.
fs::path make_run_dir(const std::string& out, bool overwrite) {
  fs::path dir(out);
  if (!overwrite) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream name;
    name << "run-" << std::put_time(&tm, "%Y%m%d-%H%M%S");
    dir /= name.str();
    for (int k = 1; fs::exists(dir); ++k) dir = fs::path(out) / (name.str() + "-" + std::to_string(k));
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw volcon::DataError("cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

void log_epoch(const std::string& stage, int total, const volcon::EpochRecord& r) {
  std::cerr << "[" << stage << "] epoch " << r.epoch << "/" << total << " loss ";
  if (r.mean_loss)
    std::cerr << std::fixed << std::setprecision(5) << *r.mean_loss;
  else
    std::cerr << "n/a";
  std::cerr << " (" << std::setprecision(2) << r.wall_seconds << " s";
  if (r.batches_skipped > 0) std::cerr << ", " << r.batches_skipped << " batches skipped";
  std::cerr << ")\n";
}

struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool overwrite = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run config JSON")->required();
    cmd->add_option("--set", overrides, "Override a config value: key.path=value")->take_all();
    cmd->add_option("--seed", seed, "Override the run seed");
    cmd->add_option("--out", out, "Output directory (default: config output_dir)");
    cmd->add_flag("--overwrite", overwrite, "Write into --out directly instead of a new run-<timestamp>");
  }

  volcon::RunConfig load() const {
    json doc = volcon::read_config_document(config_path);
    for (const auto& o : overrides) volcon::apply_override(doc, o);
    if (seed) volcon::apply_override(doc, "seed=" + std::to_string(*seed));
    if (!out.empty()) doc["output_dir"] = out;
    return volcon::run_config_from_json(doc);
  }
};

struct Stages {
  bool pretrain = false;
  bool finetune = false;
  bool evaluate = false;
};

// Shared body of pretrain / finetune / evaluate / run.
int run_stages(const ConfigFlags& flags, const Stages& stages, const std::string& checkpoint_flag) {
  volcon::RunConfig cfg = flags.load();
  if (!checkpoint_flag.empty()) {
    if (stages.finetune) cfg.finetune.checkpoint = checkpoint_flag;
    if (stages.evaluate && !stages.finetune) cfg.evaluate.checkpoint = checkpoint_flag;
  }

  // Checkpoints named by the config must exist before any work starts.
  std::optional<volcon::ModelCheckpoint> pretrained, finetuned;
  if (stages.finetune && !stages.pretrain && cfg.finetune.encoder_init == volcon::EncoderInit::kPretrained) {
    if (cfg.finetune.checkpoint.empty())
      throw volcon::MissingArtifactError("pretrain checkpoint (set --checkpoint or finetune.checkpoint)");
    pretrained = volcon::load_checkpoint(cfg.finetune.checkpoint);
  }
  if (stages.evaluate && !stages.finetune) {
    if (cfg.evaluate.checkpoint.empty())
      throw volcon::MissingArtifactError("finetune checkpoint (set --checkpoint or evaluate.checkpoint)");
    finetuned = volcon::load_checkpoint(cfg.evaluate.checkpoint);
  }

  std::optional<volcon::TrainingData> data;
  if (stages.pretrain || stages.finetune) {
    data = volcon::load_training_data(cfg, stages.finetune);
    volcon::resolve_normalization(cfg, data->amplitude);
  } else if (finetuned) {
    const auto norm = volcon::normalization_from_checkpoint(*finetuned);
    if (!cfg.normalization_mean) cfg.normalization_mean = norm.mean;
    if (!cfg.normalization_std) cfg.normalization_std = norm.std;
  }
  std::vector<volcon::TestVolume> test;
  if (stages.evaluate) test = volcon::load_test_volumes(cfg);

  const fs::path dir = make_run_dir(cfg.output_dir, flags.overwrite);
  std::cerr << "run directory: " << dir.string() << "\n";
  write_text(dir / "resolved_config.json", volcon::to_json(cfg).dump(2) + "\n");

  if (stages.pretrain && cfg.finetune.encoder_init == volcon::EncoderInit::kPretrained) {
    const int total = cfg.pretrain.stage.epochs;
    auto result = volcon::run_pretrain(cfg, *data, [&](const volcon::EpochRecord& r) {
      log_epoch("pretrain", total, r);
    });
    for (const auto& w : result.log.warnings) std::cerr << "warning: " << w << "\n";
    volcon::save_checkpoint((dir / "pretrain.ckpt").string(), result.checkpoint);
    write_text(dir / "pretrain_log.jsonl", volcon::train_log_to_jsonl(result.log));
    pretrained = std::move(result.checkpoint);
  }
  if (stages.finetune) {
    const int total = cfg.finetune.stage.epochs;
    auto result = volcon::run_finetune(cfg, *data, pretrained ? &*pretrained : nullptr,
                                       [&](const volcon::EpochRecord& r) { log_epoch("finetune", total, r); });
    volcon::save_checkpoint((dir / "finetune.ckpt").string(), result.checkpoint);
    write_text(dir / "finetune_log.jsonl", volcon::train_log_to_jsonl(result.log));
    std::cerr << "[finetune] training pixel accuracy "
              << result.checkpoint.metrics.at("train_pixel_accuracy").get<double>() << ", MIOU "
              << result.checkpoint.metrics.at("train_miou").get<double>() << "\n";
    finetuned = std::move(result.checkpoint);
  }
  if (stages.evaluate) {
    const auto result = volcon::run_evaluate(cfg, *finetuned, test);
    write_text(dir / "evaluation.json", volcon::to_json(result).dump(2) + "\n");
    const json row = volcon::summary_row(cfg, result);
    write_text(dir / "summary.json", json{{"rows", json::array({row})}}.dump(2) + "\n");
    std::cerr << volcon::format_summary_table({row});
  }
  std::cout << dir.string() << "\n";
  return 0;
}

// Summary rows from a run directory, or from its run-* children.
std::vector<json> collect_rows(const fs::path& dir, std::vector<fs::path>& sources) {
  std::vector<json> rows;
  auto take = [&](const fs::path& d) {
    const fs::path f = d / "summary.json";
    if (!fs::exists(f)) return;
    json doc;
    try {
      doc = json::parse(read_text(f));
      for (const auto& r : doc.at("rows")) rows.push_back(r);
    } catch (const json::exception& e) {
      throw volcon::FormatError("'" + f.string() + "': " + e.what());
    }
    sources.push_back(d);
  };
  if (!fs::is_directory(dir)) throw volcon::MissingArtifactError("run directory '" + dir.string() + "'");
  take(dir);
  if (rows.empty()) {
    std::vector<fs::path> children;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_directory()) children.push_back(e.path());
    std::sort(children.begin(), children.end());
    for (const auto& c : children) take(c);
  }
  return rows;
}

std::vector<double> read_losses(const fs::path& file) {
  std::vector<double> out;
  if (!fs::exists(file)) return out;
  for (const auto& r : volcon::train_log_from_jsonl(read_text(file)).records)
    out.push_back(r.mean_loss.value_or(std::nan("")));
  return out;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::string svg_loss_curves(const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  const double w = 640, h = 360, m = 50;
  double lo = 1e300, hi = -1e300;
  std::size_t n = 1;
  for (const auto& [name, v] : series) {
    n = std::max(n, v.size());
    for (double x : v)
      if (std::isfinite(x)) lo = std::min(lo, x), hi = std::max(hi, x);
  }
  if (lo > hi) lo = 0, hi = 1;
  if (hi - lo < 1e-12) hi = lo + 1;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">Mean loss per epoch</text>\n"
     << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m << "\" y2=\"" << h - m
     << "\" stroke=\"black\"/>\n<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\""
     << h - m << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << m - 5 << "\" y=\"" << m << "\" text-anchor=\"end\">" << hi << "</text>\n"
     << "<text x=\"" << m - 5 << "\" y=\"" << h - m << "\" text-anchor=\"end\">" << lo << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& [name, v] = series[s];
    os << "<polyline fill=\"none\" stroke=\"" << kPalette[s % 6] << "\" points=\"";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) continue;
      const double x = m + (w - 2 * m) * (n > 1 ? double(i) / double(n - 1) : 0.5);
      const double y = h - m - (h - 2 * m) * (v[i] - lo) / (hi - lo);
      os << x << "," << y << " ";
    }
    os << "\"/>\n<text x=\"" << w - m << "\" y=\"" << m + 16 * double(s) << "\" text-anchor=\"end\" fill=\""
       << kPalette[s % 6] << "\">" << name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string svg_miou_bars(const std::vector<json>& rows) {
  const double w = 640, h = 360, m = 50;
  const double bw = (w - 2 * m) / double(std::max<std::size_t>(rows.size(), 1));
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">Average test MIOU</text>\n"
     << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m << "\" y2=\"" << h - m
     << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double v = rows[i].at("average_miou").get<double>();
    const double bh = (h - 2 * m) * std::clamp(v, 0.0, 1.0);
    const double x = m + bw * double(i) + bw * 0.1;
    std::string label = rows[i].at("method").get<std::string>();
    if (!rows[i].at("num_partitions").is_null()) label += " N=" + rows[i].at("num_partitions").dump();
    os << "<rect x=\"" << x << "\" y=\"" << h - m - bh << "\" width=\"" << bw * 0.8 << "\" height=\"" << bh
       << "\" fill=\"" << kPalette[i % 6] << "\"/>\n"
       << "<text x=\"" << x + bw * 0.4 << "\" y=\"" << h - m - bh - 4 << "\" text-anchor=\"middle\">"
       << std::fixed << std::setprecision(4) << v << "</text>\n"
       << "<text x=\"" << x + bw * 0.4 << "\" y=\"" << h - m + 16 << "\" text-anchor=\"middle\">" << label
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& format, const std::string& out) {
  std::vector<json> rows;
  std::vector<fs::path> sources;
  for (const auto& d : run_dirs) {
    auto r = collect_rows(d, sources);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (rows.empty()) throw volcon::MissingArtifactError("no summary.json found under the given run directories");
  if (format == "text") {
    std::cout << volcon::format_summary_table(rows);
  } else if (format == "json") {
    std::cout << json{{"rows", rows}}.dump(2) << "\n";
  } else {
    const fs::path target = out.empty() ? fs::path(run_dirs.front()) : fs::path(out);
    fs::create_directories(target);
    std::vector<std::pair<std::string, std::vector<double>>> series;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const std::string tag = sources[i].filename().string();
      for (const auto* stage : {"pretrain", "finetune"}) {
        auto v = read_losses(sources[i] / (std::string(stage) + "_log.jsonl"));
        if (!v.empty()) series.emplace_back(tag + " " + stage, std::move(v));
      }
    }
    write_text(target / "loss_curves.svg", svg_loss_curves(series));
    write_text(target / "miou_bars.svg", svg_miou_bars(rows));
    std::cout << (target / "loss_curves.svg").string() << "\n" << (target / "miou_bars.svg").string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"volcon: volume-label contrastive pretraining for seismic segmentation"};
  app.require_subcommand(1);

  // synth
  volcon::SyntheticVolumeConfig synth;
  std::vector<long long> dims{synth.dims.inlines, synth.dims.crosslines, synth.dims.depth};
  std::string synth_out;
  bool synth_overwrite = false;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic amplitude/label NPY pair");
  synth_cmd->add_option("--layers", synth.layers, "Number of depth layers (classes)");
  synth_cmd->add_option("--dims", dims, "inlines crosslines depth")->expected(3);
  synth_cmd->add_option("--dip", synth.dip, "Boundary shift per cross-line");
  synth_cmd->add_option("--noise", synth.noise, "Gaussian noise std");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_flag("--overwrite", synth_overwrite, "Write into --out directly");

  // make-labels
  std::string labels_volume, labels_out;
  long long num_partitions = volcon::kDefaultNumPartitions;
  bool labels_overwrite = false;
  auto* labels_cmd = app.add_subcommand("make-labels", "Assign volume labels to the cross-lines of a volume");
  labels_cmd->add_option("--train-volume", labels_volume, "Amplitude NPY")->required();
  labels_cmd->add_option("--num-partitions", num_partitions, "Number of sub-volumes N");
  labels_cmd->add_option("--out", labels_out, "Output directory")->required();
  labels_cmd->add_flag("--overwrite", labels_overwrite, "Write into --out directly");

  // training / evaluation stages
  ConfigFlags pre_flags, fine_flags, eval_flags, run_flags;
  std::string fine_ckpt, eval_ckpt;
  auto* pre_cmd = app.add_subcommand("pretrain", "Contrastive pretraining of encoder and projection head");
  pre_flags.add_to(pre_cmd);
  auto* fine_cmd = app.add_subcommand("finetune", "Train the segmentation head on the frozen encoder");
  fine_flags.add_to(fine_cmd);
  fine_cmd->add_option("--checkpoint", fine_ckpt, "Pretrain checkpoint");
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a fine-tuned model on the test splits");
  eval_flags.add_to(eval_cmd);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Finetune checkpoint");
  auto* run_cmd = app.add_subcommand("run", "Pretrain, fine-tune and evaluate in one run directory");
  run_flags.add_to(run_cmd);

  // report
  std::vector<std::string> report_dirs;
  std::string report_format = "text", report_out;
  auto* report_cmd = app.add_subcommand("report", "Comparison table or plots from run directories");
  report_cmd->add_option("--run-dir", report_dirs, "Run directory (repeatable)")->required();
  report_cmd->add_option("--format", report_format, "text, json or plot")
      ->check(CLI::IsMember({"text", "json", "plot"}));
  report_cmd->add_option("--out", report_out, "Directory for plot files (default: first run dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(volcon::ExitCode::kConfig);
  }

  try {
    if (*synth_cmd) {
      synth.dims = {dims[0], dims[1], dims[2]};
      const auto [amp, labels] = volcon::generate_synthetic_volume(synth);
      const fs::path dir = make_run_dir(synth_out, synth_overwrite);
      volcon::save_volume((dir / "amplitude.npy").string(), amp);
      volcon::save_volume((dir / "labels.npy").string(), labels);
      write_text(dir / "synth_config.json",
                 json{{"layers", synth.layers},
                      {"dims", dims},
                      {"dip", synth.dip},
                      {"noise", synth.noise},
                      {"seed", synth.seed}}
                         .dump(2) +
                     "\n");
      std::cout << dir.string() << "\n";
      return 0;
    }
    if (*labels_cmd) {
      const auto vol = volcon::load_seismic_volume(labels_volume);
      const auto assignment = volcon::assign_volume_labels(vol.dims.crosslines, num_partitions);
      const fs::path dir = make_run_dir(labels_out, labels_overwrite);
      write_text(dir / "volume_labels.json", volcon::assignment_to_json(assignment) + "\n");
      std::cout << (dir / "volume_labels.json").string() << "\n";
      return 0;
    }
    if (*pre_cmd) return run_stages(pre_flags, {true, false, false}, "");
    if (*fine_cmd) return run_stages(fine_flags, {false, true, false}, fine_ckpt);
    if (*eval_cmd) return run_stages(eval_flags, {false, false, true}, eval_ckpt);
    if (*run_cmd) return run_stages(run_flags, {true, true, true}, "");
    if (*report_cmd) return cmd_report(report_dirs, report_format, report_out);
  } catch (const volcon::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
