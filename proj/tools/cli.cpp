#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "stgrasp/analysis.hpp"
#include "stgrasp/error.hpp"
#include "stgrasp/models.hpp"
#include "stgrasp/serialize.hpp"
#include "stgrasp/tasks.hpp"

namespace stgrasp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config parsing

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

ImageDims read_dims(const json& j, ImageDims d, const std::string& where) {
  check_keys(j, {"height", "width", "channels"}, where);
  read(j, "height", d.height);
  read(j, "width", d.width);
  read(j, "channels", d.channels);
  return d;
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& command, const json& j) {
  check_keys(j,
             {"dataset", "checkpoint", "init_checkpoint", "out_dir", "input", "seed", "task", "variant", "modality",
              "threads", "encoder", "heads", "train", "num_splits", "split_index", "split_ratios", "kind", "synthetic",
              "candidates", "window_start", "resize", "sample", "stream", "patches", "frame", "bench"},
             "config");
  RunConfig c;
  c.command = command;
  try {
    auto path = [&](const char* key, fs::path& dst) {
      if (j.contains(key)) dst = j.at(key).get<std::string>();
    };
    path("dataset", c.dataset);
    path("checkpoint", c.checkpoint);
    path("init_checkpoint", c.init_checkpoint);
    path("out_dir", c.out_dir);
    path("input", c.input);
    read(j, "seed", c.seed);
    if (j.contains("task")) c.task = parse_task(j["task"].get<std::string>());
    if (j.contains("variant")) c.variant = parse_variant(j["variant"].get<std::string>());
    if (j.contains("modality")) c.modality = parse_slip_modality(j["modality"].get<std::string>());
    read(j, "threads", c.threads);
    if (j.contains("encoder")) {
      const json& e = j["encoder"];
      check_keys(e, {"embed_dim", "num_layers", "num_heads", "mlp_hidden", "tactile_patch_h", "tactile_patch_w",
                     "visual_patch_h", "visual_patch_w"},
                 "encoder");
      read(e, "embed_dim", c.embed_dim);
      read(e, "num_layers", c.num_layers);
      read(e, "num_heads", c.num_heads);
      read(e, "mlp_hidden", c.mlp_hidden);
      read(e, "tactile_patch_h", c.tactile_patch_h);
      read(e, "tactile_patch_w", c.tactile_patch_w);
      read(e, "visual_patch_h", c.visual_patch_h);
      read(e, "visual_patch_w", c.visual_patch_w);
    }
    if (j.contains("heads")) {
      check_keys(j["heads"], {"embedding_dim", "head_hidden"}, "heads");
      read(j["heads"], "embedding_dim", c.embedding_dim);
      read(j["heads"], "head_hidden", c.head_hidden);
    }
    if (j.contains("train")) {
      if (j["train"].contains("seed")) throw ConfigError("set the seed at the top level, not inside 'train'");
      c.train = TrainConfig::from_json(j["train"], c.train);
    }
    read(j, "num_splits", c.num_splits);
    if (j.contains("split_index")) c.split_index = j["split_index"].get<std::size_t>();
    if (j.contains("split_ratios")) {
      check_keys(j["split_ratios"], {"train", "val", "test"}, "split_ratios");
      read(j["split_ratios"], "train", c.ratios.train);
      read(j["split_ratios"], "val", c.ratios.val);
      read(j["split_ratios"], "test", c.ratios.test);
    }
    read(j, "kind", c.kind);
    if (j.contains("synthetic")) {
      const json& s = j["synthetic"];
      check_keys(s, {"count", "tactile", "visual", "raw_frames", "noise", "cell_margin", "slip_fraction"}, "synthetic");
      read(s, "count", c.synthetic.count);
      if (s.contains("tactile")) c.synthetic.tactile = read_dims(s["tactile"], c.synthetic.tactile, "synthetic.tactile");
      if (s.contains("visual")) c.synthetic.visual = read_dims(s["visual"], c.synthetic.visual, "synthetic.visual");
      read(s, "raw_frames", c.synthetic.raw_frames);
      read(s, "noise", c.synthetic.noise);
      read(s, "cell_margin", c.synthetic.cell_margin);
      read(s, "slip_fraction", c.synthetic.slip_fraction);
    }
    if (j.contains("candidates")) {
      const json& s = j["candidates"];
      check_keys(s, {"min", "max", "step", "random_seed", "random_count"}, "candidates");
      read(s, "min", c.candidates.min);
      read(s, "max", c.candidates.max);
      read(s, "step", c.candidates.step);
      if (s.contains("random_seed")) c.candidates.random_seed = s["random_seed"].get<std::uint64_t>();
      read(s, "random_count", c.candidates.random_count);
    }
    read(j, "window_start", c.convert.window_start);
    if (j.contains("resize")) {
      ImageDims d{0, 0, 0};
      d = read_dims(j["resize"], d, "resize");
      c.convert.resize = d;
    }
    read(j, "sample", c.sample);
    read(j, "stream", c.stream);
    if (j.contains("patches")) c.patches = j["patches"].get<std::vector<std::size_t>>();
    if (j.contains("frame")) c.frame = j["frame"].get<std::size_t>();
    if (j.contains("bench")) {
      const json& b = j["bench"];
      check_keys(b, {"frames", "height", "width", "channels", "patch_h", "patch_w", "repeats"}, "bench");
      read(b, "frames", c.bench.frames);
      read(b, "height", c.bench.height);
      read(b, "width", c.bench.width);
      read(b, "channels", c.bench.channels);
      read(b, "patch_h", c.bench.patch_h);
      read(b, "patch_w", c.bench.patch_w);
      read(b, "repeats", c.bench.repeats);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.synthetic.seed = c.seed;
  c.train.seed = c.seed;
  c.train.eval_threads = c.threads;
  if (c.task) c.train.task = *c.task;
  if (c.threads == 0) throw ConfigError("threads must be positive");
  if (c.num_splits == 0) throw ConfigError("num_splits must be positive");
  c.candidates.validate();
  c.train.validate();
  return c;
}

// ---------------------------------------------------------------- helpers

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

void require_dataset(const RunConfig& c) {
  require(!c.dataset.empty(), "--dataset is required");
  if (!fs::exists(c.dataset / "manifest.json")) throw DataError("no dataset manifest under " + c.dataset.string());
}

Checkpoint require_checkpoint(const fs::path& p, const char* flag) {
  require(!p.empty(), std::string(flag) + " is required");
  if (!fs::exists(p)) throw DataError("checkpoint not found: " + p.string());
  return load_checkpoint(p);
}

// Clears a previous dataset written to `dir`, refusing to touch anything else.
void prepare_dataset_dir(const fs::path& dir) {
  if (!fs::exists(dir)) return;
  if (fs::exists(dir / "manifest.json")) {
    fs::remove_all(dir);
    return;
  }
  if (!fs::is_empty(dir)) throw ConfigError("output directory " + dir.string() + " is not empty and holds no dataset");
}

std::string model_name(Variant v) {
  return v == Variant::DividedSpaceTime ? "divided (TimeSformer)" : "factorised (ViViT)";
}

EncoderConfig encoder_for(const RunConfig& c, const ImageSequence& seq, std::size_t ph, std::size_t pw, Variant v) {
  EncoderConfig e;
  e.variant = v;
  e.embed_dim = c.embed_dim;
  e.num_layers = c.num_layers;
  e.num_heads = c.num_heads;
  e.mlp_hidden = c.mlp_hidden;
  e.patch_h = ph;
  e.patch_w = pw;
  e.frames = seq.num_frames() >= kMinFramesForSubsample ? kSubsampledFrames : seq.num_frames();
  e.height = seq.height();
  e.width = seq.width();
  e.channels = seq.channels();
  e.validate();
  return e;
}

GraspModelConfig grasp_config(const RunConfig& c, const GraspDataset& ds) {
  require(!ds.samples.empty(), "dataset is empty");
  const GraspSample& s = ds.samples.front();
  const Variant v = c.variant.value_or(Variant::DividedSpaceTime);
  GraspModelConfig g;
  g.tactile = encoder_for(c, s.pinch_tactile, c.tactile_patch_h, c.tactile_patch_w, v);
  g.visual = encoder_for(c, s.pinch_visual, c.visual_patch_h, c.visual_patch_w, v);
  g.embedding_dim = c.embedding_dim;
  g.head_hidden = c.head_hidden;
  g.validate();
  return g;
}

SlipModelConfig slip_config(const RunConfig& c, const SlipDataset& ds) {
  require(!ds.samples.empty(), "dataset is empty");
  const SlipSample& s = ds.samples.front();
  const Variant v = c.variant.value_or(Variant::DividedSpaceTime);
  SlipModelConfig m;
  m.modality = c.modality;
  m.visual = encoder_for(c, s.visual, c.visual_patch_h, c.visual_patch_w, v);
  m.tactile = encoder_for(c, s.tactile, c.tactile_patch_h, c.tactile_patch_w, v);
  m.validate();
  return m;
}

Task default_task(DatasetKind k) { return k == DatasetKind::Slip ? Task::Slip : Task::Outcome; }

void check_task_kind(Task t, DatasetKind k) {
  if ((t == Task::Slip) != (k == DatasetKind::Slip)) {
    throw ConfigError("task '" + std::string(to_string(t)) + "' does not match the dataset kind");
  }
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

std::string modality_label(Task t, SlipModality m) {
  return t == Task::Slip ? std::string(to_string(m)) : std::string("vision+tactile");
}

template <typename Dataset>
std::size_t find_sample(const Dataset& ds, const std::string& id) {
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    if (ds.samples[i].id == id) return i;
  throw InputError("unknown sample '" + id + "'");
}

}  // namespace

// ---------------------------------------------------------------- commands

int cmd_gen_synthetic(const RunConfig& c, std::ostream& out) {
  require(!c.out_dir.empty(), "--out-dir is required");
  require(c.kind == "grasp" || c.kind == "slip", "--kind must be grasp or slip");
  c.synthetic.validate();
  prepare_dataset_dir(c.out_dir);
  if (c.kind == "grasp") {
    save_dataset(generate_grasp_synthetic(c.synthetic), c.out_dir);
  } else {
    SyntheticSpec spec = c.synthetic;
    save_dataset(generate_slip_synthetic(spec), c.out_dir);
  }
  out << json{{"kind", c.kind}, {"count", c.synthetic.count}, {"out_dir", c.out_dir.string()}}.dump() << '\n';
  return kExitOk;
}

int cmd_convert_slip(const RunConfig& c, std::ostream& out) {
  require(!c.input.empty(), "--input is required");
  require(!c.out_dir.empty(), "--out-dir is required");
  SlipDataset ds = convert_slip_recordings(c.input, c.convert);
  prepare_dataset_dir(c.out_dir);
  save_dataset(ds, c.out_dir);
  out << json{{"kind", "slip"}, {"count", ds.samples.size()}, {"out_dir", c.out_dir.string()}}.dump() << '\n';
  return kExitOk;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
  require_dataset(c);
  require(!c.out_dir.empty(), "--out-dir is required");
  const DatasetKind kind = peek_dataset_kind(c.dataset);
  const Task task = c.task.value_or(default_task(kind));
  check_task_kind(task, kind);
  std::optional<Checkpoint> init;
  if (task == Task::Fruit) init = require_checkpoint(c.init_checkpoint, "--init-checkpoint (a trained outcome model)");

  std::optional<SlipDataset> slip;
  std::optional<GraspDataset> grasp;
  std::size_t n = 0;
  if (kind == DatasetKind::Slip) {
    slip = load_slip_dataset(c.dataset);
    n = slip->samples.size();
  } else {
    grasp = load_grasp_dataset(c.dataset);
    n = grasp->samples.size();
  }
  const auto splits = make_splits(n, c.ratios, c.num_splits, c.seed);
  fs::create_directories(c.out_dir);
  std::ofstream log(c.out_dir / "train_log.jsonl", std::ios::binary | std::ios::trunc);

  TrainConfig tc = c.train;
  tc.task = task;
  std::vector<Metrics> scored;
  json per_split = json::array();
  std::string variant_name;
  for (std::size_t k = 0; k < splits.size(); ++k) {
    tc.seed = c.seed + k;
    const std::string run = "split" + std::to_string(k);
    TrainResult r;
    Checkpoint ck;
    if (task == Task::Slip) {
      SlipModel model(slip_config(c, *slip), c.seed + k);
      variant_name = model_name(model.config().visual.variant);
      r = train(make_slip_task(model, *slip), splits[k], tc, &log, run);
      ck = model.to_checkpoint();
    } else if (task == Task::Outcome) {
      GraspModel model(grasp_config(c, *grasp), c.seed + k);
      variant_name = model_name(model.config().tactile.variant);
      r = train(make_outcome_task(model, *grasp), splits[k], tc, &log, run);
      ck = model.to_checkpoint();
    } else {
      GraspModel model = GraspModel::from_checkpoint(*init);
      variant_name = model_name(model.config().tactile.variant);
      r = train(make_fruit_task(model, *grasp, c.threads), splits[k], tc, &log, run);
      ck = model.to_checkpoint();
    }
    const Metrics& score = splits[k].test.empty() ? r.train : r.test;
    scored.push_back(score);
    json entry{{"split", k}, {"best_epoch", r.best_epoch}, {"epochs_run", r.epochs_run}, {"train", r.train.to_json()},
               {"score", score.to_json()}, {"scored_on", splits[k].test.empty() ? "train" : "test"}};
    if (r.best_val) entry["val"] = r.best_val->to_json();
    ck.metadata["task"] = to_string(task);
    ck.metadata["split"] = k;
    ck.metadata["train"] = tc.to_json();
    save_checkpoint(c.out_dir / ("split_" + std::to_string(k) + ".ckpt"), ck);
    if (k == 0) save_checkpoint(c.out_dir / "model.ckpt", ck);
    per_split.push_back(std::move(entry));
  }
  const SplitSummary summary = average_over_splits(scored);
  json metrics{{"task", to_string(task)}, {"model", variant_name}, {"modality", modality_label(task, c.modality)},
               {"seed", c.seed}, {"train_config", c.train.to_json()}, {"splits", per_split}, {"summary", summary.to_json()}};
  write_text(c.out_dir / "metrics.json", metrics.dump(2) + "\n");

  out << "| task | modality | model | split | accuracy | loss |\n";
  out << "|------|----------|-------|-------|----------|------|\n";
  const std::string mod = modality_label(task, c.modality);
  for (std::size_t k = 0; k < scored.size(); ++k) {
    out << "| " << to_string(task) << " | " << mod << " | " << variant_name << " | " << k << " | " << fmt(scored[k].accuracy)
        << " | " << fmt(scored[k].loss) << " |\n";
  }
  out << "| " << to_string(task) << " | " << mod << " | " << variant_name << " | mean (var) | " << fmt(summary.accuracy_mean)
      << " (" << fmt(summary.accuracy_variance, 6) << ") | " << fmt(summary.loss_mean) << " |\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
  require_dataset(c);
  const Checkpoint ck = require_checkpoint(c.checkpoint, "--checkpoint");
  const DatasetKind kind = peek_dataset_kind(c.dataset);
  const ModelKind mk = checkpoint_model_kind(ck);
  if ((mk == ModelKind::Slip) != (kind == DatasetKind::Slip)) throw ConfigError("checkpoint and dataset kinds differ");
  const Task task = c.task.value_or(default_task(kind));
  check_task_kind(task, kind);

  Metrics m;
  std::string variant_name, mod;
  std::vector<std::size_t> idx;
  auto pick = [&](std::size_t n) {
    if (c.split_index) {
      require(*c.split_index < c.num_splits, "--split-index must be below --splits");
      idx = make_splits(n, c.ratios, c.num_splits, c.seed)[*c.split_index].test;
      require(!idx.empty(), "the selected split has no test samples");
    } else {
      idx.resize(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    }
  };
  if (mk == ModelKind::Slip) {
    const SlipModel model = SlipModel::from_checkpoint(ck);
    const SlipDataset ds = load_slip_dataset(c.dataset);
    pick(ds.samples.size());
    variant_name = model_name(model.config().visual.variant);
    mod = std::string(to_string(model.config().modality));
    m = evaluate(make_slip_task(model, ds), idx, c.threads);
  } else {
    GraspModel model = GraspModel::from_checkpoint(ck);
    const GraspDataset ds = load_grasp_dataset(c.dataset);
    pick(ds.samples.size());
    variant_name = model_name(model.config().tactile.variant);
    mod = "vision+tactile";
    m = task == Task::Fruit ? evaluate(make_fruit_task(model, ds, c.threads), idx, c.threads)
                            : evaluate(make_outcome_task(model, ds), idx, c.threads);
  }
  out << "| task | modality | model | samples | accuracy | loss |\n";
  out << "|------|----------|-------|---------|----------|------|\n";
  out << "| " << to_string(task) << " | " << mod << " | " << variant_name << " | " << m.total << " | " << fmt(m.accuracy)
      << " | " << fmt(m.loss) << " |\n";
  if (!c.out_dir.empty()) {
    write_text(c.out_dir / "eval.json",
               json{{"task", to_string(task)}, {"modality", mod}, {"model", variant_name}, {"metrics", m.to_json()}}.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_infer_force(const RunConfig& c, std::ostream& out) {
  require_dataset(c);
  const Checkpoint ck = require_checkpoint(c.checkpoint, "--checkpoint");
  if (checkpoint_model_kind(ck) != ModelKind::Grasp) throw ConfigError("infer-force needs a grasp model checkpoint");
  if (peek_dataset_kind(c.dataset) != DatasetKind::Grasp) throw ConfigError("infer-force needs a grasp dataset");
  const GraspModel model = GraspModel::from_checkpoint(ck);
  const GraspDataset ds = load_grasp_dataset(c.dataset);

  std::vector<std::size_t> idx;
  if (!c.sample.empty()) {
    idx.push_back(find_sample(ds, c.sample));
  } else {
    for (std::size_t i = 0; i < ds.samples.size(); ++i) idx.push_back(i);
  }
  json results = json::array();
  for (std::size_t i : idx) {
    const GraspSample& s = ds.samples[i];
    const InferenceResult r = evaluate_candidates(model.embed(s), model.predictor(), c.candidates);
    json j = r.to_json();
    j["sample"] = s.id;
    if (s.planted) j["planted_safe_interval"] = {s.planted->safe_lo, s.planted->safe_hi};
    results.push_back(std::move(j));
  }
  const json report = c.sample.empty() ? json{{"results", results}} : results.front();
  if (!c.out_dir.empty()) write_text(c.out_dir / "infer_force.json", report.dump(2) + "\n");
  out << report.dump(2) << '\n';
  return kExitOk;
}

int cmd_attention_viz(const RunConfig& c, std::ostream& out) {
  require_dataset(c);
  require(!c.sample.empty(), "--sample is required");
  require(!c.out_dir.empty(), "--out-dir is required");
  const DatasetKind kind = peek_dataset_kind(c.dataset);
  std::optional<Checkpoint> ck;
  if (!c.checkpoint.empty()) ck = require_checkpoint(c.checkpoint, "--checkpoint");

  ImageSequence seq;
  std::string stream = c.stream;
  std::optional<Encoder> fresh;
  const Encoder* enc = nullptr;
  std::optional<GraspModel> gm;
  std::optional<SlipModel> sm;
  if (kind == DatasetKind::Grasp) {
    const GraspDataset ds = load_grasp_dataset(c.dataset);
    const GraspSample& s = ds.samples[find_sample(ds, c.sample)];
    if (stream.empty()) stream = "pinch_tactile";
    Action a;
    Modality m;
    if (stream == "pinch_tactile") a = Action::Pinch, m = Modality::Tactile;
    else if (stream == "pinch_visual") a = Action::Pinch, m = Modality::Visual;
    else if (stream == "slide_tactile") a = Action::Slide, m = Modality::Tactile;
    else if (stream == "slide_visual") a = Action::Slide, m = Modality::Visual;
    else throw ConfigError("--stream must be pinch_tactile|pinch_visual|slide_tactile|slide_visual for grasp data");
    seq = s.sequence(a, m);
    if (ck) {
      if (checkpoint_model_kind(*ck) != ModelKind::Grasp) throw ConfigError("checkpoint and dataset kinds differ");
      gm.emplace(GraspModel::from_checkpoint(*ck));
      enc = &gm->encoder(a, m);
    }
  } else {
    const SlipDataset ds = load_slip_dataset(c.dataset);
    const SlipSample& s = ds.samples[find_sample(ds, c.sample)];
    if (stream.empty()) stream = "tactile";
    if (stream != "visual" && stream != "tactile") throw ConfigError("--stream must be visual|tactile for slip data");
    seq = stream == "visual" ? s.visual : s.tactile;
    if (ck) {
      if (checkpoint_model_kind(*ck) != ModelKind::Slip) throw ConfigError("checkpoint and dataset kinds differ");
      sm.emplace(SlipModel::from_checkpoint(*ck));
      const auto& e = stream == "visual" ? sm->visual_encoder() : sm->tactile_encoder();
      if (!e) throw ConfigError("the checkpoint has no " + stream + " encoder");
      enc = &*e;
    }
  }
  if (enc && c.variant && enc->config().variant != *c.variant) {
    throw ConfigError("--variant " + std::string(to_string(*c.variant)) + " does not match the checkpoint");
  }
  if (!enc) {
    const bool tactile = stream.find("tactile") != std::string::npos;
    std::mt19937_64 rng(c.seed);
    fresh.emplace(encoder_for(c, seq, tactile ? c.tactile_patch_h : c.visual_patch_h, tactile ? c.tactile_patch_w : c.visual_patch_w,
                              c.variant.value_or(Variant::DividedSpaceTime)),
                  rng);
    enc = &*fresh;
  }
  const EncoderConfig& ec = enc->config();
  const ImageSequence input = prepare_sequence(seq, ec);
  AttentionRecorder rec;
  enc->encode(input, &rec);
  const RolloutMap map = rollout(rec);

  std::vector<std::size_t> patches = c.patches;
  if (patches.empty()) {
    for (std::size_t s = 0; s < map.spatial; ++s) patches.push_back(s);
  }
  const auto profile = temporal_profile(map, patches);
  double worst = 0.0;
  for (std::size_t r = 0; r < map.tokens; ++r) {
    double sum = 0.0;
    for (std::size_t k = 0; k < map.tokens; ++k) sum += map.at(r, k);
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  fs::create_directories(c.out_dir);
  std::vector<std::size_t> frames;
  if (c.frame) {
    require(*c.frame < ec.frames, "--frame is out of range");
    frames.push_back(*c.frame);
  } else {
    for (std::size_t t = 0; t < ec.frames; ++t) frames.push_back(t);
  }
  json files = json::array();
  for (std::size_t t : frames) {
    const Image8 src = frame_to_image(input, t);
    const auto w = spatial_weights(map, t);
    const auto hm = render_heatmap(w, ec.height / ec.patch_h, ec.width / ec.patch_w, ec.patch_h, ec.patch_w,
                                   c.out_dir / ("frame_" + std::to_string(t) + ".png"), &src);
    files.push_back({{"frame", t}, {"png", hm.png.filename().string()}, {"csv", hm.csv.filename().string()},
                     {"overlay", hm.overlay->filename().string()}});
  }
  json summary{{"sample", c.sample},      {"stream", stream},       {"variant", to_string(ec.variant)},
               {"records", rec.records().size()}, {"rollout_steps", map.steps}, {"max_row_sum_error", worst},
               {"selected_patches", patches},      {"temporal_profile", profile}, {"heatmaps", files}};
  write_text(c.out_dir / "profile.json", summary.dump(2) + "\n");
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_bench(const RunConfig& c, std::ostream& out) {
  require(c.bench.repeats > 0, "--repeats must be positive");
  std::vector<Variant> variants;
  if (c.variant) variants.push_back(*c.variant);
  else variants = {Variant::DividedSpaceTime, Variant::FactorisedDotProduct};
  json rows = json::array();
  out << "| model | tokens | parameters | mean ms | min ms |\n|-------|--------|------------|---------|--------|\n";
  for (Variant v : variants) {
    EncoderConfig e;
    e.variant = v;
    e.embed_dim = c.embed_dim;
    e.num_layers = c.num_layers;
    e.num_heads = c.num_heads;
    e.mlp_hidden = c.mlp_hidden;
    e.frames = c.bench.frames;
    e.height = c.bench.height;
    e.width = c.bench.width;
    e.channels = c.bench.channels;
    e.patch_h = c.bench.patch_h;
    e.patch_w = c.bench.patch_w;
    e.validate();
    std::mt19937_64 rng(c.seed);
    const Encoder enc(e, rng);
    const ImageSequence seq{Tensor::uniform({e.frames, e.height, e.width, e.channels}, 0.0f, 1.0f, rng), Modality::Tactile,
                            Action::Pinch};
    enc.encode(seq);  // warm-up
    double total = 0.0, best = 1e300;
    for (std::size_t i = 0; i < c.bench.repeats; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      const Tensor y = enc.encode(seq);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      if (!all_finite(y)) throw NumericError("benchmark forward produced non-finite output");
      total += ms;
      best = std::min(best, ms);
    }
    const double mean = total / static_cast<double>(c.bench.repeats);
    out << "| " << model_name(v) << " | " << e.token_count() << " | " << e.parameter_count() << " | " << fmt(mean, 3) << " | "
        << fmt(best, 3) << " |\n";
    rows.push_back({{"variant", to_string(v)}, {"config", e.to_json()}, {"mean_ms", mean}, {"min_ms", best},
                    {"repeats", c.bench.repeats}});
  }
  if (!c.out_dir.empty()) write_text(c.out_dir / "bench.json", json{{"results", rows}}.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------- argument parsing

namespace {

enum class Kind { Uint, Double, String, List };

struct Flag {
  const char* name;
  const char* pointer;
  Kind kind;
  const char* help;
};

const std::vector<Flag> kCommon = {
    {"--out-dir", "/out_dir", Kind::String, "Directory for all artifacts"},
    {"--seed", "/seed", Kind::Uint, "Seed for data generation, splits, initialisation and shuffling"},
};

const std::vector<Flag> kModel = {
    {"--variant", "/variant", Kind::String, "Encoder variant: divided|timesformer|factorised|vivit"},
    {"--embed-dim", "/encoder/embed_dim", Kind::Uint, "Token width D"},
    {"--layers", "/encoder/num_layers", Kind::Uint, "Transformer layers L"},
    {"--heads", "/encoder/num_heads", Kind::Uint, "Attention heads h"},
    {"--mlp-hidden", "/encoder/mlp_hidden", Kind::Uint, "MLP hidden width (0 = 4D)"},
    {"--tactile-patch-h", "/encoder/tactile_patch_h", Kind::Uint, "Tactile patch height"},
    {"--tactile-patch-w", "/encoder/tactile_patch_w", Kind::Uint, "Tactile patch width"},
    {"--visual-patch-h", "/encoder/visual_patch_h", Kind::Uint, "Visual patch height"},
    {"--visual-patch-w", "/encoder/visual_patch_w", Kind::Uint, "Visual patch width"},
};

const std::vector<Flag> kHeads = {
    {"--embedding-dim", "/heads/embedding_dim", Kind::Uint, "Physical embedding size d_e"},
    {"--head-hidden", "/heads/head_hidden", Kind::Uint, "Hidden width of the head MLPs"},
    {"--modality", "/modality", Kind::String, "Slip inputs: vision|tactile|vision+tactile"},
};

const std::vector<Flag> kSplits = {
    {"--splits", "/num_splits", Kind::Uint, "Number of random dataset splits"},
    {"--train-ratio", "/split_ratios/train", Kind::Double, "Training fraction"},
    {"--val-ratio", "/split_ratios/val", Kind::Double, "Validation fraction"},
    {"--test-ratio", "/split_ratios/test", Kind::Double, "Test fraction"},
};

const std::map<std::string, std::vector<Flag>> kCommandFlags = {
    {"gen-synthetic",
     {{"--kind", "/kind", Kind::String, "Dataset kind: grasp|slip"},
      {"--count", "/synthetic/count", Kind::Uint, "Number of samples"},
      {"--tactile-height", "/synthetic/tactile/height", Kind::Uint, "Tactile image height"},
      {"--tactile-width", "/synthetic/tactile/width", Kind::Uint, "Tactile image width"},
      {"--tactile-channels", "/synthetic/tactile/channels", Kind::Uint, "Tactile channels (1 or 3)"},
      {"--visual-height", "/synthetic/visual/height", Kind::Uint, "Visual image height"},
      {"--visual-width", "/synthetic/visual/width", Kind::Uint, "Visual image width"},
      {"--visual-channels", "/synthetic/visual/channels", Kind::Uint, "Visual channels (1 or 3)"},
      {"--raw-frames", "/synthetic/raw_frames", Kind::Uint, "Rendered grasp frames before subsampling"},
      {"--noise", "/synthetic/noise", Kind::Double, "Pixel noise standard deviation"},
      {"--cell-margin", "/synthetic/cell_margin", Kind::Double, "Margin kept clear inside each hardness/texture cell"},
      {"--slip-fraction", "/synthetic/slip_fraction", Kind::Double, "Fraction of slip samples (slip kind)"}}},
    {"convert-slip",
     {{"--input", "/input", Kind::String, "Folder of recordings: <sample>/{visual,tactile}/*.png + label.txt"},
      {"--window-start", "/window_start", Kind::Uint, "First frame of the 14-frame window"},
      {"--resize-height", "/resize/height", Kind::Uint, "Resize frames to this height"},
      {"--resize-width", "/resize/width", Kind::Uint, "Resize frames to this width"}}},
    {"train",
     {{"--dataset", "/dataset", Kind::String, "Dataset root"},
      {"--task", "/task", Kind::String, "slip|outcome|fruit"},
      {"--init-checkpoint", "/init_checkpoint", Kind::String, "Trained outcome model (fruit task)"},
      {"--threads", "/threads", Kind::Uint, "Evaluation threads"},
      {"--epochs", "/train/epochs", Kind::Uint, "Training epochs"},
      {"--lr", "/train/lr", Kind::Double, "Adam learning rate"},
      {"--batch-size", "/train/batch_size", Kind::Uint, "Minibatch size"},
      {"--beta1", "/train/beta1", Kind::Double, "Adam beta1"},
      {"--beta2", "/train/beta2", Kind::Double, "Adam beta2"},
      {"--eps", "/train/eps", Kind::Double, "Adam epsilon"},
      {"--clip-norm", "/train/clip_norm", Kind::Double, "Global gradient-norm clip"},
      {"--stop-at-train-accuracy", "/train/stop_at_train_accuracy", Kind::Double, "Stop once training accuracy reaches this"}}},
    {"eval",
     {{"--dataset", "/dataset", Kind::String, "Dataset root"},
      {"--checkpoint", "/checkpoint", Kind::String, "Model checkpoint"},
      {"--task", "/task", Kind::String, "slip|outcome|fruit"},
      {"--threads", "/threads", Kind::Uint, "Evaluation threads"},
      {"--split-index", "/split_index", Kind::Uint, "Score only the test part of this split"}}},
    {"infer-force",
     {{"--dataset", "/dataset", Kind::String, "Grasp dataset root"},
      {"--checkpoint", "/checkpoint", Kind::String, "Grasp model checkpoint"},
      {"--sample", "/sample", Kind::String, "Sample id (all samples when omitted)"},
      {"--cand-min", "/candidates/min", Kind::Double, "Smallest candidate threshold"},
      {"--cand-max", "/candidates/max", Kind::Double, "Largest candidate threshold"},
      {"--cand-step", "/candidates/step", Kind::Double, "Candidate spacing"},
      {"--cand-random-seed", "/candidates/random_seed", Kind::Uint, "Draw candidates uniformly at random with this seed"},
      {"--cand-random-count", "/candidates/random_count", Kind::Uint, "Number of random candidates"}}},
    {"attention-viz",
     {{"--dataset", "/dataset", Kind::String, "Dataset root"},
      {"--checkpoint", "/checkpoint", Kind::String, "Model checkpoint (untrained encoder when omitted)"},
      {"--sample", "/sample", Kind::String, "Sample id"},
      {"--stream", "/stream", Kind::String, "pinch_tactile|pinch_visual|slide_tactile|slide_visual, or visual|tactile"},
      {"--patches", "/patches", Kind::List, "Final-frame patch indices for the temporal profile, comma separated"},
      {"--frame", "/frame", Kind::Uint, "Render only this frame"}}},
    {"bench",
     {{"--frames", "/bench/frames", Kind::Uint, "Frames per sequence"},
      {"--height", "/bench/height", Kind::Uint, "Image height"},
      {"--width", "/bench/width", Kind::Uint, "Image width"},
      {"--channels", "/bench/channels", Kind::Uint, "Image channels"},
      {"--patch-h", "/bench/patch_h", Kind::Uint, "Patch height"},
      {"--patch-w", "/bench/patch_w", Kind::Uint, "Patch width"},
      {"--repeats", "/bench/repeats", Kind::Uint, "Timed forward passes"}}},
};

const std::map<std::string, std::string> kDescriptions = {
    {"gen-synthetic", "Generate a synthetic grasp or slip dataset with planted ground truth"},
    {"convert-slip", "Convert extracted slip recordings (PNG frames) into the dataset layout"},
    {"train", "Train on every split and report mean and variance of the held-out metrics"},
    {"eval", "Evaluate a checkpoint and print a results table"},
    {"infer-force", "Enumerate threshold candidates and select the mean of those predicted safe"},
    {"attention-viz", "Attention rollout heatmaps and temporal profile for one sample"},
    {"bench", "Time encoder forward passes"},
};

std::vector<Flag> flags_for(const std::string& cmd) {
  std::vector<Flag> f = kCommon;
  const auto& own = kCommandFlags.at(cmd);
  f.insert(f.end(), own.begin(), own.end());
  if (cmd == "train" || cmd == "attention-viz" || cmd == "bench") f.insert(f.end(), kModel.begin(), kModel.end());
  if (cmd == "train") f.insert(f.end(), kHeads.begin(), kHeads.end());
  if (cmd == "train" || cmd == "eval") f.insert(f.end(), kSplits.begin(), kSplits.end());
  return f;
}

json flag_value(const Flag& f, const std::string& text) {
  try {
    switch (f.kind) {
      case Kind::Uint: {
        if (text.empty() || text[0] == '-') throw std::invalid_argument("negative");
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing");
        return v;
      }
      case Kind::Double: {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing");
        return v;
      }
      case Kind::String: return text;
      case Kind::List: {
        json arr = json::array();
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
          std::size_t pos = 0;
          arr.push_back(std::stoull(item, &pos));
          if (pos != item.size()) throw std::invalid_argument("trailing");
        }
        return arr;
      }
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(std::string("invalid value '") + text + "' for " + f.name);
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
}

int dispatch(const RunConfig& c, std::ostream& out) {
  if (c.command == "gen-synthetic") return cmd_gen_synthetic(c, out);
  if (c.command == "convert-slip") return cmd_convert_slip(c, out);
  if (c.command == "train") return cmd_train(c, out);
  if (c.command == "eval") return cmd_eval(c, out);
  if (c.command == "infer-force") return cmd_infer_force(c, out);
  if (c.command == "attention-viz") return cmd_attention_viz(c, out);
  if (c.command == "bench") return cmd_bench(c, out);
  throw ConfigError("unknown command " + c.command);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatiotemporal transformers for visuo-tactile grasping: data, training, force inference, attention analysis"};
  app.name("stgrasp");
  app.require_subcommand(1);
  struct Bound {
    Flag flag;
    CLI::Option* opt;
    std::string value;
  };
  std::map<std::string, std::vector<std::unique_ptr<Bound>>> bound;
  std::map<std::string, std::string> config_paths;
  for (const auto& [cmd, _] : kCommandFlags) {
    CLI::App* sub = app.add_subcommand(cmd, kDescriptions.at(cmd));
    sub->add_option("--config", config_paths[cmd], "JSON config file; flags override its values");
    for (const Flag& f : flags_for(cmd)) {
      auto b = std::make_unique<Bound>();
      b->flag = f;
      b->opt = sub->add_option(f.name, b->value, f.help);
      bound[cmd].push_back(std::move(b));
    }
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    json j = config_paths[cmd].empty() ? json::object() : load_config_file(config_paths[cmd]);
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& b : bound[cmd]) {
      if (b->opt->count() > 0) j[json::json_pointer(b->flag.pointer)] = flag_value(b->flag, b->value);
    }
    const RunConfig cfg = RunConfig::from_json(cmd, j);
    return dispatch(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace stgrasp::cli
