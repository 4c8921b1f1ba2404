#include "stgrasp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "stgrasp/error.hpp"
#include "stgrasp/image_io.hpp"
#include "stgrasp/serialize.hpp"

namespace stgrasp {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- samples

const ImageSequence& GraspSample::sequence(Action a, Modality m) const {
  if (a == Action::Pinch) return m == Modality::Tactile ? pinch_tactile : pinch_visual;
  return m == Modality::Tactile ? slide_tactile : slide_visual;
}

void GraspSample::validate() const {
  for (Action a : {Action::Pinch, Action::Slide}) {
    for (Modality m : {Modality::Tactile, Modality::Visual}) {
      const ImageSequence& s = sequence(a, m);
      if (!s.frames.defined()) {
        throw DataError(std::string("missing ") + std::string(to_string(a)) + "/" + std::string(to_string(m)) + " sequence", id);
      }
      if (s.action != a || s.modality != m) throw DataError("sequence tagged with the wrong action or modality", id);
      s.validate(id);
    }
  }
  if (!std::isfinite(force_threshold) || force_threshold < 0.0) throw DataError("force threshold must be finite and >= 0", id);
}

void SlipSample::validate() const {
  for (const ImageSequence* s : {&visual, &tactile}) {
    if (!s->frames.defined()) throw DataError("missing slip sequence", id);
    s->validate(id);
    if (s->num_frames() != kSlipWindow) {
      throw DataError("slip sequences must hold exactly " + std::to_string(kSlipWindow) + " frames, got " +
                          std::to_string(s->num_frames()),
                      id);
    }
  }
}

// ---------------------------------------------------------------- subsampling

std::array<std::size_t, kSubsampledFrames> subsample_indices() {
  std::array<std::size_t, kSubsampledFrames> idx{};
  for (std::size_t i = 0; i < kSubsampledFrames; ++i) idx[i] = 3 * i;
  return idx;
}

ImageSequence subsample_frames(const ImageSequence& seq) {
  if (!seq.frames.defined() || seq.frames.rank() != 4) throw ShapeError("subsample_frames: expected a [N, H, W, C] sequence");
  if (seq.num_frames() < kMinFramesForSubsample) {
    throw InputError("subsample_frames: need at least " + std::to_string(kMinFramesForSubsample) + " frames, got " +
                     std::to_string(seq.num_frames()));
  }
  const std::size_t frame = seq.height() * seq.width() * seq.channels();
  std::vector<float> out;
  out.reserve(kSubsampledFrames * frame);
  const float* src = seq.frames.data().data();
  for (std::size_t i : subsample_indices()) out.insert(out.end(), src + i * frame, src + (i + 1) * frame);
  return {Tensor({kSubsampledFrames, seq.height(), seq.width(), seq.channels()}, std::move(out)), seq.modality, seq.action};
}

// ---------------------------------------------------------------- splits

std::vector<Split> make_splits(std::size_t n, const SplitRatios& r, std::size_t num_splits, std::uint64_t seed) {
  for (double v : {r.train, r.val, r.test}) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("split ratios must be finite and non-negative");
  }
  if (std::abs(r.train + r.val + r.test - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  if (num_splits == 0) throw ConfigError("num_splits must be positive");
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * r.train));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(static_cast<double>(n) * r.val)));

  std::vector<Split> splits;
  splits.reserve(num_splits);
  for (std::size_t k = 0; k < num_splits; ++k) {
    std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(sseq);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Split s;
    s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
    splits.push_back(std::move(s));
  }
  return splits;
}

// ---------------------------------------------------------------- planted labels

void SyntheticSpec::validate() const {
  if (count == 0) throw ConfigError("synthetic count must be positive");
  for (const ImageDims* d : {&tactile, &visual}) {
    if (d->height < 4 || d->width < 4) throw ConfigError("synthetic images must be at least 4x4");
    if (d->channels != 1 && d->channels != 3) throw ConfigError("synthetic images need 1 or 3 channels");
  }
  if (raw_frames < kMinFramesForSubsample) {
    throw ConfigError("raw_frames must be at least " + std::to_string(kMinFramesForSubsample));
  }
  if (!std::isfinite(noise) || noise < 0.0 || noise > 0.5) throw ConfigError("noise must lie in [0, 0.5]");
  if (!(cell_margin >= 0.0 && cell_margin < 0.5)) throw ConfigError("cell_margin must lie in [0, 0.5)");
  if (!(slip_fraction >= 0.0 && slip_fraction <= 1.0)) throw ConfigError("slip_fraction must lie in [0, 1]");
}

json SyntheticSpec::to_json() const {
  auto dims = [](const ImageDims& d) { return json{{"height", d.height}, {"width", d.width}, {"channels", d.channels}}; };
  return json{{"count", count},     {"tactile", dims(tactile)},   {"visual", dims(visual)},
              {"raw_frames", raw_frames}, {"noise", noise}, {"cell_margin", cell_margin},
              {"slip_fraction", slip_fraction}, {"seed", seed}};
}

namespace {

int hardness_level(double h) { return std::clamp(static_cast<int>(std::floor(3.0 * h)), 0, 2); }
int texture_level(double t) { return std::clamp(static_cast<int>(std::floor(2.0 * t)), 0, 1); }

// [hardness level][texture level]
constexpr FruitLabel kFruitCells[3][2] = {
    {FruitLabel::Plum, FruitLabel::Kiwifruit},
    {FruitLabel::Tomato, FruitLabel::Orange},
    {FruitLabel::Apple, FruitLabel::Lemon},
};

}  // namespace

FruitLabel fruit_cell(double hardness, double texture) {
  return kFruitCells[hardness_level(hardness)][texture_level(texture)];
}

// Harder objects need a deeper imprint before they stop slipping, and
// smooth surfaces need two more units than textured ones. Every cell has a
// safe band two units wide (three integer thresholds), so the six cells give
// six distinct intervals.
PlantedParams plant_params(double hardness, double texture) {
  PlantedParams p;
  p.hardness = hardness;
  p.texture = texture;
  p.safe_lo = 4 + 4 * hardness_level(hardness) + 2 * (1 - texture_level(texture));
  p.safe_hi = p.safe_lo + 2;
  return p;
}

GraspOutcome outcome_for_threshold(const PlantedParams& p, double threshold) {
  if (threshold < p.safe_lo) return GraspOutcome::Slippery;
  if (threshold > p.safe_hi) return GraspOutcome::PotentialDamage;
  return GraspOutcome::SafeGrasping;
}

std::vector<GraspPlan> plan_grasps(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> pick_fruit_h(0, 2), pick_fruit_t(0, 1), pick_thr(kMinThreshold, kMaxThreshold);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<GraspPlan> plans;
  plans.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    GraspPlan g;
    const int hl = pick_fruit_h(rng);
    const int tl = pick_fruit_t(rng);
    // keep a margin inside each cell so neighbouring cells stay separable
    const double hm = spec.cell_margin / 3.0, tm = spec.cell_margin / 2.0;
    const double h = hl / 3.0 + hm + unit(rng) * (1.0 / 3.0 - 2.0 * hm);
    const double t = tl / 2.0 + tm + unit(rng) * (1.0 / 2.0 - 2.0 * tm);
    g.planted = plant_params(h, t);
    g.fruit = fruit_cell(h, t);
    g.threshold = pick_thr(rng);
    g.outcome = outcome_for_threshold(g.planted, g.threshold);
    g.hue = unit(rng);
    g.render_seed = rng();
    plans.push_back(g);
  }
  return plans;
}

// ---------------------------------------------------------------- rendering

namespace {

struct Canvas {
  std::size_t frames, height, width, channels;
  std::vector<float> px;

  Canvas(std::size_t n, const ImageDims& d) : frames(n), height(d.height), width(d.width), channels(d.channels), px(n * d.height * d.width * d.channels, 0.0f) {}

  float& at(std::size_t t, std::size_t y, std::size_t x, std::size_t c) { return px[((t * height + y) * width + x) * channels + c]; }

  void finish(std::mt19937_64& rng, double noise) {
    std::normal_distribution<double> nd(0.0, 1.0);
    for (float& v : px) {
      double x = v;
      if (noise > 0.0) x += noise * nd(rng);
      v = static_cast<float>(std::clamp(x, 0.0, 1.0));
    }
  }

  ImageSequence sequence(Modality m, Action a) {
    return {Tensor({frames, height, width, channels}, std::move(px)), m, a};
  }
};

double smooth_inside(double d, double r) {
  // ~1 px soft edge so sub-pixel radius changes alter pixel values
  return std::clamp(r - d + 0.5, 0.0, 1.0);
}

std::array<double, 3> hue_color(double hue) {
  std::array<double, 3> c{};
  for (int k = 0; k < 3; ++k) c[k] = 0.55 + 0.35 * std::cos(2.0 * std::numbers::pi * (hue + k / 3.0));
  return c;
}

double stripe_freq(double texture) { return 2.0 + 4.0 * texture; }

struct GraspRender {
  const GraspPlan& plan;
  const SyntheticSpec& spec;
  std::mt19937_64 rng;
  double oy = 0, ox = 0;

  GraspRender(const GraspPlan& p, const SyntheticSpec& s) : plan(p), spec(s), rng(p.render_seed) {
    std::uniform_real_distribution<double> off(-0.02, 0.02);
    oy = off(rng);
    ox = off(rng);
  }

  double progress(std::size_t t) const { return static_cast<double>(t) / static_cast<double>(spec.raw_frames - 1); }

  ImageSequence tactile_pinch() {
    Canvas cv(spec.raw_frames, spec.tactile);
    const double h = plan.planted.hardness, f = stripe_freq(plan.planted.texture);
    const double H = cv.height, W = cv.width, m = std::min(H, W);
    const double cy = H * (0.5 + oy), cx = W * (0.5 + ox);
    const double R = 0.45 * m * (1.0 - 0.75 * h);  // soft objects spread wider
    for (std::size_t t = 0; t < cv.frames; ++t) {
      const double p = progress(t), r = R * p, depth = (0.3 + 0.6 * h) * p;  // hard objects indent deeper
      for (std::size_t y = 0; y < cv.height; ++y) {
        for (std::size_t x = 0; x < cv.width; ++x) {
          const double d = std::hypot(y + 0.5 - cy, x + 0.5 - cx);
          const double inside = smooth_inside(d, r);
          const double dome = r > 0 ? std::sqrt(std::max(0.0, 1.0 - (d / std::max(r, 1e-9)) * (d / std::max(r, 1e-9)))) : 0.0;
          const double tex = 0.65 + 0.35 * std::cos(2.0 * std::numbers::pi * f * (x + 0.5) / W);
          const double v = 0.1 + inside * (0.2 + depth * dome) * tex;
          for (std::size_t c = 0; c < cv.channels; ++c) cv.at(t, y, x, c) = static_cast<float>(v);
        }
      }
    }
    cv.finish(rng, spec.noise);
    return cv.sequence(Modality::Tactile, Action::Pinch);
  }

  ImageSequence tactile_slide() {
    Canvas cv(spec.raw_frames, spec.tactile);
    const double h = plan.planted.hardness, texture = plan.planted.texture, f = stripe_freq(texture);
    const double H = cv.height, W = cv.width, m = std::min(H, W);
    const double cy = H * (0.5 + oy), cx = W * (0.5 + ox);
    const double r = 0.42 * m * (1.0 - 0.45 * h);
    const double speed = 0.02 * W;
    for (std::size_t t = 0; t < cv.frames; ++t) {
      for (std::size_t y = 0; y < cv.height; ++y) {
        for (std::size_t x = 0; x < cv.width; ++x) {
          const double d = std::hypot(y + 0.5 - cy, x + 0.5 - cx);
          const double inside = smooth_inside(d, r);
          const double stripe = 0.5 + 0.4 * std::sin(2.0 * std::numbers::pi * f * (x + 0.5 - speed * t) / W);
          const double v = 0.1 + inside * (0.15 + (0.3 + 0.5 * texture) * stripe);  // rough surfaces print with more contrast
          for (std::size_t c = 0; c < cv.channels; ++c) cv.at(t, y, x, c) = static_cast<float>(v);
        }
      }
    }
    cv.finish(rng, spec.noise);
    return cv.sequence(Modality::Tactile, Action::Slide);
  }

  ImageSequence visual(Action action) {
    Canvas cv(spec.raw_frames, spec.visual);
    const double h = plan.planted.hardness, f = stripe_freq(plan.planted.texture);
    const double H = cv.height, W = cv.width, m = std::min(H, W);
    const double cy = H * (0.5 + oy), cx = W * (0.5 + ox);
    const double rv = 0.32 * m;
    const auto color = hue_color(plan.hue);
    const double gray = (color[0] + color[1] + color[2]) / 3.0;
    const double finger_w = std::max(1.0, 0.06 * W);
    for (std::size_t t = 0; t < cv.frames; ++t) {
      const double p = progress(t);
      const double squeeze = action == Action::Pinch ? (1.0 - h) * p : 0.0;
      const double ax = rv * (1.0 - 0.35 * squeeze), ay = rv * (1.0 + 0.15 * squeeze);
      const double shift = action == Action::Slide ? 0.03 * H * t : 0.0;
      for (std::size_t y = 0; y < cv.height; ++y) {
        for (std::size_t x = 0; x < cv.width; ++x) {
          const double dy = (y + 0.5 - cy) / ay, dx = (x + 0.5 - cx) / ax;
          const double rn = std::sqrt(dx * dx + dy * dy);
          const double inside = std::clamp((1.0 - rn) * rv + 0.5, 0.0, 1.0);
          const double shade = 0.7 + 0.3 * std::max(0.0, 1.0 - rn * rn);
          const double stripe = 0.8 + 0.2 * std::sin(2.0 * std::numbers::pi * f * (y + 0.5 + shift) / H);
          // fingers sit just outside the deformed silhouette
          const double fx = std::min(std::abs(x + 0.5 - (cx - ax - finger_w)), std::abs(x + 0.5 - (cx + ax + finger_w)));
          const bool finger = fx < finger_w / 2 && std::abs(y + 0.5 - cy) < 0.18 * H;
          for (std::size_t c = 0; c < cv.channels; ++c) {
            const double base = cv.channels == 3 ? color[c] : gray;
            double v = 0.05 + 0.05 * (y + 0.5) / H + inside * (base * shade * stripe - 0.05);
            if (finger) v = 0.95;
            cv.at(t, y, x, c) = static_cast<float>(v);
          }
        }
      }
    }
    cv.finish(rng, spec.noise);
    return cv.sequence(Modality::Visual, action);
  }
};

std::string sample_id(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%05zu", prefix, i);
  return buf;
}

}  // namespace

GraspSample render_grasp(const GraspPlan& plan, const SyntheticSpec& spec, std::string id) {
  GraspRender r(plan, spec);
  GraspSample s;
  s.id = std::move(id);
  s.pinch_tactile = subsample_frames(r.tactile_pinch());
  s.pinch_visual = subsample_frames(r.visual(Action::Pinch));
  s.slide_tactile = subsample_frames(r.tactile_slide());
  s.slide_visual = subsample_frames(r.visual(Action::Slide));
  s.force_threshold = plan.threshold;
  s.outcome = plan.outcome;
  s.fruit = plan.fruit;
  s.planted = plan.planted;
  return s;
}

GraspDataset generate_grasp_synthetic(const SyntheticSpec& spec) {
  GraspDataset ds;
  const auto plans = plan_grasps(spec);
  ds.samples.reserve(plans.size());
  for (std::size_t i = 0; i < plans.size(); ++i) ds.samples.push_back(render_grasp(plans[i], spec, sample_id('g', i)));
  return ds;
}

namespace {

struct Bump {
  double y, x, sigma, amp;
};

}  // namespace

SlipDataset generate_slip_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed ^ 0x5eed5119ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SlipDataset ds;
  ds.samples.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    SlipSample s;
    s.id = sample_id('s', i);
    const bool slip = unit(rng) < spec.slip_fraction;
    s.label = slip ? SlipLabel::Slip : SlipLabel::Stable;
    const int onset = 2 + static_cast<int>(unit(rng) * 5.0);  // 2..6
    const double speed = 0.8 + 0.8 * unit(rng);              // in units of H/32 per frame
    const double angle = std::numbers::pi / 2 + (unit(rng) - 0.5) * 0.8;  // mostly downward
    const double hue = unit(rng);
    std::mt19937_64 local(rng());

    auto displacement = [&](std::size_t t, double scale) {
      const double steps = slip ? std::max(0.0, static_cast<double>(t) - onset) : 0.0;
      const double d = steps * speed * scale;
      return std::pair<double, double>{d * std::sin(angle), d * std::cos(angle)};
    };

    {  // tactile: object texture translating inside a fixed contact patch with static markers
      Canvas cv(kSlipWindow, spec.tactile);
      const double H = cv.height, W = cv.width, m = std::min(H, W);
      const double cy = H * 0.5, cx = W * 0.5, r = 0.42 * m;
      std::vector<Bump> bumps(12);
      for (auto& b : bumps) b = {unit(local) * 2.0 * H - 0.5 * H, unit(local) * W, 0.06 * m + 0.08 * m * unit(local), 0.3 + 0.4 * unit(local)};
      const double spacing = std::max(4.0, W / 6.0);
      for (std::size_t t = 0; t < cv.frames; ++t) {
        const auto [dy, dx] = displacement(t, H / 32.0);
        for (std::size_t y = 0; y < cv.height; ++y) {
          for (std::size_t x = 0; x < cv.width; ++x) {
            const double py = y + 0.5, pxx = x + 0.5;
            const double inside = smooth_inside(std::hypot(py - cy, pxx - cx), r);
            double tex = 0.0;
            for (const auto& b : bumps) {
              const double ey = py - dy - b.y, ex = pxx - dx - b.x;
              tex += b.amp * std::exp(-(ey * ey + ex * ex) / (2 * b.sigma * b.sigma));
            }
            const double my = std::fmod(py, spacing) - spacing / 2, mx = std::fmod(pxx, spacing) - spacing / 2;
            const double marker = std::exp(-(my * my + mx * mx) / 1.6);
            const double v = 0.1 + inside * (0.25 + 0.55 * std::min(1.0, tex)) * (1.0 - 0.6 * marker);
            for (std::size_t c = 0; c < cv.channels; ++c) cv.at(t, y, x, c) = static_cast<float>(v);
          }
        }
      }
      cv.finish(local, spec.noise);
      s.tactile = cv.sequence(Modality::Tactile, Action::Pinch);
    }
    {  // visual: object held between static fingers, sliding downward when slipping
      Canvas cv(kSlipWindow, spec.visual);
      const double H = cv.height, W = cv.width, m = std::min(H, W);
      const double cy = H * 0.4, cx = W * 0.5, rv = 0.25 * m;
      const auto color = hue_color(hue);
      const double gray = (color[0] + color[1] + color[2]) / 3.0;
      const double finger_w = std::max(1.0, 0.08 * W);
      for (std::size_t t = 0; t < cv.frames; ++t) {
        const auto [dy, dx] = displacement(t, H / 32.0);
        for (std::size_t y = 0; y < cv.height; ++y) {
          for (std::size_t x = 0; x < cv.width; ++x) {
            const double py = y + 0.5, pxx = x + 0.5;
            const double d = std::hypot(py - cy - dy, pxx - cx - dx);
            const double inside = smooth_inside(d, rv);
            const double fx = std::min(std::abs(pxx - (cx - rv - finger_w / 2)), std::abs(pxx - (cx + rv + finger_w / 2)));
            const bool finger = fx < finger_w / 2 && std::abs(py - cy) < 0.15 * H;
            for (std::size_t c = 0; c < cv.channels; ++c) {
              const double base = cv.channels == 3 ? color[c] : gray;
              double v = 0.08 + inside * (base * (0.75 + 0.25 * (1.0 - d / rv)) - 0.08);
              if (finger) v = 0.95;
              cv.at(t, y, x, c) = static_cast<float>(v);
            }
          }
        }
      }
      cv.finish(local, spec.noise);
      s.visual = cv.sequence(Modality::Visual, Action::Pinch);
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// ---------------------------------------------------------------- on-disk layout

namespace {

constexpr const char* kManifestFormat = "stgrasp-dataset";
constexpr int kManifestVersion = 1;

json tensor_entry(const std::string& file, const Tensor& t) { return json{{"file", file}, {"shape", t.shape()}}; }

void write_stream(const fs::path& dir, const std::string& name, const ImageSequence& seq, json& tensors) {
  const std::string file = name + ".tsr";
  save_tensor(dir / file, seq.frames);
  tensors[name] = tensor_entry(file, seq.frames);
}

void write_manifest(const fs::path& root, const json& manifest) {
  std::ofstream out(root / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + (root / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

void prepare_root(const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw DataError("cannot create dataset directory " + root.string() + ": " + ec.message());
}

json read_manifest(const fs::path& root) {
  const fs::path path = root / "manifest.json";
  if (!fs::exists(path)) throw DataError("missing manifest: " + path.string());
  std::ifstream in(path, std::ios::binary);
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + path.string() + ": " + e.what());
  }
  if (!m.is_object() || m.value("format", "") != kManifestFormat) throw DataError("malformed manifest: bad format tag in " + path.string());
  if (m.value("version", 0) != kManifestVersion) throw DataError("unsupported manifest version in " + path.string());
  if (!m.contains("samples") || !m["samples"].is_array() || !m.contains("num_samples")) {
    throw DataError("malformed manifest: missing samples or num_samples in " + path.string());
  }
  return m;
}

// Cross-checks num_samples against the listed and present sample directories.
void check_counts(const fs::path& root, const json& m) {
  const auto& samples = m["samples"];
  const auto declared = m["num_samples"].get<std::size_t>();
  for (const auto& s : samples) {
    const std::string id = s.value("id", "");
    if (id.empty()) throw DataError("malformed manifest: sample without id");
    if (!fs::is_directory(root / s.value("dir", id))) throw DataError("sample directory missing", id);
  }
  if (declared != samples.size()) {
    const std::string culprit = samples.empty() ? std::string() : samples.back().value("id", "");
    throw DataError("manifest declares " + std::to_string(declared) + " samples but lists " + std::to_string(samples.size()) +
                        (culprit.empty() ? std::string() : " (last listed sample '" + culprit + "')"),
                    culprit);
  }
}

Tensor read_stream(const fs::path& dir, const json& tensors, const std::string& name, const std::string& id) {
  if (!tensors.contains(name)) throw DataError("manifest lists no '" + name + "' tensor", id);
  const json& e = tensors[name];
  const fs::path file = dir / e.value("file", name + ".tsr");
  if (!fs::exists(file)) throw DataError("missing tensor file " + file.string(), id);
  Tensor t;
  try {
    t = load_tensor(file);
  } catch (const DataError& err) {
    throw DataError(err.what(), id);
  }
  const auto shape = e.at("shape").get<Shape>();
  if (t.shape() != shape) {
    throw DataError("tensor '" + name + "' has shape " + shape_str(t.shape()) + " but manifest says " + shape_str(shape), id);
  }
  return t;
}

}  // namespace

DatasetKind peek_dataset_kind(const fs::path& root) {
  const json m = read_manifest(root);
  const std::string kind = m.value("kind", "");
  if (kind == "grasp") return DatasetKind::Grasp;
  if (kind == "slip") return DatasetKind::Slip;
  throw DataError("manifest has unknown dataset kind '" + kind + "'");
}

void save_dataset(const GraspDataset& ds, const fs::path& root) {
  prepare_root(root);
  json samples = json::array();
  for (const auto& s : ds.samples) {
    s.validate();
    const fs::path dir = root / s.id;
    fs::create_directories(dir);
    json tensors = json::object();
    write_stream(dir, "pinch_tactile", s.pinch_tactile, tensors);
    write_stream(dir, "pinch_visual", s.pinch_visual, tensors);
    write_stream(dir, "slide_tactile", s.slide_tactile, tensors);
    write_stream(dir, "slide_visual", s.slide_visual, tensors);
    json e{{"id", s.id}, {"dir", s.id}, {"force_threshold", s.force_threshold}, {"outcome", to_string(s.outcome)},
           {"fruit", to_string(s.fruit)}, {"tensors", tensors}};
    if (s.planted) {
      e["planted"] = json{{"hardness", s.planted->hardness}, {"texture", s.planted->texture},
                          {"safe_lo", s.planted->safe_lo}, {"safe_hi", s.planted->safe_hi}};
    }
    samples.push_back(std::move(e));
  }
  write_manifest(root, json{{"format", kManifestFormat}, {"version", kManifestVersion}, {"kind", "grasp"},
                            {"num_samples", ds.samples.size()}, {"samples", samples}});
}

void save_dataset(const SlipDataset& ds, const fs::path& root) {
  prepare_root(root);
  json samples = json::array();
  for (const auto& s : ds.samples) {
    s.validate();
    const fs::path dir = root / s.id;
    fs::create_directories(dir);
    json tensors = json::object();
    write_stream(dir, "visual", s.visual, tensors);
    write_stream(dir, "tactile", s.tactile, tensors);
    samples.push_back(json{{"id", s.id}, {"dir", s.id}, {"label", to_string(s.label)}, {"tensors", tensors}});
  }
  write_manifest(root, json{{"format", kManifestFormat}, {"version", kManifestVersion}, {"kind", "slip"},
                            {"num_samples", ds.samples.size()}, {"samples", samples}});
}

GraspDataset load_grasp_dataset(const fs::path& root) {
  const json m = read_manifest(root);
  if (m.value("kind", "") != "grasp") throw DataError("dataset at " + root.string() + " is not a grasp dataset");
  check_counts(root, m);
  GraspDataset ds;
  for (const auto& e : m["samples"]) {
    GraspSample s;
    s.id = e.at("id").get<std::string>();
    try {
      const fs::path dir = root / e.value("dir", s.id);
      const json& tensors = e.at("tensors");
      s.pinch_tactile = {read_stream(dir, tensors, "pinch_tactile", s.id), Modality::Tactile, Action::Pinch};
      s.pinch_visual = {read_stream(dir, tensors, "pinch_visual", s.id), Modality::Visual, Action::Pinch};
      s.slide_tactile = {read_stream(dir, tensors, "slide_tactile", s.id), Modality::Tactile, Action::Slide};
      s.slide_visual = {read_stream(dir, tensors, "slide_visual", s.id), Modality::Visual, Action::Slide};
      s.force_threshold = e.at("force_threshold").get<double>();
      s.outcome = parse_outcome(e.at("outcome").get<std::string>());
      s.fruit = parse_fruit(e.at("fruit").get<std::string>());
      if (e.contains("planted")) {
        const json& p = e["planted"];
        s.planted = PlantedParams{p.at("hardness").get<double>(), p.at("texture").get<double>(), p.at("safe_lo").get<int>(),
                                  p.at("safe_hi").get<int>()};
      }
    } catch (const json::exception& err) {
      throw DataError(std::string("malformed manifest entry: ") + err.what(), s.id);
    } catch (const ConfigError& err) {
      throw DataError(err.what(), s.id);
    }
    s.validate();
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

SlipDataset load_slip_dataset(const fs::path& root) {
  const json m = read_manifest(root);
  if (m.value("kind", "") != "slip") throw DataError("dataset at " + root.string() + " is not a slip dataset");
  check_counts(root, m);
  SlipDataset ds;
  for (const auto& e : m["samples"]) {
    SlipSample s;
    s.id = e.at("id").get<std::string>();
    try {
      const fs::path dir = root / e.value("dir", s.id);
      const json& tensors = e.at("tensors");
      s.visual = {read_stream(dir, tensors, "visual", s.id), Modality::Visual, Action::Pinch};
      s.tactile = {read_stream(dir, tensors, "tactile", s.id), Modality::Tactile, Action::Pinch};
      s.label = parse_slip_label(e.at("label").get<std::string>());
    } catch (const json::exception& err) {
      throw DataError(std::string("malformed manifest entry: ") + err.what(), s.id);
    } catch (const ConfigError& err) {
      throw DataError(err.what(), s.id);
    }
    s.validate();
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// ---------------------------------------------------------------- slip converter

namespace {

std::vector<fs::path> sorted_pngs(const fs::path& dir, const std::string& id) {
  if (!fs::is_directory(dir)) throw DataError("missing frame directory " + dir.string(), id);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Area-averaged resampling; identity when the size already matches.
std::vector<float> resample(const Image8& img, std::size_t oh, std::size_t ow) {
  std::vector<float> out(oh * ow * img.channels, 0.0f);
  for (std::size_t y = 0; y < oh; ++y) {
    const std::size_t y0 = y * img.height / oh, y1 = std::max(y0 + 1, (y + 1) * img.height / oh);
    for (std::size_t x = 0; x < ow; ++x) {
      const std::size_t x0 = x * img.width / ow, x1 = std::max(x0 + 1, (x + 1) * img.width / ow);
      for (std::size_t c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (std::size_t yy = y0; yy < y1; ++yy)
          for (std::size_t xx = x0; xx < x1; ++xx) acc += img.at(yy, xx, c);
        out[(y * ow + x) * img.channels + c] = static_cast<float>(acc / (255.0 * static_cast<double>((y1 - y0) * (x1 - x0))));
      }
    }
  }
  return out;
}

ImageSequence read_window(const fs::path& dir, Modality m, const SlipConvertOptions& opt, const std::string& id) {
  const auto files = sorted_pngs(dir, id);
  if (files.size() < opt.window_start + kSlipWindow) {
    throw DataError(dir.string() + " holds " + std::to_string(files.size()) + " frames; need " +
                        std::to_string(opt.window_start + kSlipWindow) + " for the requested window",
                    id);
  }
  std::vector<float> data;
  std::size_t h = 0, w = 0, c = 0;
  for (std::size_t i = 0; i < kSlipWindow; ++i) {
    const Image8 img = read_png(files[opt.window_start + i]);
    const std::size_t oh = opt.resize ? opt.resize->height : img.height;
    const std::size_t ow = opt.resize ? opt.resize->width : img.width;
    if (i == 0) {
      h = oh, w = ow, c = img.channels;
    } else if (oh != h || ow != w || img.channels != c) {
      throw DataError("frame " + files[opt.window_start + i].string() + " differs in size from the first frame", id);
    }
    const auto px = resample(img, oh, ow);
    data.insert(data.end(), px.begin(), px.end());
  }
  return {Tensor({kSlipWindow, h, w, c}, std::move(data)), m, Action::Pinch};
}

SlipLabel read_label(const fs::path& file, const std::string& id) {
  std::ifstream in(file);
  if (!in) throw DataError("missing label file " + file.string(), id);
  std::string word;
  in >> word;
  if (word == "1" || word == "slip") return SlipLabel::Slip;
  if (word == "0" || word == "stable") return SlipLabel::Stable;
  throw DataError("unrecognised label '" + word + "' in " + file.string(), id);
}

}  // namespace

SlipDataset convert_slip_recordings(const fs::path& input, const SlipConvertOptions& options) {
  if (!fs::is_directory(input)) throw DataError("input directory not found: " + input.string());
  if (options.resize && (options.resize->height == 0 || options.resize->width == 0)) throw ConfigError("resize dims must be positive");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(input)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  SlipDataset ds;
  for (const auto& d : dirs) {
    SlipSample s;
    s.id = d.filename().string();
    s.visual = read_window(d / "visual", Modality::Visual, options, s.id);
    s.tactile = read_window(d / "tactile", Modality::Tactile, options, s.id);
    s.label = read_label(d / "label.txt", s.id);
    s.validate();
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw DataError("no sample directories under " + input.string());
  return ds;
}

}  // namespace stgrasp
