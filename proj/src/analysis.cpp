#include "stgrasp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "stgrasp/error.hpp"

namespace stgrasp {

bool AxisSelection::includes(AttentionAxis a) const {
  switch (a) {
    case AttentionAxis::Temporal: return temporal;
    case AttentionAxis::Spatial: return spatial;
    case AttentionAxis::Fused: return fused;
  }
  return false;
}

namespace {

// Within a layer the temporal step precedes the spatial one.
struct StepKey {
  std::size_t layer;
  int order;
  bool operator<(const StepKey& o) const { return layer != o.layer ? layer < o.layer : order < o.order; }
};

using Matrix = std::vector<double>;

Matrix matmul_sq(const Matrix& a, const Matrix& b, std::size_t n) {
  Matrix c(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a[i * n + k];
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += aik * b[k * n + j];
    }
  return c;
}

}  // namespace

RolloutMap rollout(const std::vector<AttentionRecord>& records, std::size_t n, std::size_t frames, std::size_t spatial,
                   bool has_cls, const AxisSelection& axes) {
  if (n == 0) throw InputError("rollout: empty token set");
  if (frames * spatial + (has_cls ? 1 : 0) != n) throw InputError("rollout: token layout does not match token count");

  // step -> head -> records
  std::map<StepKey, std::map<std::size_t, std::vector<const AttentionRecord*>>> steps;
  for (const auto& r : records) {
    const std::size_t m = r.tokens.size();
    if (m == 0 || r.weights.size() != m * m) throw InputError("rollout: record weight matrix does not match its group size");
    for (std::size_t t : r.tokens)
      if (t >= n) throw InputError("rollout: record refers to token " + std::to_string(t) + " of " + std::to_string(n));
    if (!axes.includes(r.axis)) continue;
    int order = 0;
    if (r.axis == AttentionAxis::Spatial) order = 1;
    steps[{r.layer, order}][r.head].push_back(&r);
  }
  // Divided layers run every head on both axes. When a layer's temporal and
  // spatial records use disjoint head ids (factorised), they are one step.
  std::map<StepKey, std::map<std::size_t, std::vector<const AttentionRecord*>>> merged;
  for (auto& [key, heads] : steps) {
    StepKey k = key;
    auto other = steps.find({key.layer, 1 - key.order});
    bool disjoint = other != steps.end();
    if (disjoint) {
      for (const auto& [h, _] : heads) disjoint = disjoint && !other->second.count(h);
    }
    if (disjoint) k.order = 0;
    for (auto& [h, recs] : heads) {
      auto& dst = merged[k][h];
      dst.insert(dst.end(), recs.begin(), recs.end());
    }
  }
  RolloutMap out;
  out.tokens = n;
  out.frames = frames;
  out.spatial = spatial;
  out.has_cls = has_cls;
  out.matrix.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) out.matrix[i * n + i] = 1.0;

  for (const auto& [key, heads] : merged) {
    Matrix a(n * n, 0.0);
    for (const auto& [h, recs] : heads) {
      Matrix mh(n * n, 0.0);
      std::vector<std::size_t> count(n, 0);
      for (const AttentionRecord* r : recs) {
        const std::size_t m = r->tokens.size();
        for (std::size_t i = 0; i < m; ++i) {
          ++count[r->tokens[i]];
          for (std::size_t j = 0; j < m; ++j) mh[r->tokens[i] * n + r->tokens[j]] += r->weights[i * m + j];
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (count[i] <= 1) continue;
        for (std::size_t j = 0; j < n; ++j) mh[i * n + j] /= static_cast<double>(count[i]);
      }
      for (std::size_t i = 0; i < n * n; ++i) a[i] += mh[i];
    }
    const double inv_heads = 1.0 / static_cast<double>(heads.size());
    for (std::size_t i = 0; i < n; ++i) {
      double rs = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double& v = a[i * n + j];
        v = 0.5 * v * inv_heads + (i == j ? 0.5 : 0.0);
        rs += v;
      }
      for (std::size_t j = 0; j < n; ++j) a[i * n + j] /= rs;
    }
    out.matrix = matmul_sq(a, out.matrix, n);
    ++out.steps;
  }
  return out;
}

RolloutMap rollout(const AttentionRecorder& rec, const AxisSelection& axes) {
  return rollout(rec.records(), rec.token_count, rec.frames, rec.spatial, rec.has_cls, axes);
}

std::vector<double> temporal_profile(const RolloutMap& map, const std::vector<std::size_t>& selected) {
  if (selected.empty()) throw InputError("temporal_profile: empty patch selection");
  if (map.frames == 0) throw InputError("temporal_profile: map has no frames");
  std::vector<double> profile(map.frames, 0.0);
  for (std::size_t s : selected) {
    if (s >= map.spatial) throw InputError("temporal_profile: patch " + std::to_string(s) + " outside the final frame");
    const std::size_t r = map.row(map.frames - 1, s);
    for (std::size_t t = 0; t < map.frames; ++t)
      for (std::size_t k = 0; k < map.spatial; ++k) profile[t] += map.at(r, map.row(t, k));
  }
  double total = 0.0;
  for (double v : profile) total += v;
  if (!(total > 0.0)) throw InputError("temporal_profile: selected rows carry no mass on patch tokens");
  for (double& v : profile) v /= total;
  return profile;
}

std::vector<double> spatial_weights(const RolloutMap& map, std::size_t frame, std::optional<std::size_t> query) {
  if (frame >= map.frames) throw InputError("spatial_weights: frame out of range");
  if (query && *query >= map.tokens) throw InputError("spatial_weights: query row out of range");
  std::vector<double> w(map.spatial, 0.0);
  if (!query && !map.has_cls) {
    for (std::size_t r = 0; r < map.tokens; ++r)
      for (std::size_t s = 0; s < map.spatial; ++s) w[s] += map.at(r, map.row(frame, s));
    for (double& v : w) v /= static_cast<double>(map.tokens);
    return w;
  }
  const std::size_t r = query.value_or(0);
  for (std::size_t s = 0; s < map.spatial; ++s) w[s] = map.at(r, map.row(frame, s));
  return w;
}

HeatmapFiles render_heatmap(const std::vector<double>& weights, std::size_t rows, std::size_t cols, std::size_t ph,
                            std::size_t pw, const std::filesystem::path& png_path, const Image8* source) {
  if (weights.size() != rows * cols || rows == 0 || cols == 0) throw InputError("render_heatmap: weight count does not match the patch grid");
  if (ph == 0 || pw == 0) throw InputError("render_heatmap: patch size must be positive");
  for (double v : weights)
    if (!std::isfinite(v) || v < 0) throw InputError("render_heatmap: weights must be finite and non-negative");
  const std::size_t H = rows * ph, W = cols * pw;
  if (source && (source->height != H || source->width != W)) throw InputError("render_heatmap: source frame size does not match the patch grid");

  HeatmapFiles files;
  const double mx = *std::max_element(weights.begin(), weights.end());
  files.normalized.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) files.normalized[i] = mx > 0 ? weights[i] / mx : 0.0;

  if (png_path.has_parent_path()) std::filesystem::create_directories(png_path.parent_path());
  Image8 heat{H, W, 1, std::vector<std::uint8_t>(H * W)};
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      heat.pixels[y * W + x] = static_cast<std::uint8_t>(std::lround(255.0 * files.normalized[(y / ph) * cols + x / pw]));
  write_png(png_path, heat);
  files.png = png_path;

  files.csv = png_path;
  files.csv.replace_extension(".csv");
  std::ofstream csv(files.csv);
  if (!csv) throw DataError("cannot write " + files.csv.string());
  char buf[32];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", files.normalized[r * cols + c]);
      csv << (c ? "," : "") << buf;
    }
    csv << '\n';
  }
  if (!csv) throw DataError("failed writing " + files.csv.string());

  if (source) {
    Image8 ov{H, W, 3, std::vector<std::uint8_t>(H * W * 3)};
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        const double gain = 0.2 + 0.8 * files.normalized[(y / ph) * cols + x / pw];
        for (std::size_t c = 0; c < 3; ++c) {
          const double v = source->at(y, x, source->channels == 3 ? c : 0);
          ov.pixels[(y * W + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(v * gain));
        }
      }
    auto path = png_path;
    path.replace_filename(png_path.stem().string() + "_overlay.png");
    write_png(path, ov);
    files.overlay = path;
  }
  return files;
}

std::vector<double> read_heatmap_csv(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw DataError("cannot open " + csv.string());
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty()) out.push_back(std::stod(cell));
    }
  }
  return out;
}

Image8 frame_to_image(const ImageSequence& seq, std::size_t frame) {
  if (frame >= seq.num_frames()) throw InputError("frame_to_image: frame out of range");
  Image8 img{seq.height(), seq.width(), seq.channels(), {}};
  if (img.channels != 1 && img.channels != 3) throw InputError("frame_to_image: only 1 or 3 channels can be rendered");
  const std::size_t len = img.height * img.width * img.channels;
  const auto src = seq.frames.data().subspan(frame * len, len);
  img.pixels.resize(len);
  for (std::size_t i = 0; i < len; ++i)
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(static_cast<double>(src[i]), 0.0, 1.0)));
  return img;
}

}  // namespace stgrasp
