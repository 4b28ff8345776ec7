#include "paver/model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>
#include <thread>

#include "paver/errors.hpp"

namespace paver {

namespace {

// Frames whose patch scores agree to this relative tolerance carry no
// saliency; bilinear rounding alone produces differences near 1e-15.
constexpr double kFlatTolerance = 1e-9;

}  // namespace

int Model::patch() const {
  const std::size_t fan_in = embed.weight.cols();
  int s = 1;
  while (static_cast<std::size_t>(3 * s * s) < fan_in) ++s;
  if (static_cast<std::size_t>(3 * s * s) != fan_in) throw ConfigError("embedding width is not 3*S*S");
  return s;
}

nn::NamedParams Model::named_params() {
  nn::NamedParams out;
  collect_embed_params(embed, "embed", out);
  encoder.collect("encoder", out);
  fusion.collect("fusion", out);
  std::erase_if(out, [](const auto& p) { return p.second->empty(); });
  return out;
}

Model init_model(const ModelConfig& cfg, std::uint64_t seed) {
  nn::Rng rng(seed);
  Model m;
  m.embed = init_embed_params(cfg.patch, cfg.channels, rng, cfg.init_std);
  EncoderConfig ec;
  ec.channels = cfg.channels;
  ec.depth = cfg.encoder_depth;
  ec.n_heads = cfg.encoder_heads;
  ec.mlp_ratio = cfg.mlp_ratio;
  ec.pos_embedding = cfg.pos_embedding;
  ec.init_std = cfg.init_std;
  if (cfg.pos_embedding && cfg.num_patches == 0) throw ConfigError("positional table needs num_patches");
  m.encoder = init_encoder(ec, cfg.num_patches, rng);
  FusionConfig fc;
  fc.channels = cfg.channels;
  fc.hidden_ratio = cfg.mlp_ratio;
  fc.n_heads = cfg.fusion_heads;
  fc.pre_norm = cfg.fusion_pre_norm;
  fc.init_std = cfg.init_std;
  m.fusion = init_fusion(fc, rng);
  return m;
}

io::WeightContainer to_container(const Model& model) {
  Model copy = model;
  io::WeightContainer c;
  for (auto& [name, t] : copy.named_params()) c.add(name, *t);
  const int enc_heads = model.encoder.blocks.empty() ? 1 : model.encoder.blocks.front().attn.n_heads;
  c.add("meta.encoder_heads", nn::Tensor({1}, static_cast<double>(enc_heads)));
  c.add("meta.fusion_heads", nn::Tensor({1}, static_cast<double>(model.fusion.spatial.n_heads)));
  return c;
}

namespace {

int read_heads(const io::WeightContainer& c, const char* name) {
  const nn::TensorF& t = c.at(name);
  if (t.size() != 1 || !(t[0] >= 1.0f) || t[0] != std::floor(t[0])) {
    throw ConfigError(std::string("weights: ") + name + " must be a positive integer scalar");
  }
  return static_cast<int>(t[0]);
}

}  // namespace

Model from_container(const io::WeightContainer& container) {
  const nn::TensorF& ew = container.at("embed.weight");
  if (ew.rank() != 2) throw ConfigError("weights: embed.weight must be [C, 3*S*S]");

  ModelConfig cfg;
  cfg.channels = ew.dim(0);
  int s = 1;
  while (static_cast<std::size_t>(3 * s * s) < ew.dim(1)) ++s;
  if (static_cast<std::size_t>(3 * s * s) != ew.dim(1)) throw ConfigError("weights: embed.weight width is not 3*S*S");
  cfg.patch = s;
  cfg.encoder_heads = read_heads(container, "meta.encoder_heads");
  cfg.fusion_heads = read_heads(container, "meta.fusion_heads");
  cfg.encoder_depth = 0;
  while (container.contains("encoder.blocks." + std::to_string(cfg.encoder_depth) + ".norm1.weight")) {
    ++cfg.encoder_depth;
  }
  if (const auto* fc1 = container.find("fusion.global_mlp.fc1.weight")) {
    if (fc1->rank() != 2 || cfg.channels == 0 || fc1->dim(0) % cfg.channels != 0) {
      throw ConfigError("weights: fusion hidden width is not a multiple of C");
    }
    cfg.mlp_ratio = fc1->dim(0) / cfg.channels;
  }
  if (const auto* pos = container.find("encoder.pos_embedding")) {
    if (pos->rank() != 2 || pos->dim(0) < 2) throw ConfigError("weights: malformed encoder.pos_embedding");
    cfg.pos_embedding = true;
    cfg.num_patches = pos->dim(0) - 1;
  }
  cfg.fusion_pre_norm = container.contains("fusion.spatial_norm.weight");

  Model m = init_model(cfg, 0);
  std::set<std::string> expected;
  for (auto& [name, t] : m.named_params()) {
    const nn::TensorF& src = container.at(name);
    if (src.dims() != t->dims()) {
      throw ConfigError("weights: " + name + " has shape " + nn::dims_to_string(src.dims()) + ", expected " +
                        nn::dims_to_string(t->dims()));
    }
    *t = nn::tensor_cast<double>(src);
    expected.insert(name);
  }
  for (const auto& e : container.entries()) {
    if (e.name.rfind("meta.", 0) == 0) continue;
    if (!expected.contains(e.name)) throw ConfigError("weights: unexpected tensor \"" + e.name + "\"");
  }
  return m;
}

namespace {

// Source layout of a flattened positional grid: square, else twice as wide as high.
bool infer_grid(std::size_t n, int& h, int& w) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (side * side == n) {
    h = w = static_cast<int>(side);
    return true;
  }
  const auto half = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n) / 2.0)));
  if (2 * half * half == n) {
    h = static_cast<int>(half);
    w = static_cast<int>(2 * half);
    return true;
  }
  return false;
}

}  // namespace

void load_weights(Model& model, const io::WeightContainer& container, const geom::GridConfig* grid) {
  nn::NamedParams slots;
  collect_embed_params(model.embed, "embed", slots);
  model.encoder.collect("encoder", slots);
  model.fusion.collect("fusion", slots);
  for (const auto& entry : container.entries()) {
    if (entry.name.rfind("meta.", 0) == 0) continue;
    const auto it = std::find_if(slots.begin(), slots.end(), [&](const auto& s) { return s.first == entry.name; });
    if (it == slots.end()) throw ConfigError("weights: unexpected tensor \"" + entry.name + "\"");
    nn::Tensor value = nn::tensor_cast<double>(entry.tensor);
    nn::Tensor& slot = *it->second;
    if (entry.name == "encoder.pos_embedding") {
      if (value.rank() != 2 || value.cols() != model.channels() || value.rows() < 2) {
        throw ConfigError("weights: malformed encoder.pos_embedding " + nn::dims_to_string(value.dims()));
      }
      const std::size_t want = grid != nullptr ? static_cast<std::size_t>(grid->num_patches()) + 1
                               : slot.empty()   ? value.rows()
                                                : slot.rows();
      if (value.rows() != want) {
        int sh = 0, sw = 0;
        if (grid == nullptr || !infer_grid(value.rows() - 1, sh, sw)) {
          throw ConfigError("weights: positional table has " + std::to_string(value.rows()) + " rows, expected " +
                            std::to_string(want));
        }
        value = resample_pos_embedding(value, sh, sw, grid->patches_y(), grid->patches_x());
      }
      slot = std::move(value);
      continue;
    }
    if (value.dims() != slot.dims()) {
      throw ConfigError("weights: " + entry.name + " has shape " + nn::dims_to_string(value.dims()) +
                        ", expected " + nn::dims_to_string(slot.dims()));
    }
    slot = std::move(value);
  }
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ClipTokens encode_clip(const std::vector<Frame>& frames, const geom::OffsetTable& offsets, const Model& model,
                       int jobs) {
  const auto& cfg = offsets.config();
  if (model.patch() != cfg.patch) {
    throw ConfigError("model patch size " + std::to_string(model.patch()) + " does not match offsets (" +
                      std::to_string(cfg.patch) + ")");
  }
  ClipTokens tokens(frames.size());
  parallel_for(frames.size(), jobs, [&](std::size_t t) {
    const Frame& f = frames[t];
    if (f.width() != cfg.width || f.height() != cfg.height) {
      throw ConfigError("frame " + std::to_string(t) + " is " + std::to_string(f.width()) + "x" +
                        std::to_string(f.height()) + ", offsets expect " + std::to_string(cfg.width) + "x" +
                        std::to_string(cfg.height));
    }
    if (f.format != offsets.format()) throw ConfigError("frame format does not match the offset table");
    const nn::Tensor embedded = deform_embed(f, offsets, model.embed);
    nn::require_finite(embedded, "embed");
    tokens[t] = encode_frame(embedded, model.encoder);
    nn::require_finite(tokens[t], "encode");
  });
  return tokens;
}

nn::Tensor clip_scores(const ClipTokens& tokens, const FusionParams& fusion, std::size_t window,
                       const ScoreWeights& weights, int jobs) {
  if (tokens.empty()) throw ConfigError("clip has no frames");
  if (window == 0) throw ConfigError("window length must be positive");
  const std::size_t frames = tokens.size();
  const std::size_t patches = tokens.front().rows() - 1;
  const std::size_t len = std::min(window, frames);

  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + len <= frames; s += len) starts.push_back(s);
  if (starts.back() + len < frames) starts.push_back(frames - len);

  std::vector<nn::Tensor> window_scores(starts.size());
  parallel_for(starts.size(), jobs, [&](std::size_t w) {
    const std::vector<nn::Tensor> grids(tokens.begin() + static_cast<std::ptrdiff_t>(starts[w]),
                                        tokens.begin() + static_cast<std::ptrdiff_t>(starts[w] + len));
    nn::Tensor g, l;
    split_tokens(grids, g, l);
    const FusedFeatures fused = fuse(g, l, fusion);
    nn::require_finite(fused.global, "fusion");
    nn::require_finite(fused.local, "fusion");
    window_scores[w] = saliency_scores(fused, weights);
    nn::require_finite(window_scores[w], "score");
  });

  nn::Tensor scores({frames, patches});
  for (std::size_t w = 0; w < starts.size(); ++w) {
    // Earlier windows own their frames; the trailing window fills the rest.
    const std::size_t first = w == 0 ? 0 : std::max(starts[w], starts[w - 1] + len);
    for (std::size_t t = first; t < starts[w] + len; ++t) {
      const auto src = window_scores[w].row(t - starts[w]);
      std::copy(src.begin(), src.end(), scores.row(t).begin());
    }
  }
  return scores;
}

SaliencyRaster run_saliency(const std::vector<Frame>& frames, const geom::OffsetTable& offsets, const Model& model,
                            const PipelineOptions& options) {
  const auto& cfg = offsets.config();
  const ClipTokens tokens = encode_clip(frames, offsets, model, options.jobs);
  const nn::Tensor scores = clip_scores(tokens, model.fusion, options.window, options.weights, options.jobs);

  SaliencyRaster out;
  out.weights = options.weights;
  out.sigma = options.sigma > 0.0 ? options.sigma : default_sigma(cfg.width);
  const std::size_t t_count = scores.rows(), h = static_cast<std::size_t>(cfg.patches_y()),
                    w = static_cast<std::size_t>(cfg.patches_x());
  out.coarse = scores.reshaped({t_count, h, w});

  SmoothOptions smooth{out.sigma, options.smooth_mode, offsets.format()};
  const std::size_t plane = static_cast<std::size_t>(cfg.width) * static_cast<std::size_t>(cfg.height);
  out.dense = nn::Tensor({t_count, static_cast<std::size_t>(cfg.height), static_cast<std::size_t>(cfg.width)});
  parallel_for(t_count, options.jobs, [&](std::size_t t) {
    const auto row = scores.row(t);
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    if (*hi - *lo <= kFlatTolerance * std::max(1.0, std::abs(*hi))) return;  // no patch stands out
    const nn::Tensor one({1, row.size()}, std::vector<double>(row.begin(), row.end()));
    const nn::Tensor dense = normalize_map(smooth_to_map(one, cfg, smooth));
    nn::require_finite(dense, "smooth");
    std::copy(dense.values().begin(), dense.values().end(), out.dense.data() + t * plane);
  });
  return out;
}

TrainResult train_model(const std::vector<std::vector<Frame>>& clips, const geom::OffsetTable& offsets,
                        Model& model, const TrainConfig& config, int jobs) {
  std::vector<ClipTokens> tokens(clips.size());
  for (std::size_t c = 0; c < clips.size(); ++c) tokens[c] = encode_clip(clips[c], offsets, model, jobs);
  return train_fusion(tokens, model.fusion, offsets.config(), config);
}

}  // namespace paver
