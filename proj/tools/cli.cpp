#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "paver/errors.hpp"
#include "paver/geometry.hpp"
#include "paver/io.hpp"
#include "paver/metrics.hpp"
#include "paver/model.hpp"
#include "paver/synthetic.hpp"

namespace paver::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Clip {
  std::string name;
  fs::path path;
};

// A frame directory or clip tensor is one clip; otherwise every
// subdirectory is a clip. Sorted by name.
std::vector<Clip> discover_clips(const fs::path& root) {
  if (fs::is_regular_file(root)) return {{root.stem().string(), root}};
  if (!fs::is_directory(root)) throw ConfigError("no such file or directory: " + root.string());
  std::vector<Clip> clips;
  bool has_frames = false;
  for (const auto& e : fs::directory_iterator(root)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("frame_", 0) == 0) has_frames = true;
    if (e.is_directory()) clips.push_back({name, e.path()});
  }
  if (has_frames) return {{fs::absolute(root).lexically_normal().filename().string(), root}};
  std::sort(clips.begin(), clips.end(), [](const Clip& a, const Clip& b) { return a.name < b.name; });
  if (clips.empty()) throw ConfigError(root.string() + " holds no frames and no clip directories");
  return clips;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit(std::ostream& out, const json& record) { out << record.dump() << '\n'; }

// Report sink: stdout unless --out was given.
class Report {
 public:
  Report(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw ConfigError("cannot write " + path);
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

// Loads saliency or heatmap rasters as [T, H, W].
nn::Tensor read_maps(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pgm") {
    const nn::Tensor plane = io::read_pgm(path);
    return plane.reshaped({1, plane.dim(0), plane.dim(1)});
  }
  if (ext == ".pten") {
    const nn::Tensor t = nn::tensor_cast<double>(io::read_tensor(path));
    if (t.rank() == 2) return t.reshaped({1, t.dim(0), t.dim(1)});
    if (t.rank() != 3) throw FormatError(path.string() + ": expected a [T, H, W] or [H, W] tensor");
    return t;
  }
  return io::read_saliency(path);
}

nn::Tensor frame_plane(const nn::Tensor& maps, std::size_t t) {
  const std::size_t h = maps.dim(1), w = maps.dim(2);
  const auto src = maps.row(t);
  return nn::Tensor({h, w}, std::vector<double>(src.begin(), src.end()));
}

std::vector<nn::Tensor> split_planes(const nn::Tensor& maps) {
  std::vector<nn::Tensor> planes;
  for (std::size_t t = 0; t < maps.dim(0); ++t) planes.push_back(frame_plane(maps, t));
  return planes;
}

// ---------------------------------------------------------------- offsets

struct OffsetsArgs {
  int width = 0, height = 0, patch = 16;
  std::string format = "erp";
  std::string out;
};

int cmd_offsets(const OffsetsArgs& a, std::ostream& out) {
  const geom::GridConfig cfg{a.width, a.height, a.patch};
  const geom::OffsetTable table = geom::compute_offset_table(cfg, geom::parse_format(a.format));
  io::write_offsets(a.out, table);
  out << "N=" << cfg.num_patches() << " w=" << cfg.patches_x() << " h=" << cfg.patches_y() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- init

struct ModelArgs {
  int patch = 16;
  std::size_t channels = 64;
  std::size_t depth = 2;
  int encoder_heads = 4;
  int fusion_heads = 8;
  bool pos_embedding = false;
  std::size_t num_patches = 0;
  double init_std = 0.02;

  ModelConfig config() const {
    ModelConfig c;
    c.patch = patch;
    c.channels = channels;
    c.encoder_depth = depth;
    c.encoder_heads = encoder_heads;
    c.fusion_heads = fusion_heads;
    c.pos_embedding = pos_embedding;
    c.num_patches = num_patches;
    c.init_std = init_std;
    return c;
  }
};

void add_model_options(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--patch", m.patch, "Patch side S")->capture_default_str();
  cmd->add_option("--channels", m.channels, "Token width C")->capture_default_str();
  cmd->add_option("--depth", m.depth, "Encoder blocks")->capture_default_str();
  cmd->add_option("--encoder-heads", m.encoder_heads)->capture_default_str();
  cmd->add_option("--fusion-heads", m.fusion_heads)->capture_default_str();
  cmd->add_flag("--pos-embedding", m.pos_embedding, "Learnable positional table (needs --num-patches)");
  cmd->add_option("--num-patches", m.num_patches);
  cmd->add_option("--init-std", m.init_std)->capture_default_str();
}

struct InitArgs {
  ModelArgs model;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_init(const InitArgs& a, std::ostream& out) {
  const Model m = init_model(a.model.config(), a.seed);
  const io::WeightContainer c = to_container(m);
  io::write_weights(a.out, c);
  out << "tensors=" << c.size() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out;
  int width = 64, height = 32;
  std::size_t frames = 10;
  std::size_t clips = 1;
  std::string format = "erp";
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const geom::Format format = geom::parse_format(a.format);
  fs::create_directories(a.out);
  for (std::size_t c = 0; c < a.clips; ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "clip_%03zu", c);
    const fs::path dir = fs::path(a.out) / name;
    fs::create_directories(dir);
    const auto frames = synth::moving_square_clip(format, a.width, a.height, a.frames, a.seed + c);
    for (std::size_t t = 0; t < frames.size(); ++t) io::write_ppm(dir / io::frame_file_name(t), frames[t]);
    out << name << " frames=" << frames.size() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- saliency

struct SaliencyArgs {
  std::string frames, weights, offsets, out;
  double sigma = 0.0;
  std::size_t window = 5;
  double alpha = 1.0, beta = 1.0, gamma = 1.0;
  bool exact = false;
  bool no_preview = false;
  int jobs = 1;
};

int cmd_saliency(const SaliencyArgs& a, std::ostream& out) {
  const geom::OffsetTable offsets = io::read_offsets(a.offsets);
  const Model model = from_container(io::read_weights(a.weights));
  PipelineOptions opts;
  opts.window = a.window;
  opts.weights = {a.alpha, a.beta, a.gamma};
  opts.sigma = a.sigma;
  opts.smooth_mode = a.exact ? SmoothMode::exact : SmoothMode::truncated;
  opts.jobs = a.jobs;
  if (a.sigma < 0.0) throw ConfigError("--sigma must be positive");

  const auto clips = discover_clips(a.frames);
  fs::create_directories(a.out);
  // Clips run one after another; --jobs parallelises frames and windows inside
  // each clip, so output order never depends on scheduling.
  for (const Clip& clip : clips) {
    const auto frames = io::read_clip(clip.path, offsets.format());
    const SaliencyRaster r = run_saliency(frames, offsets, model, opts);
    const fs::path base = fs::path(a.out) / clip.name;
    io::write_saliency(base.string() + ".psal", r.dense);
    if (!a.no_preview) {
      for (std::size_t t = 0; t < r.dense.dim(0); ++t) {
        char suffix[32];
        std::snprintf(suffix, sizeof suffix, "_%05zu.pgm", t);
        io::write_pgm(base.string() + suffix, frame_plane(r.dense, t));
      }
    }
    out << clip.name << " frames=" << frames.size() << " sigma=" << format_double(r.sigma) << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string frames_dir, config, out_weights, init_weights, trace, offsets;
  std::string format = "erp";
  ModelArgs model;
  std::optional<double> lr, lambda_t, lambda_s, lambda_g, epsilon, sigma;
  std::optional<std::size_t> epochs, window, max_steps;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

TrainConfig resolve_train_config(const TrainArgs& a) {
  TrainConfig c;
  if (!a.config.empty()) {
    const io::KeyValueConfig kv = io::KeyValueConfig::load(a.config);
    kv.require_known({"lr", "epochs", "T", "lambda_t", "lambda_s", "lambda_g", "epsilon", "sigma", "seed", "max_steps"});
    auto non_negative = [&](const char* key) -> std::optional<std::size_t> {
      const auto v = kv.get_int(key);
      if (!v) return std::nullopt;
      if (*v < 0) throw ConfigError(std::string("config key ") + key + " must be >= 0");
      return static_cast<std::size_t>(*v);
    };
    c.lr = kv.get_double("lr").value_or(c.lr);
    c.epochs = non_negative("epochs").value_or(c.epochs);
    c.frames = non_negative("T").value_or(c.frames);
    c.weights.temporal = kv.get_double("lambda_t").value_or(c.weights.temporal);
    c.weights.spatial = kv.get_double("lambda_s").value_or(c.weights.spatial);
    c.weights.global = kv.get_double("lambda_g").value_or(c.weights.global);
    c.weights.epsilon = kv.get_double("epsilon").value_or(c.weights.epsilon);
    c.sigma = kv.get_double("sigma").value_or(c.sigma);
    c.seed = non_negative("seed").value_or(c.seed);
    c.max_steps = non_negative("max_steps").value_or(c.max_steps);
  }
  if (a.lr) c.lr = *a.lr;
  if (a.epochs) c.epochs = *a.epochs;
  if (a.window) c.frames = *a.window;
  if (a.lambda_t) c.weights.temporal = *a.lambda_t;
  if (a.lambda_s) c.weights.spatial = *a.lambda_s;
  if (a.lambda_g) c.weights.global = *a.lambda_g;
  if (a.epsilon) c.weights.epsilon = *a.epsilon;
  if (a.sigma) c.sigma = *a.sigma;
  if (a.seed) c.seed = *a.seed;
  if (a.max_steps) c.max_steps = *a.max_steps;
  if (!std::isfinite(c.lr) || c.lr < 0.0) throw ConfigError("lr must be finite and >= 0");
  c.weights.validate();
  return c;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const TrainConfig config = resolve_train_config(a);
  Model model = a.init_weights.empty() ? init_model(a.model.config(), config.seed)
                                       : from_container(io::read_weights(a.init_weights));

  std::vector<std::vector<Frame>> clips;
  const geom::Format format =
      a.offsets.empty() ? geom::parse_format(a.format) : io::read_offsets(a.offsets).format();
  for (const Clip& clip : discover_clips(a.frames_dir)) clips.push_back(io::read_clip(clip.path, format));
  const Frame& first = clips.front().front();
  const geom::OffsetTable offsets =
      a.offsets.empty() ? geom::compute_offset_table({first.width(), first.height(), model.patch()}, format)
                        : io::read_offsets(a.offsets);

  const TrainResult result = train_model(clips, offsets, model, config, a.jobs);
  io::write_weights(a.out_weights, to_container(model));

  const std::string trace_path = a.trace.empty() ? a.out_weights + ".trace.csv" : a.trace;
  std::string csv = "step,loss\n";
  for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
    csv += std::to_string(i + 1) + "," + format_double(result.loss_trace[i]) + "\n";
  }
  io::write_file(trace_path, csv);
  out << "steps=" << result.steps;
  if (!result.loss_trace.empty()) out << " final_loss=" << format_double(result.loss_trace.back());
  out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred, gt, out, clip;
  std::string metrics = "cc,auc-j,auc-b";
  double percentile = 95.0;
  int splits = 100;
  std::uint64_t seed = 0;
  bool area_weighted = false;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::vector<std::pair<fs::path, fs::path>> pair_maps(const fs::path& pred, const fs::path& gt) {
  if (!fs::is_directory(pred)) {
    if (!fs::exists(pred)) throw ConfigError("no such prediction: " + pred.string());
    if (!fs::exists(gt)) throw ConfigError("no such ground truth: " + gt.string());
    return {{pred, gt}};
  }
  std::vector<std::pair<fs::path, fs::path>> pairs;
  for (const auto& e : fs::directory_iterator(pred)) {
    if (e.path().extension() != ".psal") continue;
    const fs::path g = gt / e.path().filename();
    if (!fs::exists(g)) throw ConfigError("no ground truth for " + e.path().filename().string());
    pairs.emplace_back(e.path(), g);
  }
  std::sort(pairs.begin(), pairs.end());
  if (pairs.empty()) throw ConfigError(pred.string() + " holds no .psal files");
  return pairs;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto metric_names = split_list(a.metrics);
  for (const auto& m : metric_names) {
    if (m != "cc" && m != "auc-j" && m != "auc-b") throw ConfigError("unknown metric: " + m);
  }
  if (metric_names.empty()) throw ConfigError("no metrics requested");
  Report report(a.out, out);
  const auto pairs = pair_maps(a.pred, a.gt);
  for (const auto& [pred_path, gt_path] : pairs) {
    const nn::Tensor pred = read_maps(pred_path);
    const nn::Tensor gt = read_maps(gt_path);
    if (pred.dim(1) != gt.dim(1) || pred.dim(2) != gt.dim(2) || (gt.dim(0) != 1 && gt.dim(0) != pred.dim(0))) {
      throw ConfigError("shape mismatch: prediction " + nn::dims_to_string(pred.dims()) + " vs ground truth " +
                        nn::dims_to_string(gt.dims()));
    }
    const std::string clip = a.clip.empty() || pairs.size() > 1 ? pred_path.stem().string() : a.clip;
    const std::size_t frames = pred.dim(0);
    const nn::Tensor area = metrics::area_weights(static_cast<int>(pred.dim(2)), static_cast<int>(pred.dim(1)));
    for (const auto& m : metric_names) {
      double total = 0.0;
      for (std::size_t t = 0; t < frames; ++t) {
        const nn::Tensor p = frame_plane(pred, t);
        const nn::Tensor g = frame_plane(gt, gt.dim(0) == 1 ? 0 : t);
        if (m == "cc") {
          total += a.area_weighted ? metrics::cc_weighted(p, g, area) : metrics::cc(p, g);
        } else if (m == "auc-j") {
          total += metrics::auc_judd(p, metrics::binarize_gt(g, a.percentile));
        } else {
          total += metrics::auc_borji(p, metrics::binarize_gt(g, a.percentile), a.splits, a.seed + t);
        }
      }
      json params = {{"frames", frames}};
      if (m == "cc") params["area_weighted"] = a.area_weighted;
      if (m != "cc") params["percentile"] = a.percentile;
      if (m == "auc-b") {
        params["n_splits"] = a.splits;
        params["seed"] = a.seed;
      }
      emit(report.stream(), {{"clip", clip}, {"metric", m}, {"value", total / static_cast<double>(frames)},
                             {"params", params}});
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- vqa

struct VqaArgs {
  std::string ref, dist, weight_map, out, clip;
  std::string metric = "psnr";
  std::string format = "erp";
  double max_value = 1.0;
  std::size_t points = 10242;
  std::uint64_t seed = 0;
  bool rgb = false;
};

int cmd_vqa(const VqaArgs& a, std::ostream& out) {
  if (a.metric != "psnr" && a.metric != "ws-psnr" && a.metric != "s-psnr") {
    throw ConfigError("unknown metric: " + a.metric);
  }
  const geom::Format format = geom::parse_format(a.format);
  const auto ref = io::read_clip(a.ref, format);
  const auto dist = io::read_clip(a.dist, format);
  if (ref.size() != dist.size()) throw ConfigError("reference and distorted clips differ in length");
  for (std::size_t t = 0; t < ref.size(); ++t) {
    if (ref[t].pixels.dims() != dist[t].pixels.dims()) throw ConfigError("reference and distorted frames differ in shape");
  }
  const int w = ref.front().width(), h = ref.front().height();
  std::vector<nn::Tensor> weights;
  if (!a.weight_map.empty()) {
    const nn::Tensor maps = read_maps(a.weight_map);
    if (maps.dim(1) != static_cast<std::size_t>(h) || maps.dim(2) != static_cast<std::size_t>(w) ||
        (maps.dim(0) != 1 && maps.dim(0) != ref.size())) {
      throw ConfigError("weight map " + nn::dims_to_string(maps.dims()) + " does not match the clip");
    }
    weights = split_planes(maps);
  }
  const auto space = a.rgb ? metrics::ErrorSpace::rgb_mean : metrics::ErrorSpace::luma;
  metrics::PsnrResult r;
  if (a.metric == "psnr") {
    r = metrics::psnr_weighted(ref, dist, weights, a.max_value, space);
  } else if (a.metric == "ws-psnr") {
    const nn::Tensor ws = metrics::ws_weights(w, h);
    if (weights.empty()) weights.push_back(ws);
    for (auto& m : weights) {
      for (std::size_t i = 0; i < m.size(); ++i) m[i] *= ws[i];
    }
    r = metrics::psnr_weighted(ref, dist, weights, a.max_value, space);
  } else {
    r = metrics::spsnr(ref, dist, metrics::fibonacci_points(a.points, a.seed), weights, a.max_value, space);
  }
  json params = {{"frames", ref.size()},
                 {"max", a.max_value},
                 {"error", a.rgb ? "rgb-mean" : "luma"},
                 {"weighted", !a.weight_map.empty()},
                 {"mse", r.mse},
                 {"exact_match", r.exact_match}};
  if (a.metric == "s-psnr") params["points"] = a.points;
  Report report(a.out, out);
  const std::string clip = a.clip.empty() ? fs::path(a.dist).filename().string() : a.clip;
  emit(report.stream(), {{"clip", clip}, {"metric", a.metric}, {"value", r.db}, {"params", params}});
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Panoramic video saliency: offsets, inference, training and evaluation"};
  app.name(args.empty() ? "paver" : fs::path(args.front()).filename().string());
  app.require_subcommand(1);

  OffsetsArgs offsets;
  auto* c_off = app.add_subcommand("offsets", "Precompute the tangent-patch sampling table");
  c_off->add_option("--width", offsets.width)->required();
  c_off->add_option("--height", offsets.height)->required();
  c_off->add_option("--patch", offsets.patch)->capture_default_str();
  c_off->add_option("--format", offsets.format, "erp, cmp or tsp")->capture_default_str();
  c_off->add_option("--out", offsets.out)->required();

  InitArgs init;
  auto* c_init = app.add_subcommand("init", "Write randomly initialised model weights");
  add_model_options(c_init, init.model);
  c_init->add_option("--seed", init.seed)->capture_default_str();
  c_init->add_option("--out", init.out)->required();

  SynthArgs synth_args;
  auto* c_synth = app.add_subcommand("synth", "Render synthetic moving-square clips");
  c_synth->add_option("--out", synth_args.out)->required();
  c_synth->add_option("--width", synth_args.width)->capture_default_str();
  c_synth->add_option("--height", synth_args.height)->capture_default_str();
  c_synth->add_option("--frames", synth_args.frames)->capture_default_str();
  c_synth->add_option("--clips", synth_args.clips)->capture_default_str();
  c_synth->add_option("--format", synth_args.format)->capture_default_str();
  c_synth->add_option("--seed", synth_args.seed)->capture_default_str();

  SaliencyArgs sal;
  auto* c_sal = app.add_subcommand("saliency", "Predict saliency maps for one or more clips");
  c_sal->add_option("--frames", sal.frames, "Frame directory, clip tensor, or directory of clips")->required();
  c_sal->add_option("--weights", sal.weights)->required();
  c_sal->add_option("--offsets", sal.offsets)->required();
  c_sal->add_option("--out", sal.out, "Output directory")->required();
  c_sal->add_option("--sigma", sal.sigma, "Smoothing std in pixels (default W/64)");
  c_sal->add_option("--window", sal.window, "Frames per fusion window")->capture_default_str();
  c_sal->add_option("--alpha", sal.alpha)->capture_default_str();
  c_sal->add_option("--beta", sal.beta)->capture_default_str();
  c_sal->add_option("--gamma", sal.gamma)->capture_default_str();
  c_sal->add_flag("--exact", sal.exact, "Untruncated smoothing kernel");
  c_sal->add_flag("--no-preview", sal.no_preview, "Skip PGM previews");
  c_sal->add_option("--jobs", sal.jobs)->capture_default_str();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Fit the fusion parameters with the encoder frozen");
  c_train->add_option("--frames-dir", train.frames_dir)->required();
  c_train->add_option("--config", train.config, "key=value file");
  c_train->add_option("--out-weights", train.out_weights)->required();
  c_train->add_option("--init-weights", train.init_weights);
  c_train->add_option("--trace", train.trace, "Loss trace CSV (default <out-weights>.trace.csv)");
  c_train->add_option("--offsets", train.offsets);
  c_train->add_option("--format", train.format)->capture_default_str();
  add_model_options(c_train, train.model);
  c_train->add_option("--lr", train.lr);
  c_train->add_option("--epochs", train.epochs);
  c_train->add_option("--T", train.window);
  c_train->add_option("--lambda-t", train.lambda_t);
  c_train->add_option("--lambda-s", train.lambda_s);
  c_train->add_option("--lambda-g", train.lambda_g);
  c_train->add_option("--epsilon", train.epsilon);
  c_train->add_option("--sigma", train.sigma);
  c_train->add_option("--seed", train.seed);
  c_train->add_option("--max-steps", train.max_steps);
  c_train->add_option("--jobs", train.jobs)->capture_default_str();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Saliency metrics as JSON lines");
  c_eval->add_option("--pred", ev.pred)->required();
  c_eval->add_option("--gt", ev.gt)->required();
  c_eval->add_option("--metrics", ev.metrics)->capture_default_str();
  c_eval->add_option("--percentile", ev.percentile)->capture_default_str();
  c_eval->add_option("--splits", ev.splits)->capture_default_str();
  c_eval->add_option("--seed", ev.seed)->capture_default_str();
  c_eval->add_flag("--area-weighted", ev.area_weighted, "Latitude-weighted CC");
  c_eval->add_option("--clip", ev.clip);
  c_eval->add_option("--out", ev.out);

  VqaArgs vqa;
  auto* c_vqa = app.add_subcommand("vqa", "Full-reference quality metrics as JSON lines");
  c_vqa->add_option("--ref", vqa.ref)->required();
  c_vqa->add_option("--dist", vqa.dist)->required();
  c_vqa->add_option("--metric", vqa.metric, "psnr, ws-psnr or s-psnr")->capture_default_str();
  c_vqa->add_option("--weight-map", vqa.weight_map);
  c_vqa->add_option("--format", vqa.format)->capture_default_str();
  c_vqa->add_option("--max", vqa.max_value, "Peak value of the [0, 1]-scaled frames")->capture_default_str();
  c_vqa->add_option("--points", vqa.points)->capture_default_str();
  c_vqa->add_option("--seed", vqa.seed)->capture_default_str();
  c_vqa->add_flag("--rgb", vqa.rgb, "Mean per-channel error instead of luma");
  c_vqa->add_option("--clip", vqa.clip);
  c_vqa->add_option("--out", vqa.out);

  std::vector<std::string> argv_store(args.begin(), args.end());
  if (argv_store.empty()) argv_store.emplace_back("paver");
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (c_off->parsed()) return cmd_offsets(offsets, out);
    if (c_init->parsed()) return cmd_init(init, out);
    if (c_synth->parsed()) return cmd_synth(synth_args, out);
    if (c_sal->parsed()) return cmd_saliency(sal, out);
    if (c_train->parsed()) return cmd_train(train, out);
    if (c_eval->parsed()) return cmd_eval(ev, out);
    if (c_vqa->parsed()) return cmd_vqa(vqa, out);
  } catch (const TrainingError& e) {
    err << "error: training diverged at step " << e.step() << ": " << e.what() << '\n';
    return kExitNumeric;
  } catch (const NumericError& e) {
    err << "error: non-finite values in stage " << e.stage() << ": " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace paver::cli
