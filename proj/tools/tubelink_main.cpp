// tubelink: command-line front end for the detection linking toolkit.
//
// Exit codes: 0 success, 1 usage, 2 data/schema, 3 numeric failure.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "tubelink/dataset.hpp"
#include "tubelink/embed.hpp"
#include "tubelink/eval.hpp"
#include "tubelink/io.hpp"
#include "tubelink/linkscore.hpp"
#include "tubelink/pipeline.hpp"
#include "tubelink/synth.hpp"
#include "tubelink/version.hpp"

namespace fs = std::filesystem;
using namespace tubelink;

namespace {

template <typename... Fields>
void log_event(const char* event, const Fields&... fields) {
  std::cerr << "tubelink event=" << event;
  ((std::cerr << ' ' << fields), ...);
  std::cerr << '\n';
}

template <typename T>
std::string kv(const char* key, const T& value) {
  std::ostringstream os;
  os << key << '=' << value;
  return os.str();
}

VideoInfo parse_frame_size(const std::string& text) {
  VideoInfo info;
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    info.width = std::stod(text.substr(0, x));
    info.height = std::stod(text.substr(x + 1));
  } catch (const std::exception&) {
    throw InvalidArgument("--frame-size must look like 640x480, got '" + text + "'");
  }
  if (!(info.width > 0 && info.height > 0)) throw InvalidArgument("--frame-size must be positive");
  return info;
}

ClassCatalog catalog_or_empty(const std::string& path) {
  return path.empty() ? ClassCatalog{} : io::load_catalog(path);
}

template <typename T>
std::pair<std::vector<T>, std::vector<T>> holdout(std::vector<T> items, double fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  std::shuffle(items.begin(), items.end(), rng);
  const auto n_val = static_cast<std::size_t>(fraction * static_cast<double>(items.size()) + 0.5);
  std::vector<T> val(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<T> train(items.begin() + static_cast<std::ptrdiff_t>(n_val), items.end());
  return {std::move(train), std::move(val)};
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  SynthConfig cfg;
  std::string out_dir = "data";
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
  auto* c = app.add_subcommand("simulate", "Generate a synthetic benchmark (gt, features, detections)");
  auto& s = a.cfg;
  c->add_option("--out-dir", a.out_dir, "Output directory")->capture_default_str();
  c->add_option("--seed", s.seed)->capture_default_str();
  c->add_option("--n-videos", s.n_videos)->capture_default_str();
  c->add_option("--frames-per-video", s.frames_per_video)->capture_default_str();
  c->add_option("--fps", s.fps)->capture_default_str();
  c->add_option("--frame-width", s.frame_width)->capture_default_str();
  c->add_option("--frame-height", s.frame_height)->capture_default_str();
  c->add_option("--objects-min", s.objects_min)->capture_default_str();
  c->add_option("--objects-max", s.objects_max)->capture_default_str();
  c->add_option("--speed-min", s.speed_min, "px/frame")->capture_default_str();
  c->add_option("--speed-max", s.speed_max, "px/frame")->capture_default_str();
  c->add_option("--heading-jitter", s.heading_jitter, "rad/frame")->capture_default_str();
  c->add_option("--scale-drift", s.scale_drift, "log-size random walk std per frame")->capture_default_str();
  c->add_option("--size-min", s.size_min)->capture_default_str();
  c->add_option("--size-max", s.size_max)->capture_default_str();
  c->add_option("--class-count", s.class_count)->capture_default_str();
  c->add_option("--feature-dim", s.feature_dim)->capture_default_str();
  c->add_option("--informative-dims", s.informative_dims)->capture_default_str();
  c->add_option("--feature-noise-std", s.feature_noise_std)->capture_default_str();
  c->add_option("--nuisance-std", s.nuisance_std)->capture_default_str();
  c->add_option("--appearance-cluster-separation", s.appearance_cluster_separation)->capture_default_str();
  c->add_option("--drop-prob", s.drop_prob)->capture_default_str();
  c->add_option("--box-jitter-std", s.box_jitter_std)->capture_default_str();
  c->add_option("--class-confusion-prob", s.class_confusion_prob)->capture_default_str();
  c->add_option("--confusion-softness", s.confusion_softness, "true-class logit kept after a swap")->capture_default_str();
  c->add_option("--false-positive-rate", s.false_positive_rate, "expected FPs per frame")->capture_default_str();
  c->add_option("--confidence-temperature", s.confidence_temperature)->capture_default_str();
  c->add_option("--confidence-noise-std", s.confidence_noise_std)->capture_default_str();
  c->add_option("--objectness-dip-std", s.objectness_dip_std)->capture_default_str();
  c->add_option("--fp-objectness-min", s.fp_objectness_min)->capture_default_str();
  c->add_option("--fp-objectness-max", s.fp_objectness_max)->capture_default_str();
  c->add_option("--blur-gain", s.blur_gain)->capture_default_str();
  c->callback([&a] {
    const SynthScene scene = generate(a.cfg);
    const DetectionSet dets = corrupt(scene, a.cfg);
    const fs::path dir = a.out_dir;
    io::save_ground_truth(dir / "gt.jsonl", scene.ground_truth);
    io::save_features(dir / "features.jsonl", scene.features);
    io::save_detections(dir / "detections.jsonl", dets);
    io::save_video_info(dir / "fps.json", scene.videos);
    io::save_catalog(dir / "classes.json", scene.catalog);
    std::size_t n_det = 0;
    for (const auto& [v, frames] : dets)
      for (const auto& [f, list] : frames) n_det += list.size();
    log_event("simulate", kv("videos", scene.videos.size()), kv("detections", n_det), kv("out_dir", dir.string()));
  });
}

// ---------------------------------------------------------- build-triplets

struct TripletArgs {
  std::string gt, features, classes, out;
  TripletSamplingConfig cfg;
};

void add_build_triplets(CLI::App& app, TripletArgs& a) {
  auto* c = app.add_subcommand("build-triplets", "Sample (anchor, positive, negative) triplets from ground truth");
  c->add_option("--gt", a.gt, "Ground-truth JSON-lines")->required();
  c->add_option("--features", a.features, "Per-box raw features JSON-lines");
  c->add_option("--classes", a.classes, "Class catalog");
  c->add_option("--n", a.cfg.n, "Number of triplets")->capture_default_str();
  c->add_option("--window", a.cfg.window, "Positive window (frames)")->capture_default_str();
  c->add_option("--same-video-prob", a.cfg.same_video_negative_prob)->capture_default_str();
  c->add_option("--seed", a.cfg.seed)->capture_default_str();
  c->add_option("--out", a.out)->required();
  c->callback([&a] {
    const auto gt = io::load_ground_truth(a.gt, catalog_or_empty(a.classes));
    const FeatureTable features = a.features.empty() ? FeatureTable{} : io::load_features(a.features);
    const auto triplets = sample_triplets(gt, features, a.cfg);
    io::save_triplets(a.out, triplets);
    log_event("build-triplets", kv("n", triplets.size()), kv("out", a.out));
  });
}

// ------------------------------------------------------------- build-pairs

struct PairArgs {
  std::string triplets, embed, video_meta, frame_size = "640x480", out;
};

void add_build_pairs(CLI::App& app, PairArgs& a) {
  auto* c = app.add_subcommand("build-pairs", "Turn triplets into labeled link pairs for the link scorer");
  c->add_option("--triplets", a.triplets)->required();
  c->add_option("--embed", a.embed, "Embedding model; adds the appearance distance");
  c->add_option("--video-meta", a.video_meta, "fps.json with per-video frame sizes");
  c->add_option("--frame-size", a.frame_size, "Fallback frame size WxH")->capture_default_str();
  c->add_option("--out", a.out)->required();
  c->callback([&a] {
    const auto triplets = io::load_triplets(a.triplets);
    const VideoInfoMap videos = a.video_meta.empty() ? VideoInfoMap{} : io::load_video_info(a.video_meta);
    const VideoInfo fallback = parse_frame_size(a.frame_size);
    std::optional<EmbeddingModel> model;
    if (!a.embed.empty()) model = io::load_embedding_model(a.embed);
    const auto pairs = triplets_to_link_pairs(
        triplets,
        [&](const std::string& vid) {
          auto it = videos.find(vid);
          return (it != videos.end() ? it->second : fallback).diagonal();
        },
        model ? &*model : nullptr);
    io::save_pairs(a.out, pairs);
    log_event("build-pairs", kv("pairs", pairs.size()), kv("appearance", model.has_value()), kv("out", a.out));
  });
}

// ------------------------------------------------------------- train-embed

struct EmbedArgs {
  std::string triplets, val_triplets, out, log;
  double val_fraction = 0.15;
  TripletTrainConfig cfg;
};

void add_train_embed(CLI::App& app, EmbedArgs& a) {
  auto* c = app.add_subcommand("train-embed", "Train the appearance embedding with the triplet loss");
  c->add_option("--triplets", a.triplets)->required();
  c->add_option("--val-triplets", a.val_triplets, "Validation triplets (default: hold out --val-fraction)");
  c->add_option("--val-fraction", a.val_fraction)->capture_default_str()->check(CLI::Range(0.0, 0.9));
  c->add_option("--dim", a.cfg.output_dim, "Embedding dimension")->capture_default_str();
  c->add_option("--margin", a.cfg.margin)->capture_default_str();
  c->add_option("--lr", a.cfg.learning_rate)->capture_default_str();
  c->add_option("--batch-size", a.cfg.batch_size)->capture_default_str();
  c->add_option("--epochs", a.cfg.epochs)->capture_default_str();
  c->add_option("--seed", a.cfg.seed)->capture_default_str();
  c->add_option("--out", a.out)->required();
  c->add_option("--log", a.log, "Training log CSV (epoch,train_loss,val_accuracy)");
  c->callback([&a] {
    auto train = io::load_triplets(a.triplets);
    std::vector<Triplet> val;
    if (!a.val_triplets.empty()) {
      val = io::load_triplets(a.val_triplets);
    } else if (a.val_fraction > 0.0) {
      std::tie(train, val) = holdout(std::move(train), a.val_fraction, a.cfg.seed);
    }
    const auto tf = triplet_features(train);
    const auto vf = triplet_features(val);
    const auto result = train_embedding(tf, vf, a.cfg);
    io::Json meta{{"margin", a.cfg.margin},         {"learning_rate", a.cfg.learning_rate},
                  {"batch_size", a.cfg.batch_size}, {"epochs", a.cfg.epochs},
                  {"seed", a.cfg.seed},             {"train_triplets", train.size()},
                  {"val_triplets", val.size()},     {"best_val_accuracy", result.best_val_accuracy}};
    io::save_model(a.out, result.model, meta);
    if (!a.log.empty()) {
      std::ofstream csv(a.log);
      if (!csv) throw DataError("cannot write " + a.log);
      csv << "epoch,train_loss,val_accuracy\n";
      for (const auto& e : result.log) csv << e.epoch << ',' << io::round9(e.train_loss) << ',' << io::round9(e.val_accuracy) << '\n';
    }
    log_event("train-embed", kv("val_accuracy", result.best_val_accuracy), kv("out", a.out));
  });
}

// ------------------------------------------------------------ train-linker

struct LinkerArgs {
  std::string pairs, val_pairs, out, log;
  bool no_appearance = false;
  LinkScorerTrainConfig cfg;
};

std::vector<LinkPair> drop_appearance(std::vector<LinkPair> pairs) {
  for (auto& p : pairs)
    if (p.features.size() == 5) p.features.pop_back();
  return pairs;
}

void add_train_linker(CLI::App& app, LinkerArgs& a) {
  auto* c = app.add_subcommand("train-linker", "Train the logistic link scorer");
  c->add_option("--pairs", a.pairs)->required();
  c->add_option("--val-pairs", a.val_pairs, "Validation pairs (default: hold out --val-fraction)");
  c->add_option("--val-fraction", a.cfg.validation_fraction)->capture_default_str();
  c->add_flag("--no-appearance", a.no_appearance, "Train the variant without appearance distance");
  c->add_option("--l2", a.cfg.l2_lambda)->capture_default_str();
  c->add_option("--lr", a.cfg.learning_rate)->capture_default_str();
  c->add_option("--epochs", a.cfg.epochs)->capture_default_str();
  c->add_option("--seed", a.cfg.seed)->capture_default_str();
  c->add_option("--out", a.out)->required();
  c->add_option("--log", a.log, "Training log CSV (epoch,train_loss)");
  c->callback([&a] {
    auto pairs = io::load_pairs(a.pairs);
    std::vector<LinkPair> val = a.val_pairs.empty() ? std::vector<LinkPair>{} : io::load_pairs(a.val_pairs);
    if (a.no_appearance) {
      pairs = drop_appearance(std::move(pairs));
      val = drop_appearance(std::move(val));
    }
    const auto result = train_link_scorer(pairs, val, a.cfg);
    io::Json meta{{"learning_rate", a.cfg.learning_rate}, {"epochs", a.cfg.epochs},
                  {"l2", a.cfg.l2_lambda},                {"seed", a.cfg.seed},
                  {"train_pairs", result.train_size},     {"val_pairs", result.validation_size},
                  {"val_auc", result.validation_auc},     {"val_accuracy", result.validation_accuracy}};
    io::save_model(a.out, result.model, meta);
    if (!a.log.empty()) {
      std::ofstream csv(a.log);
      if (!csv) throw DataError("cannot write " + a.log);
      csv << "epoch,train_loss\n";
      for (const auto& e : result.log) csv << e.epoch << ',' << io::round9(e.train_loss) << '\n';
    }
    log_event("train-linker", kv("val_auc", result.validation_auc), kv("val_accuracy", result.validation_accuracy),
              kv("out", a.out));
  });
}

// ------------------------------------------------------------- postprocess

struct PostArgs {
  std::string detections, linker, embed, classes, video_meta, frame_size = "640x480", out, stats_out;
  bool baseline_iou = false;
  double conf_threshold = 0.005;
  std::optional<double> period_ms;
  PostprocessConfig cfg;
};

void add_postprocess(CLI::App& app, PostArgs& a) {
  auto* c = app.add_subcommand("postprocess", "Link detections into tubelets, then rescore and smooth them");
  c->add_option("--detections", a.detections)->required();
  auto* linker = c->add_option("--linker", a.linker, "Link scorer model");
  auto* baseline = c->add_flag("--baseline-iou", a.baseline_iou, "Link by plain IoU instead of the learned scorer");
  linker->excludes(baseline);
  c->add_option("--embed", a.embed, "Embedding model applied to raw features");
  c->add_option("--threshold", a.cfg.linking.link_threshold, "Link threshold (0.05 for sparse frames)")
      ->capture_default_str();
  c->add_option("--sigma", a.cfg.smoothing.sigma, "Gaussian sigma in frames; 0 disables smoothing")
      ->capture_default_str();
  c->add_option("--classes", a.classes, "Class catalog");
  c->add_option("--conf-threshold", a.conf_threshold, "Drop detections with lower max score")->capture_default_str();
  c->add_option("--video-meta", a.video_meta, "fps.json with per-video fps and frame size");
  c->add_option("--frame-size", a.frame_size, "Fallback frame size WxH")->capture_default_str();
  c->add_option("--period-ms", a.period_ms, "Process only frames nearest to multiples of this period");
  c->add_option("--threads", a.cfg.threads, "Worker threads across videos (1 is deterministic)")->capture_default_str();
  c->add_option("--out", a.out)->required();
  c->add_option("--stats-out", a.stats_out, "Write timing stats JSON");
  c->callback([&a] {
    if (a.linker.empty() && !a.baseline_iou) throw InvalidArgument("postprocess needs --linker or --baseline-iou");
    ClassCatalog catalog = catalog_or_empty(a.classes);
    std::optional<LinkScorerModel> linker;
    std::optional<EmbeddingModel> embed;
    if (!a.linker.empty()) linker = io::load_link_scorer(a.linker);
    if (!a.embed.empty()) embed = io::load_embedding_model(a.embed);
    io::LoadStats stats;
    const auto dets = io::load_detections(a.detections, catalog, a.conf_threshold, &stats);
    log_event("load", kv("kept", stats.kept), kv("dropped", stats.dropped));
    const VideoInfoMap videos = a.video_meta.empty() ? VideoInfoMap{} : io::load_video_info(a.video_meta);
    a.cfg.default_video = parse_frame_size(a.frame_size);
    a.cfg.sampling_period_ms = a.period_ms;
    const auto result = postprocess(dets, linker ? &*linker : nullptr, embed ? &*embed : nullptr, videos, a.cfg);
    io::save_refined(a.out, result.original_detections(), result.tubelets());
    std::size_t n_tubelets = 0;
    for (const auto& [v, r] : result.videos) n_tubelets += r.tubelets.size();
    log_event("postprocess", kv("frames", result.frames_processed), kv("tubelets", n_tubelets),
              kv("ms_per_frame", result.ms_per_frame()), kv("out", a.out));
    if (!a.stats_out.empty()) {
      io::write_json(a.stats_out, {{"frames", result.frames_processed},
                                   {"elapsed_ms", result.elapsed_ms},
                                   {"ms_per_frame", result.ms_per_frame()}});
    }
  });
}

// ---------------------------------------------------------------- evaluate

struct EvalArgs {
  std::string detections, gt, classes, fps_map, stats, out;
  EvalConfig cfg;
};

void add_evaluate(CLI::App& app, EvalArgs& a) {
  auto* c = app.add_subcommand("evaluate", "mAP overall and per motion stratum");
  c->add_option("--detections", a.detections, "Raw or refined detections")->required();
  c->add_option("--gt", a.gt)->required();
  c->add_option("--classes", a.classes, "Class catalog");
  auto* period = c->add_option("--period-ms", a.cfg.sampling_period_ms, "Evaluate on subsampled frames");
  c->add_option("--fps-map", a.fps_map, "fps.json (required with --period-ms)");
  c->add_option("--iou", a.cfg.iou_threshold)->capture_default_str();
  c->add_option("--motion-window", a.cfg.motion_window)->capture_default_str();
  c->add_option("--slow-threshold", a.cfg.slow_threshold)->capture_default_str();
  c->add_option("--fast-threshold", a.cfg.fast_threshold)->capture_default_str();
  c->add_option("--min-track-len", a.cfg.min_track_len)->capture_default_str();
  c->add_option("--stats", a.stats, "Timing stats from postprocess --stats-out");
  c->add_option("--out", a.out)->required();
  (void)period;
  c->callback([&a] {
    ClassCatalog catalog = catalog_or_empty(a.classes);
    const auto dets = io::load_detections(a.detections, catalog, 0.0);
    const auto gt = io::load_ground_truth(a.gt, catalog);
    if (catalog.size() == 0) {
      int max_class = -1;
      for (const auto& [v, boxes] : gt)
        for (const auto& g : boxes) max_class = std::max(max_class, g.class_id);
      catalog = ClassCatalog::anonymous(static_cast<std::size_t>(max_class + 1));
    }
    std::optional<ProcessedFrames> processed;
    if (a.cfg.sampling_period_ms) {
      if (a.fps_map.empty()) throw InvalidArgument("--period-ms requires --fps-map");
      const auto videos = io::load_video_info(a.fps_map);
      processed.emplace();
      std::set<std::string> ids;
      for (const auto& [v, f] : dets) ids.insert(v);
      for (const auto& [v, b] : gt) ids.insert(v);
      for (const auto& vid : ids) {
        auto it = videos.find(vid);
        if (it == videos.end()) throw DataError("no fps entry for video " + vid);
        VideoInfo info = it->second;
        if (auto g = gt.find(vid); g != gt.end())
          for (const auto& box : g->second) info.frame_count = std::max(info.frame_count, box.frame_index + 1);
        const auto d = dets.find(vid);
        (*processed)[vid] = processed_frame_list(d != dets.end() ? d->second : VideoDetections{}, info,
                                                 a.cfg.sampling_period_ms);
      }
    }
    EvalReport report = evaluate(dets, gt, catalog, a.cfg, processed ? &*processed : nullptr);
    if (!a.stats.empty()) report.postprocess_ms_per_frame = io::read_json(a.stats).at("ms_per_frame").get<double>();
    io::write_json(a.out, io::to_json(report));
    log_event("evaluate", kv("map", report.map_all), kv("map_fast", report.map_fast.value_or(-1.0)), kv("out", a.out));
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tubelink: learned linking and refinement of per-frame object detections"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML config; a [subcommand] section per step, keys mirror the flags");
  app.set_version_flag("--version", std::string("tubelink ") + kVersion + " (model format v" +
                                        std::to_string(io::kModelFormatVersion) + ")");

  SimulateArgs simulate;
  TripletArgs triplets;
  PairArgs pairs;
  EmbedArgs embed;
  LinkerArgs linker;
  PostArgs post;
  EvalArgs eval;
  add_simulate(app, simulate);
  add_build_triplets(app, triplets);
  add_build_pairs(app, pairs);
  add_train_embed(app, embed);
  add_train_linker(app, linker);
  add_postprocess(app, post);
  add_evaluate(app, eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::FileError& e) {
    std::cerr << "tubelink: data error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "tubelink: usage error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "tubelink: numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "tubelink: data error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "tubelink: data error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "tubelink: data error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
