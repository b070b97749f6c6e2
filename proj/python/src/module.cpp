// Python bindings: geometry and refinement primitives, plus file-level
// simulate / postprocess / evaluate mirroring the CLI commands.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <tuple>

#include "tubelink/eval.hpp"
#include "tubelink/io.hpp"
#include "tubelink/pipeline.hpp"
#include "tubelink/refine.hpp"
#include "tubelink/synth.hpp"
#include "tubelink/tubelet.hpp"
#include "tubelink/version.hpp"

namespace py = pybind11;
using namespace tubelink;

namespace {

namespace fs = std::filesystem;
using Box = std::tuple<double, double, double, double>;

BBox to_bbox(const Box& b) { return {std::get<0>(b), std::get<1>(b), std::get<2>(b), std::get<3>(b)}; }

std::vector<Link> match(const std::vector<std::vector<double>>& scores, double threshold) {
  const std::size_t rows = scores.size(), cols = rows ? scores[0].size() : 0;
  std::vector<double> flat;
  flat.reserve(rows * cols);
  for (const auto& r : scores) {
    if (r.size() != cols) throw InvalidArgument("score matrix rows differ in length");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return greedy_match(ScoreMatrix(rows, cols, std::move(flat)), threshold);
}

std::size_t simulate(const fs::path& out_dir, const SynthConfig& cfg) {
  const SynthScene scene = generate(cfg);
  const DetectionSet dets = corrupt(scene, cfg);
  io::save_ground_truth(out_dir / "gt.jsonl", scene.ground_truth);
  io::save_features(out_dir / "features.jsonl", scene.features);
  io::save_detections(out_dir / "detections.jsonl", dets);
  io::save_video_info(out_dir / "fps.json", scene.videos);
  io::save_catalog(out_dir / "classes.json", scene.catalog);
  std::size_t n = 0;
  for (const auto& [v, frames] : dets)
    for (const auto& [f, list] : frames) n += list.size();
  return n;
}

std::string postprocess_files(const fs::path& detections, const fs::path& out, const std::optional<fs::path>& linker,
                              const std::optional<fs::path>& embed, const std::optional<fs::path>& video_meta,
                              double threshold, double sigma, std::optional<double> period_ms) {
  ClassCatalog catalog;
  const auto dets = io::load_detections(detections, catalog, 0.005);
  std::optional<LinkScorerModel> lm;
  std::optional<EmbeddingModel> em;
  if (linker) lm = io::load_link_scorer(*linker);
  if (embed) em = io::load_embedding_model(*embed);
  const VideoInfoMap videos = video_meta ? io::load_video_info(*video_meta) : VideoInfoMap{};
  PostprocessConfig cfg;
  cfg.linking.link_threshold = threshold;
  cfg.smoothing.sigma = sigma;
  cfg.sampling_period_ms = period_ms;
  py::gil_scoped_release release;
  const auto result = postprocess(dets, lm ? &*lm : nullptr, em ? &*em : nullptr, videos, cfg);
  io::save_refined(out, result.original_detections(), result.tubelets());
  std::size_t n_tubelets = 0;
  for (const auto& [v, r] : result.videos) n_tubelets += r.tubelets.size();
  return io::Json{{"frames", result.frames_processed},
                  {"tubelets", n_tubelets},
                  {"elapsed_ms", result.elapsed_ms},
                  {"ms_per_frame", result.ms_per_frame()}}
      .dump();
}

std::string evaluate_files(const fs::path& detections, const fs::path& gt, const fs::path& classes, double iou_threshold) {
  ClassCatalog catalog = io::load_catalog(classes);
  const auto dets = io::load_detections(detections, catalog, 0.0);
  const auto truth = io::load_ground_truth(gt, catalog);
  EvalConfig cfg;
  cfg.iou_threshold = iou_threshold;
  return io::to_json(evaluate(dets, truth, catalog, cfg)).dump();
}

}  // namespace

PYBIND11_MODULE(_tubelink, m) {
  m.attr("__version__") = kVersion;

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("iou", [](const Box& a, const Box& b) { return iou(to_bbox(a), to_bbox(b)); }, py::arg("a"), py::arg("b"),
        "IoU of two (x, y, w, h) boxes.");
  m.def(
      "center_distance",
      [](const Box& a, const Box& b, double diag) { return center_distance(to_bbox(a), to_bbox(b), diag); },
      py::arg("a"), py::arg("b"), py::arg("frame_diag"));
  m.def("gaussian_kernel", &gaussian_kernel, py::arg("sigma"));
  m.def(
      "smooth_series",
      [](const std::vector<double>& x, double sigma) { return smooth_series(x, gaussian_kernel(sigma)); },
      py::arg("series"), py::arg("sigma"));
  m.def("greedy_match", &match, py::arg("scores"), py::arg("threshold"),
        "Greedy one-to-one matching; returns (row, col) links with score >= threshold.");

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("n_videos", &SynthConfig::n_videos)
      .def_readwrite("frames_per_video", &SynthConfig::frames_per_video)
      .def_readwrite("fps", &SynthConfig::fps)
      .def_readwrite("speed_min", &SynthConfig::speed_min)
      .def_readwrite("speed_max", &SynthConfig::speed_max)
      .def_readwrite("drop_prob", &SynthConfig::drop_prob)
      .def_readwrite("box_jitter_std", &SynthConfig::box_jitter_std)
      .def_readwrite("class_confusion_prob", &SynthConfig::class_confusion_prob)
      .def_readwrite("false_positive_rate", &SynthConfig::false_positive_rate)
      .def_readwrite("confidence_temperature", &SynthConfig::confidence_temperature)
      .def_readwrite("seed", &SynthConfig::seed)
      .def("validate", &SynthConfig::validate);

  m.def("simulate", &simulate, py::arg("out_dir"), py::arg("config"),
        "Write gt.jsonl, features.jsonl, detections.jsonl, fps.json and classes.json; returns the detection count.");
  m.def("_postprocess", &postprocess_files, py::arg("detections"), py::arg("out"), py::arg("linker"),
        py::arg("embed"), py::arg("video_meta"), py::arg("threshold"), py::arg("sigma"), py::arg("period_ms"));
  m.def("_evaluate", &evaluate_files, py::arg("detections"), py::arg("gt"), py::arg("classes"),
        py::arg("iou_threshold"));
}
