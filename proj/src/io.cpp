#include "tubelink/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace tubelink::io {

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

[[noreturn]] void fail_at(const fs::path& path, std::size_t line, const std::string& msg) {
  throw DataError(path.string() + ":" + std::to_string(line) + ": " + msg);
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// Calls fn(json, line_number) for every non-blank line; parse and schema
// errors are reported with the line number.
template <typename Fn>
void for_each_record(const fs::path& path, Fn&& fn) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::parse_error& e) {
      fail_at(path, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object()) fail_at(path, line_no, "record is not a JSON object");
    try {
      fn(rec, line_no);
    } catch (const Json::exception& e) {
      fail_at(path, line_no, std::string("schema error: ") + e.what());
    } catch (const InvalidArgument& e) {
      fail_at(path, line_no, e.what());
    } catch (const DataError& e) {
      const std::string what = e.what();
      if (what.rfind(path.string() + ":", 0) == 0) throw;
      fail_at(path, line_no, what);
    }
  }
}

const Json& require(const Json& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end()) throw DataError(std::string("missing field '") + key + "'");
  return *it;
}

std::vector<double> real_array(const Json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string(what) + " must be an array");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw DataError(std::string(what) + " must contain numbers");
    const double d = x.get<double>();
    if (!std::isfinite(d)) throw DataError(std::string(what) + " must be finite");
    v.push_back(d);
  }
  return v;
}

Json rounded(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(round9(x));
  return a;
}

Json exact(std::span<const double> v) { return Json(std::vector<double>(v.begin(), v.end())); }

BBox read_bbox(const Json& j) {
  const auto v = real_array(j, "bbox");
  if (v.size() != 4) throw DataError("bbox must have 4 entries [x, y, w, h]");
  return BBox(v[0], v[1], v[2], v[3]);
}

Json write_bbox(const BBox& b) { return Json::array({round9(b.x), round9(b.y), round9(b.w), round9(b.h)}); }

int read_int(const Json& j, const char* what) {
  if (!j.is_number_integer()) throw DataError(std::string(what) + " must be an integer");
  return j.get<int>();
}

std::string read_string(const Json& j, const char* what) {
  if (!j.is_string()) throw DataError(std::string(what) + " must be a string");
  return j.get<std::string>();
}

ClassConfidences read_scores(const Json& j) {
  auto v = real_array(j, "scores");
  for (double x : v)
    if (x < 0.0 || x > 1.0) throw DataError("scores must lie in [0,1]");
  return v;
}

void write_lines(const fs::path& path, const std::vector<Json>& records) {
  auto out = open_out(path);
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

Json sample_to_json(const SampleRef& s) {
  Json j{{"video_id", s.video_id},
         {"frame_index", s.frame_index},
         {"track_id", s.track_id},
         {"bbox", write_bbox(s.bbox)}};
  if (s.feature) j["feature"] = rounded(*s.feature);
  return j;
}

SampleRef sample_from_json(const Json& j) {
  SampleRef s;
  s.video_id = read_string(require(j, "video_id"), "video_id");
  s.frame_index = read_int(require(j, "frame_index"), "frame_index");
  s.track_id = read_int(require(j, "track_id"), "track_id");
  s.bbox = read_bbox(require(j, "bbox"));
  if (auto it = j.find("feature"); it != j.end() && !it->is_null()) s.feature = real_array(*it, "feature");
  return s;
}

void check_version(const Json& doc, const char* kind) {
  if (!doc.is_object()) throw DataError("model file is not a JSON object");
  const std::string k = doc.value("kind", "");
  if (k != kind) throw DataError(std::string("model kind is '") + k + "', expected '" + kind + "'");
  const int version = doc.value("version", -1);
  if (version != kModelFormatVersion) {
    throw DataError("incompatible model file version " + std::to_string(version) + " (this build reads version " +
                    std::to_string(kModelFormatVersion) + ")");
  }
}

Json optional_real(const std::optional<double>& v) { return v ? Json(round9(*v)) : Json(nullptr); }

}  // namespace

double round9(double v) {
  if (!std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

ClassCatalog load_catalog(const fs::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    Json doc;
    try {
      doc = Json::parse(text);
      return ClassCatalog(doc.get<std::vector<std::string>>());
    } catch (const Json::exception& e) {
      throw DataError(path.string() + ": malformed class catalog: " + e.what());
    }
  }
  std::vector<std::string> names;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!blank(line)) names.push_back(line);
  }
  return ClassCatalog(std::move(names));
}

void save_catalog(const fs::path& path, const ClassCatalog& catalog) {
  auto out = open_out(path);
  out << Json(catalog.names()).dump() << '\n';
}

DetectionSet load_detections(const fs::path& path, ClassCatalog& catalog, double conf_threshold,
                             LoadStats* stats) {
  DetectionSet out;
  LoadStats local;
  std::map<std::string, DetectionId> ordinal;
  std::map<std::string, std::set<DetectionId>> seen_ids;
  for_each_record(path, [&](const Json& rec, std::size_t) {
    Detection d;
    d.video_id = read_string(require(rec, "video_id"), "video_id");
    d.frame_index = read_int(require(rec, "frame_index"), "frame_index");
    if (d.frame_index < 0) throw DataError("frame_index must be non-negative");
    d.bbox = read_bbox(require(rec, "bbox"));
    d.confidences = read_scores(require(rec, "scores"));
    if (catalog.size() == 0) catalog = ClassCatalog::anonymous(d.confidences.size());
    if (d.confidences.size() != catalog.size()) {
      throw DataError("scores length " + std::to_string(d.confidences.size()) + " does not match catalog size " +
                      std::to_string(catalog.size()));
    }
    if (auto it = rec.find("feature"); it != rec.end() && !it->is_null()) d.raw_feature = real_array(*it, "feature");
    if (auto it = rec.find("embedding"); it != rec.end() && !it->is_null())
      d.embedding = real_array(*it, "embedding");
    const DetectionId position = ordinal[d.video_id]++;
    if (auto it = rec.find("detection_id"); it != rec.end() && !it->is_null()) {
      if (!it->is_number_integer()) throw DataError("detection_id must be an integer");
      d.detection_id = it->get<DetectionId>();
    } else {
      d.detection_id = position;
    }
    if (!seen_ids[d.video_id].insert(d.detection_id).second)
      throw DataError("duplicate detection_id " + std::to_string(d.detection_id) + " in video " + d.video_id);
    if (d.max_confidence() < conf_threshold) {
      ++local.dropped;
      return;
    }
    ++local.kept;
    out[d.video_id][d.frame_index].push_back(std::move(d));
  });
  for (auto& [vid, frames] : out)
    for (auto& [f, list] : frames)
      std::sort(list.begin(), list.end(),
                [](const Detection& a, const Detection& b) { return a.detection_id < b.detection_id; });
  if (stats != nullptr) *stats = local;
  return out;
}

void save_detections(const fs::path& path, const DetectionSet& detections) {
  std::vector<Json> records;
  for (const auto& [vid, frames] : detections)
    for (const auto& [f, list] : frames)
      for (const auto& d : list) {
        Json r{{"video_id", vid},
               {"frame_index", f},
               {"detection_id", d.detection_id},
               {"bbox", write_bbox(d.bbox)},
               {"scores", rounded(d.confidences)}};
        if (d.raw_feature) r["feature"] = rounded(*d.raw_feature);
        if (d.embedding) r["embedding"] = rounded(*d.embedding);
        records.push_back(std::move(r));
      }
  write_lines(path, records);
}

GroundTruthSet load_ground_truth(const fs::path& path, const ClassCatalog& catalog) {
  GroundTruthSet out;
  std::set<std::tuple<std::string, int, int>> seen;
  for_each_record(path, [&](const Json& rec, std::size_t) {
    GroundTruthBox g;
    g.video_id = read_string(require(rec, "video_id"), "video_id");
    g.frame_index = read_int(require(rec, "frame_index"), "frame_index");
    g.bbox = read_bbox(require(rec, "bbox"));
    g.class_id = read_int(require(rec, "class_id"), "class_id");
    g.track_id = read_int(require(rec, "track_id"), "track_id");
    if (g.class_id < 0 || (catalog.size() > 0 && static_cast<std::size_t>(g.class_id) >= catalog.size()))
      throw DataError("class_id " + std::to_string(g.class_id) + " outside catalog range");
    if (!seen.insert({g.video_id, g.frame_index, g.track_id}).second)
      throw DataError("duplicate (video, frame, track) annotation");
    out[g.video_id].push_back(std::move(g));
  });
  return out;
}

void save_ground_truth(const fs::path& path, const GroundTruthSet& gt) {
  std::vector<Json> records;
  for (const auto& [vid, boxes] : gt)
    for (const auto& g : boxes)
      records.push_back({{"video_id", vid},
                         {"frame_index", g.frame_index},
                         {"track_id", g.track_id},
                         {"class_id", g.class_id},
                         {"bbox", write_bbox(g.bbox)}});
  write_lines(path, records);
}

FeatureTable load_features(const fs::path& path) {
  FeatureTable out;
  for_each_record(path, [&](const Json& rec, std::size_t) {
    const auto vid = read_string(require(rec, "video_id"), "video_id");
    const int f = read_int(require(rec, "frame_index"), "frame_index");
    const int t = read_int(require(rec, "track_id"), "track_id");
    if (!out.emplace(FeatureKey{vid, f, t}, real_array(require(rec, "feature"), "feature")).second)
      throw DataError("duplicate feature record");
  });
  return out;
}

void save_features(const fs::path& path, const FeatureTable& features) {
  std::vector<Json> records;
  for (const auto& [key, f] : features)
    records.push_back({{"video_id", std::get<0>(key)},
                       {"frame_index", std::get<1>(key)},
                       {"track_id", std::get<2>(key)},
                       {"feature", rounded(f)}});
  write_lines(path, records);
}

VideoInfoMap load_video_info(const fs::path& path) {
  const Json doc = read_json(path);
  if (!doc.is_object()) throw DataError(path.string() + ": video metadata must be a JSON object");
  VideoInfoMap out;
  for (const auto& [vid, v] : doc.items()) {
    VideoInfo info;
    try {
      if (v.is_number()) {
        info.fps = v.get<double>();
      } else {
        info.fps = v.value("fps", info.fps);
        info.width = v.value("width", info.width);
        info.height = v.value("height", info.height);
        info.frame_count = v.value("frames", 0);
      }
    } catch (const Json::exception& e) {
      throw DataError(path.string() + ": bad entry for video " + vid + ": " + e.what());
    }
    if (!(info.fps > 0.0) || !(info.width > 0.0) || !(info.height > 0.0))
      throw DataError(path.string() + ": fps and frame size must be positive for video " + vid);
    out[vid] = info;
  }
  return out;
}

void save_video_info(const fs::path& path, const VideoInfoMap& videos) {
  Json doc = Json::object();
  for (const auto& [vid, v] : videos)
    doc[vid] = {{"fps", v.fps}, {"width", v.width}, {"height", v.height}, {"frames", v.frame_count}};
  write_json(path, doc);
}

std::vector<Triplet> load_triplets(const fs::path& path) {
  std::vector<Triplet> out;
  for_each_record(path, [&](const Json& rec, std::size_t) {
    out.push_back({sample_from_json(require(rec, "anchor")), sample_from_json(require(rec, "positive")),
                   sample_from_json(require(rec, "negative"))});
  });
  return out;
}

void save_triplets(const fs::path& path, const std::vector<Triplet>& triplets) {
  std::vector<Json> records;
  records.reserve(triplets.size());
  for (const auto& t : triplets)
    records.push_back({{"anchor", sample_to_json(t.anchor)},
                       {"positive", sample_to_json(t.positive)},
                       {"negative", sample_to_json(t.negative)}});
  write_lines(path, records);
}

std::vector<LinkPair> load_pairs(const fs::path& path) {
  std::vector<LinkPair> out;
  for_each_record(path, [&](const Json& rec, std::size_t) {
    LinkPair p{real_array(require(rec, "features"), "features"), read_int(require(rec, "label"), "label")};
    if (p.label != 0 && p.label != 1) throw DataError("label must be 0 or 1");
    out.push_back(std::move(p));
  });
  return out;
}

void save_pairs(const fs::path& path, const std::vector<LinkPair>& pairs) {
  std::vector<Json> records;
  records.reserve(pairs.size());
  for (const auto& p : pairs) records.push_back({{"features", rounded(p.features)}, {"label", p.label}});
  write_lines(path, records);
}

Json to_json(const EmbeddingModel& model, const Json& metadata) {
  return {{"kind", "embedding"},
          {"version", kModelFormatVersion},
          {"dimensions", {{"input", model.input_dim()}, {"output", model.output_dim()}}},
          {"weights", exact(model.weights())},
          {"bias", exact(model.bias())},
          {"metadata", metadata}};
}

Json to_json(const LinkScorerModel& model, const Json& metadata) {
  return {{"kind", "linkscorer"},
          {"version", kModelFormatVersion},
          {"dimensions", {{"features", model.feature_count()}}},
          {"uses_appearance", model.uses_appearance},
          {"weights", exact(model.weights)},
          {"bias", model.bias},
          {"feature_means", exact(model.feature_means)},
          {"feature_stds", exact(model.feature_stds)},
          {"metadata", metadata}};
}

EmbeddingModel embedding_from_json(const Json& doc) {
  check_version(doc, "embedding");
  try {
    const auto& dims = require(doc, "dimensions");
    return EmbeddingModel(dims.at("input").get<std::size_t>(), dims.at("output").get<std::size_t>(),
                          real_array(require(doc, "weights"), "weights"), real_array(require(doc, "bias"), "bias"));
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed embedding model: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("malformed embedding model: ") + e.what());
  }
}

LinkScorerModel link_scorer_from_json(const Json& doc) {
  check_version(doc, "linkscorer");
  LinkScorerModel m;
  try {
    m.uses_appearance = require(doc, "uses_appearance").get<bool>();
    const auto declared = require(doc, "dimensions").at("features").get<std::size_t>();
    if (declared != m.feature_count()) throw DataError("declared feature count disagrees with uses_appearance");
    m.weights = real_array(require(doc, "weights"), "weights");
    m.bias = require(doc, "bias").get<double>();
    m.feature_means = real_array(require(doc, "feature_means"), "feature_means");
    m.feature_stds = real_array(require(doc, "feature_stds"), "feature_stds");
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed link scorer model: ") + e.what());
  }
  m.validate();
  return m;
}

void save_model(const fs::path& path, const EmbeddingModel& model, const Json& metadata) {
  write_json(path, to_json(model, metadata));
}

void save_model(const fs::path& path, const LinkScorerModel& model, const Json& metadata) {
  write_json(path, to_json(model, metadata));
}

EmbeddingModel load_embedding_model(const fs::path& path) {
  try {
    return embedding_from_json(read_json(path));
  } catch (const DataError& e) {
    const std::string what = e.what();
    if (what.find(path.string()) != std::string::npos) throw;
    throw DataError(path.string() + ": " + what);
  }
}

LinkScorerModel load_link_scorer(const fs::path& path) {
  try {
    return link_scorer_from_json(read_json(path));
  } catch (const DataError& e) {
    const std::string what = e.what();
    if (what.find(path.string()) != std::string::npos) throw;
    throw DataError(path.string() + ": " + what);
  }
}

void save_refined(const fs::path& path, const DetectionSet& detections, const TubeletSet& tubelets) {
  std::vector<Json> records;
  for (const auto& [vid, frames] : detections) {
    std::map<std::pair<int, DetectionId>, std::pair<const Tubelet*, std::size_t>> where;
    if (auto it = tubelets.find(vid); it != tubelets.end())
      for (const auto& t : it->second)
        for (std::size_t i = 0; i < t.members.size(); ++i)
          where[{t.members[i].frame_index, t.members[i].detection_id}] = {&t, i};
    for (const auto& [f, list] : frames)
      for (const auto& d : list) {
        const auto it = where.find({f, d.detection_id});
        if (it == where.end())
          throw DataError("detection " + std::to_string(d.detection_id) + " of video " + vid + " has no tubelet");
        const Tubelet& t = *it->second.first;
        const BBox& box = t.smoothed_boxes ? (*t.smoothed_boxes)[it->second.second] : d.bbox;
        const ClassConfidences& cc = t.refined_confidences ? *t.refined_confidences : d.confidences;
        records.push_back({{"video_id", vid},
                           {"frame_index", f},
                           {"detection_id", d.detection_id},
                           {"tubelet_id", t.tubelet_id},
                           {"bbox", write_bbox(box)},
                           {"scores", rounded(cc)},
                           {"orig", {{"bbox", write_bbox(d.bbox)}, {"scores", rounded(d.confidences)}}}});
      }
  }
  write_lines(path, records);
}

RefinedData load_refined(const fs::path& path) {
  RefinedData out;
  struct Row {
    int frame;
    DetectionId id;
    BBox box;
    ClassConfidences scores;
  };
  std::map<std::string, std::map<TubeletId, std::vector<Row>>> grouped;
  for_each_record(path, [&](const Json& rec, std::size_t) {
    Detection d;
    d.video_id = read_string(require(rec, "video_id"), "video_id");
    d.frame_index = read_int(require(rec, "frame_index"), "frame_index");
    d.detection_id = require(rec, "detection_id").get<DetectionId>();
    const auto& orig = require(rec, "orig");
    d.bbox = read_bbox(require(orig, "bbox"));
    d.confidences = read_scores(require(orig, "scores"));
    const auto tid = require(rec, "tubelet_id").get<TubeletId>();
    grouped[d.video_id][tid].push_back(
        {d.frame_index, d.detection_id, read_bbox(require(rec, "bbox")), read_scores(require(rec, "scores"))});
    out.original[d.video_id][d.frame_index].push_back(std::move(d));
  });
  for (auto& [vid, frames] : out.original)
    for (auto& [f, list] : frames)
      std::sort(list.begin(), list.end(),
                [](const Detection& a, const Detection& b) { return a.detection_id < b.detection_id; });
  for (auto& [vid, by_tubelet] : grouped) {
    auto& list = out.tubelets[vid];
    for (auto& [tid, rows] : by_tubelet) {
      std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.frame < b.frame; });
      Tubelet t;
      t.tubelet_id = tid;
      t.refined_confidences = rows.front().scores;
      t.smoothed_boxes.emplace();
      for (const auto& r : rows) {
        t.members.push_back({r.frame, r.id});
        t.smoothed_boxes->push_back(r.box);
      }
      list.push_back(std::move(t));
    }
  }
  return out;
}

Json to_json(const EvalReport& report) {
  Json per_class = Json::array();
  for (const auto& c : report.per_class)
    per_class.push_back({{"class", c.name},
                         {"ap", optional_real(c.all)},
                         {"ap_slow", optional_real(c.slow)},
                         {"ap_medium", optional_real(c.medium)},
                         {"ap_fast", optional_real(c.fast)}});
  Json doc{{"map", round9(report.map_all)},
           {"map_slow", optional_real(report.map_slow)},
           {"map_medium", optional_real(report.map_medium)},
           {"map_fast", optional_real(report.map_fast)},
           {"per_class", per_class},
           {"counts",
            {{"videos", report.counts.videos},
             {"gt_boxes", report.counts.gt_boxes},
             {"detections", report.counts.detections}}}};
  if (report.postprocess_ms_per_frame) doc["postprocess_ms_per_frame"] = round9(*report.postprocess_ms_per_frame);
  return doc;
}

void write_json(const fs::path& path, const Json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

Json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError(path.string() + ": malformed JSON: " + e.what());
  }
}

}  // namespace tubelink::io
