#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "tubelink/core.hpp"
#include "tubelink/dataset.hpp"
#include "tubelink/embed.hpp"
#include "tubelink/eval.hpp"
#include "tubelink/linkscore.hpp"

namespace tubelink::io {

using Json = nlohmann::json;
namespace fs = std::filesystem;

/// Model file format version; bumped on incompatible schema changes.
inline constexpr int kModelFormatVersion = 1;

/// Data records store reals with 9 significant digits.
double round9(double v);

struct LoadStats {
  std::size_t kept = 0;
  std::size_t dropped = 0;
};

/// Reads a class catalog: a JSON array of names, or one name per line.
ClassCatalog load_catalog(const fs::path& path);
void save_catalog(const fs::path& path, const ClassCatalog& catalog);

/// Reads JSON-lines detections. Records whose max score is below
/// `conf_threshold` are dropped. An empty catalog is inferred from the first
/// record's score length. Missing detection ids take the record's ordinal
/// within its video. Fails fast on the first malformed line.
DetectionSet load_detections(const fs::path& path, ClassCatalog& catalog, double conf_threshold,
                             LoadStats* stats = nullptr);
void save_detections(const fs::path& path, const DetectionSet& detections);

GroundTruthSet load_ground_truth(const fs::path& path, const ClassCatalog& catalog);
void save_ground_truth(const fs::path& path, const GroundTruthSet& gt);

FeatureTable load_features(const fs::path& path);
void save_features(const fs::path& path, const FeatureTable& features);

/// `{"video": {"fps":.., "width":.., "height":.., "frames":..}}`; a bare
/// number is read as the fps.
VideoInfoMap load_video_info(const fs::path& path);
void save_video_info(const fs::path& path, const VideoInfoMap& videos);

std::vector<Triplet> load_triplets(const fs::path& path);
void save_triplets(const fs::path& path, const std::vector<Triplet>& triplets);

std::vector<LinkPair> load_pairs(const fs::path& path);
void save_pairs(const fs::path& path, const std::vector<LinkPair>& pairs);

Json to_json(const EmbeddingModel& model, const Json& metadata = Json::object());
Json to_json(const LinkScorerModel& model, const Json& metadata = Json::object());
EmbeddingModel embedding_from_json(const Json& doc);
LinkScorerModel link_scorer_from_json(const Json& doc);

void save_model(const fs::path& path, const EmbeddingModel& model, const Json& metadata = Json::object());
void save_model(const fs::path& path, const LinkScorerModel& model, const Json& metadata = Json::object());
EmbeddingModel load_embedding_model(const fs::path& path);
LinkScorerModel load_link_scorer(const fs::path& path);

using TubeletSet = std::map<std::string, std::vector<Tubelet>>;

/// One record per detection: refined scores and smoothed box replace the
/// originals, which move under "orig"; "tubelet_id" names the track.
void save_refined(const fs::path& path, const DetectionSet& detections, const TubeletSet& tubelets);

struct RefinedData {
  DetectionSet original;  // detections as they were before refinement
  TubeletSet tubelets;
};
RefinedData load_refined(const fs::path& path);

Json to_json(const EvalReport& report);

/// Writes `doc` pretty-printed with a trailing newline.
void write_json(const fs::path& path, const Json& doc);
Json read_json(const fs::path& path);

}  // namespace tubelink::io
