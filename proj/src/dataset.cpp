#include "causal_steer/dataset.hpp"

#include <algorithm>
#include <set>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "causal_steer/error.hpp"
#include "causal_steer/interventions.hpp"

namespace causal_steer {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& intervention_labels() {
  static const std::vector<std::string> labels = {"age", "gender", "beard", "bald"};
  return labels;
}

namespace {

constexpr std::string_view kBuiltinGraph = "builtin:celebv";

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::parse_error, where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::parse_error, where + ": unknown field '" + key + "'");
    }
  }
}

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw Error(ErrorCode::parse_error, where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::parse_error, where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

const DatasetItem& Manifest::item(std::string_view id) const {
  for (const auto& i : items) {
    if (i.id == id) return i;
  }
  throw Error(ErrorCode::config_error, "no dataset item '" + std::string(id) + "'");
}

fs::path Manifest::resolve(const std::string& p) const {
  fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

CausalGraph Manifest::graph() const {
  if (graph_config.empty() || graph_config == kBuiltinGraph) return CausalGraph::celebv();
  return CausalGraph::load(resolve(graph_config));
}

Manifest parse_manifest(const json& j, const fs::path& base_dir) {
  reject_unknown(j, {"version", "graph_config", "items", "ingest"}, "manifest");
  Manifest m;
  m.base_dir = base_dir;
  m.version = field<std::string>(j, "version", "manifest");
  m.graph_config = field<std::string>(j, "graph_config", "manifest");
  if (j.contains("ingest")) {
    const auto& g = j.at("ingest");
    reject_unknown(g, {"resize", "take", "interpolation"}, "manifest.ingest");
    IngestInfo info;
    info.resize = field<int>(g, "resize", "manifest.ingest");
    info.take = field<std::size_t>(g, "take", "manifest.ingest");
    info.interpolation = field<std::string>(g, "interpolation", "manifest.ingest");
    if (info.resize <= 0 || info.take == 0) throw Error(ErrorCode::parse_error, "manifest.ingest: sizes must be positive");
    m.ingest = info;
  }
  if (!j.contains("items") || !j.at("items").is_array()) {
    throw Error(ErrorCode::parse_error, "manifest: 'items' must be an array");
  }
  if (j.at("items").empty()) throw Error(ErrorCode::empty_manifest, "manifest lists no items");

  const auto graph = m.graph();
  std::set<std::string> seen;
  for (const auto& ji : j.at("items")) {
    const std::string where = "manifest item " + std::to_string(m.items.size());
    reject_unknown(ji, {"id", "frames_dir", "factual_prompt", "counterfactuals", "frame_sha256"}, where);
    DatasetItem item;
    item.id = field<std::string>(ji, "id", where);
    if (item.id.empty()) throw Error(ErrorCode::parse_error, where + ": empty id");
    if (!seen.insert(item.id).second) throw Error(ErrorCode::duplicate_id, "duplicate item id '" + item.id + "'");
    item.frames_dir = field<std::string>(ji, "frames_dir", where);
    item.factual_prompt = field<std::string>(ji, "factual_prompt", where);
    if (ji.contains("frame_sha256")) item.frame_sha256 = field<std::vector<std::string>>(ji, "frame_sha256", where);

    const auto cf = ji.contains("counterfactuals") ? ji.at("counterfactuals") : json();
    if (!cf.is_object()) throw Error(ErrorCode::parse_error, where + ": 'counterfactuals' must be an object");
    for (const auto& [label, value] : cf.items()) {
      const auto& labels = intervention_labels();
      if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
        throw Error(ErrorCode::parse_error, where + ": unknown counterfactual label '" + label + "'");
      }
      if (value.is_null()) {
        item.counterfactuals[label] = std::nullopt;
      } else if (value.is_string() && !value.get<std::string>().empty()) {
        item.counterfactuals[label] = value.get<std::string>();
      } else {
        throw Error(ErrorCode::parse_error, where + ": counterfactual '" + label + "' must be text or null");
      }
    }
    for (const auto& label : intervention_labels()) {
      if (!item.counterfactuals.contains(label)) {
        throw Error(ErrorCode::parse_error,
                    where + ": counterfactual '" + label + "' missing (use null to mark it absent)");
      }
    }
    // Prompts must parse under the graph; ambiguity surfaces here, not mid-sweep.
    for (const auto& [label, prompt] : item.counterfactuals) {
      if (prompt) (void)extract_interventions({item.factual_prompt, *prompt}, graph);
    }

    const auto dims = m.ingest.value_or(IngestInfo{});
    const auto dir = m.resolve(item.frames_dir);
    for (std::size_t i = 0; i < dims.take; ++i) {
      const auto path = dir / frame_file_name(i);
      if (!fs::is_regular_file(path)) throw Error(ErrorCode::missing_frame, "missing frame " + path.string());
    }
    item.video = load_clip(item.id, dir);
    if (item.video.size() != dims.take) {
      throw Error(ErrorCode::parse_error, where + ": expected " + std::to_string(dims.take) + " frames in " +
                                              dir.string() + ", found " + std::to_string(item.video.size()));
    }
    for (const auto& f : item.video.frames) {
      if (f.width != dims.resize || f.height != dims.resize) {
        throw Error(ErrorCode::parse_error, f.image_ref.string() + " is " + std::to_string(f.width) + "x" +
                                                std::to_string(f.height) + ", expected " +
                                                std::to_string(dims.resize) + " square");
      }
    }
    if (!item.frame_sha256.empty()) {
      if (item.frame_sha256.size() != item.video.size()) {
        throw Error(ErrorCode::parse_error, where + ": frame_sha256 length does not match the frame count");
      }
      for (std::size_t i = 0; i < item.video.size(); ++i) {
        if (item.video.frames[i].sha256 != item.frame_sha256[i]) {
          throw Error(ErrorCode::parse_error, "content hash mismatch for " + item.video.frames[i].image_ref.string());
        }
      }
    }
    m.items.push_back(std::move(item));
  }
  return m;
}

Manifest load_manifest(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::config_error, "manifest " + path.string() + " not found");
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
  return parse_manifest(j, fs::absolute(path).parent_path());
}

json to_json(const Manifest& m) {
  json items = json::array();
  for (const auto& i : m.items) {
    json cf = json::object();
    for (const auto& [label, prompt] : i.counterfactuals) cf[label] = prompt ? json(*prompt) : json(nullptr);
    json ji = {{"id", i.id}, {"frames_dir", i.frames_dir}, {"factual_prompt", i.factual_prompt}, {"counterfactuals", cf}};
    if (!i.frame_sha256.empty()) ji["frame_sha256"] = i.frame_sha256;
    items.push_back(std::move(ji));
  }
  json out = {{"version", m.version}, {"graph_config", m.graph_config}, {"items", items}};
  if (m.ingest) {
    out["ingest"] = {{"resize", m.ingest->resize}, {"take", m.ingest->take}, {"interpolation", m.ingest->interpolation}};
  }
  return out;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  write_file_atomic(path, to_json(manifest).dump(2) + "\n");
}

VideoClip ingest_frames(const fs::path& src_dir, const fs::path& out_dir, int resize, std::size_t take) {
  if (resize <= 0 || take == 0) throw Error(ErrorCode::config_error, "resize and take must be positive");
  if (!fs::is_directory(src_dir)) {
    throw Error(ErrorCode::insufficient_frames, "source directory " + src_dir.string() + " does not exist");
  }
  static const std::set<std::string> extensions = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".webp"};
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(src_dir)) {
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (entry.is_regular_file() && extensions.contains(ext)) files.push_back(entry.path());
  }
  if (files.size() < take) {
    throw Error(ErrorCode::insufficient_frames, src_dir.string() + " has " + std::to_string(files.size()) +
                                                    " frames, " + std::to_string(take) + " requested");
  }
  std::sort(files.begin(), files.end());
  files.resize(take);

  std::vector<std::string> frames;
  for (const auto& f : files) {
    const auto bytes = read_file(f);
    cv::Mat image = cv::imdecode(cv::Mat(1, static_cast<int>(bytes.size()), CV_8UC1,
                                         const_cast<char*>(bytes.data())),
                                 cv::IMREAD_COLOR);
    if (image.empty()) throw Error(ErrorCode::unreadable_image, "cannot decode " + f.string());
    cv::Mat resized;
    if (image.cols == resize && image.rows == resize) {
      resized = image;
    } else {
      cv::resize(image, resized, cv::Size(resize, resize), 0, 0, cv::INTER_LINEAR);
    }
    std::vector<unsigned char> encoded;
    if (!cv::imencode(".png", resized, encoded)) throw Error(ErrorCode::frame_io, "cannot encode " + f.string());
    std::string png_bytes(encoded.begin(), encoded.end());
    if (png::is_png(bytes)) {
      if (auto meta = png::text_chunk(bytes, kMetadataKeyword)) {
        png_bytes = png::with_text_chunk(png_bytes, kMetadataKeyword, *meta);
      }
    }
    frames.push_back(std::move(png_bytes));
  }
  return write_clip(out_dir.filename().string(), out_dir, frames);
}

}  // namespace causal_steer
