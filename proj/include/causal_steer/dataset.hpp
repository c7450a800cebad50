#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causal_steer/causal_graph.hpp"
#include "causal_steer/media.hpp"

namespace causal_steer {

/// The four counterfactual labels every dataset item carries.
const std::vector<std::string>& intervention_labels();

struct IngestInfo {
  int resize = kDefaultResolution;
  std::size_t take = kDefaultClipLength;
  std::string interpolation = "bilinear";

  bool operator==(const IngestInfo&) const = default;
};

struct DatasetItem {
  std::string id;
  /// As written in the manifest (relative to the manifest's directory unless absolute).
  std::string frames_dir;
  std::string factual_prompt;
  /// label -> counterfactual prompt; nullopt is the explicit "absent" marker.
  std::map<std::string, std::optional<std::string>> counterfactuals;
  /// Optional per-frame content hashes, checked at load.
  std::vector<std::string> frame_sha256;
  /// Loaded frames (not serialized).
  VideoClip video;
};

struct Manifest {
  std::string version;
  std::string graph_config;
  std::vector<DatasetItem> items;
  std::optional<IngestInfo> ingest;
  /// Directory relative paths are resolved against.
  std::filesystem::path base_dir;

  [[nodiscard]] const DatasetItem& item(std::string_view id) const;
  [[nodiscard]] std::filesystem::path resolve(const std::string& p) const;
  /// The graph named by graph_config ("builtin:celebv" or a file path).
  [[nodiscard]] CausalGraph graph() const;
};

/// Parses and fully validates a manifest, loading every item's frames.
/// Errors: config_error (no such file), parse_error, missing_frame, duplicate_id,
/// empty_manifest.
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json to_json(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Takes the first `take` images of `src_dir` (lexicographic order), resizes
/// them to resize x resize with bilinear interpolation, and writes PNGs to
/// out_dir. Per-frame attribute metadata is carried over.
/// Errors: insufficient_frames, unreadable_image.
VideoClip ingest_frames(const std::filesystem::path& src_dir, const std::filesystem::path& out_dir,
                        int resize = kDefaultResolution, std::size_t take = kDefaultClipLength);

}  // namespace causal_steer
