#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace causal_steer {

inline constexpr int kDefaultResolution = 512;
inline constexpr std::size_t kDefaultClipLength = 24;

/// One frame image on disk.
struct Frame {
  std::size_t index = 0;
  std::filesystem::path image_ref;
  int width = 0;
  int height = 0;
  std::string sha256;
};

/// Ordered frames with contiguous indices from 0.
struct VideoClip {
  std::string id;
  std::vector<Frame> frames;

  [[nodiscard]] bool empty() const noexcept { return frames.empty(); }
  [[nodiscard]] std::size_t size() const noexcept { return frames.size(); }
  /// Digest over the ordered frame digests.
  [[nodiscard]] std::string content_id() const;
};

std::string sha256_hex(std::string_view bytes);
std::string base64_encode(std::string_view bytes);
/// Throws Error(parse_error) on malformed input.
std::string base64_decode(std::string_view encoded);

/// Minimal PNG chunk access. Pixel data is never touched.
namespace png {

struct Info {
  int width = 0;
  int height = 0;
};

bool is_png(std::string_view bytes);
/// Throws Error(unreadable_image) when the IHDR chunk cannot be read.
Info info(std::string_view bytes);
std::optional<std::string> text_chunk(std::string_view bytes, std::string_view keyword);
/// Returns a copy with the tEXt chunk for `keyword` replaced, or inserted
/// right after IHDR when missing.
std::string with_text_chunk(std::string_view bytes, std::string_view keyword,
                            std::string_view value);

}  // namespace png

/// tEXt keyword holding per-frame attribute metadata (a JSON object). The mock
/// services "render" attributes there instead of into pixels.
inline constexpr std::string_view kMetadataKeyword = "causal-steer";

nlohmann::json frame_metadata(std::string_view png_bytes);
std::string with_frame_metadata(std::string_view png_bytes, const nlohmann::json& metadata);

/// Throws Error(frame_io).
std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// "0007.png"
std::string frame_file_name(std::size_t index);

Frame load_frame(const std::filesystem::path& path, std::size_t index);
/// Loads every *.png in `dir` in lexicographic order. Throws Error(missing_frame)
/// if the directory is missing.
VideoClip load_clip(std::string id, const std::filesystem::path& dir);
/// Writes `png_frames` as dir/NNNN.png and returns the resulting clip.
VideoClip write_clip(std::string id, const std::filesystem::path& dir,
                     const std::vector<std::string>& png_frames);
std::vector<std::string> read_clip_bytes(const VideoClip& clip);

}  // namespace causal_steer
