#pragma once

#include <atomic>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "causal_steer/error.hpp"
#include "causal_steer/media.hpp"
#include "causal_steer/ports.hpp"

namespace test_support {

namespace fs = std::filesystem;
using namespace causal_steer;

inline fs::path source_dir() { return fs::path(CAUSAL_STEER_SOURCE_DIR); }
inline fs::path fixtures() { return source_dir() / "fixtures"; }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("causal-steer-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

/// A 512x512 fixture PNG to build test frames from.
inline const std::string& base_png() {
  static const std::string bytes = read_file(fixtures() / "data" / "item-001" / "frames" / "0000.png");
  return bytes;
}

inline std::string png_with(const nlohmann::json& metadata) { return with_frame_metadata(base_png(), metadata); }

inline VideoClip make_clip(const fs::path& dir, std::size_t n, const nlohmann::json& metadata,
                           const std::string& id = "clip") {
  std::vector<std::string> frames;
  for (std::size_t i = 0; i < n; ++i) {
    auto meta = metadata;
    meta["frame"] = static_cast<int>(i);  // distinct bytes per frame
    frames.push_back(png_with(meta));
  }
  return write_clip(id, dir, frames);
}

/// Returns the request frames unchanged.
class IdentityEditor final : public VideoEditorPort {
 public:
  protocol::EditResponse edit(const protocol::EditRequest& r) override {
    ++calls;
    return {r.frames};
  }
  std::atomic<int> calls{0};
};

/// Replies from a queue; an empty queue repeats `fallback`.
class ScriptedText final : public VlmPort, public LlmPort {
 public:
  explicit ScriptedText(std::deque<std::string> replies = {}, std::string fallback = "ok")
      : replies_(std::move(replies)), fallback_(std::move(fallback)) {}

  protocol::TextResponse query(const protocol::VlmRequest& r) override {
    last_vlm = r;
    return {next()};
  }
  protocol::TextResponse complete(const protocol::LlmRequest& r) override {
    last_llm = r;
    return {next()};
  }

  std::atomic<int> calls{0};
  protocol::VlmRequest last_vlm;
  protocol::LlmRequest last_llm;

 private:
  std::string next() {
    std::lock_guard lock(mutex_);
    ++calls;
    if (replies_.empty()) return fallback_;
    auto s = std::move(replies_.front());
    replies_.pop_front();
    return s;
  }
  std::mutex mutex_;
  std::deque<std::string> replies_;
  std::string fallback_;
};

/// Forwards to an inner port and counts calls.
struct CountingPorts {
  struct Editor final : VideoEditorPort {
    std::shared_ptr<VideoEditorPort> inner;
    std::atomic<int> calls{0};
    protocol::EditResponse edit(const protocol::EditRequest& r) override { ++calls; return inner->edit(r); }
  };
  struct Vlm final : VlmPort {
    std::shared_ptr<VlmPort> inner;
    std::atomic<int> calls{0};
    protocol::TextResponse query(const protocol::VlmRequest& r) override { ++calls; return inner->query(r); }
  };
  struct Llm final : LlmPort {
    std::shared_ptr<LlmPort> inner;
    std::atomic<int> gradient_calls{0};
    std::atomic<int> update_calls{0};
    protocol::TextResponse complete(const protocol::LlmRequest& r) override {
      if (r.prompt.rfind("Below are the criticisms on ", 0) == 0) {
        ++update_calls;
      } else {
        ++gradient_calls;
      }
      return inner->complete(r);
    }
  };

  explicit CountingPorts(const Ports& inner) {
    editor->inner = inner.editor;
    vlm->inner = inner.vlm;
    llm->inner = inner.llm;
    ports = Ports{editor, vlm, llm, inner.embedder};
  }

  std::shared_ptr<Editor> editor = std::make_shared<Editor>();
  std::shared_ptr<Vlm> vlm = std::make_shared<Vlm>();
  std::shared_ptr<Llm> llm = std::make_shared<Llm>();
  Ports ports;
};

/// Runs `fn` and returns the ErrorCode it throws; fails the caller's check
/// by returning nullopt when nothing is thrown.
template <typename Fn>
std::optional<ErrorCode> error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace test_support
