#include <doctest.h>

#include <opencv2/imgcodecs.hpp>

#include "causal_steer/dataset.hpp"
#include "causal_steer/error.hpp"
#include "support.hpp"

using namespace causal_steer;
using nlohmann::json;
using test_support::error_of;
using test_support::TempDir;

namespace {

json fixture_manifest() { return json::parse(read_file(test_support::fixtures() / "manifest.json")); }

std::optional<ErrorCode> load_error(const json& doc) {
  return error_of([&] { (void)parse_manifest(doc, test_support::fixtures()); });
}

}  // namespace

TEST_CASE("fixture manifest loads") {
  auto m = load_manifest(test_support::fixtures() / "manifest.json");
  REQUIRE(m.items.size() == 2);
  CHECK(m.items[0].id == "item-001");
  CHECK(m.items[0].video.size() == 24);
  CHECK(m.items[0].video.frames[0].width == 512);
  CHECK(m.items[1].counterfactuals.at("gender") == "She is young.");
  CHECK(m.graph() == CausalGraph::celebv());
}

TEST_CASE("manifest validation") {
  auto doc = fixture_manifest();
  doc["items"] = json::array();
  CHECK(load_error(doc) == ErrorCode::empty_manifest);

  doc = fixture_manifest();
  doc["items"][1]["id"] = "item-001";
  CHECK(load_error(doc) == ErrorCode::duplicate_id);

  doc = fixture_manifest();
  doc["items"][0]["frames_dir"] = "data/nowhere/frames";
  try {
    (void)parse_manifest(doc, test_support::fixtures());
    FAIL("expected missing-frame");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_frame);
    CHECK(std::string(e.what()).find("data/nowhere/frames/0000.png") != std::string::npos);
  }

  doc = fixture_manifest();
  doc["owner"] = "me";
  CHECK(load_error(doc) == ErrorCode::parse_error);

  doc = fixture_manifest();
  doc["items"][0]["counterfactuals"].erase("bald");
  CHECK(load_error(doc) == ErrorCode::parse_error);

  doc = fixture_manifest();
  doc["items"][0]["counterfactuals"]["bald"] = nullptr;
  auto m = parse_manifest(doc, test_support::fixtures());
  CHECK_FALSE(m.items[0].counterfactuals.at("bald").has_value());

  doc = fixture_manifest();
  doc["items"][0]["counterfactuals"]["height"] = "A tall woman";
  CHECK(load_error(doc) == ErrorCode::parse_error);

  doc = fixture_manifest();
  doc["items"][0]["frame_sha256"] = std::vector<std::string>(24, std::string(64, '0'));
  CHECK(load_error(doc) == ErrorCode::parse_error);

  CHECK(error_of([] { (void)load_manifest("/nonexistent/manifest.json"); }) == ErrorCode::config_error);
}

TEST_CASE("manifest round trip") {
  auto m = load_manifest(test_support::fixtures() / "manifest.json");
  for (auto& i : m.items) {
    for (const auto& f : i.video.frames) i.frame_sha256.push_back(f.sha256);
  }
  m.ingest = IngestInfo{};
  TempDir dir;
  const auto copy = dir / "manifest.json";
  auto doc = to_json(m);
  for (auto& i : doc["items"]) {
    i["frames_dir"] = (test_support::fixtures() / i["frames_dir"].get<std::string>()).string();
  }
  doc["graph_config"] = (test_support::fixtures() / "celebv_graph.json").string();
  write_file_atomic(copy, doc.dump(2));
  auto again = load_manifest(copy);
  CHECK(to_json(again) == doc);
  write_manifest(again, dir / "second.json");
  CHECK(json::parse(read_file(dir / "second.json")) == doc);
}

TEST_CASE("ingest_frames resizes and keeps metadata") {
  TempDir dir;
  const auto src = dir / "src";
  std::filesystem::create_directories(src);
  cv::Mat img(100, 120, CV_8UC3, cv::Scalar(10, 200, 30));
  for (int i = 0; i < 30; ++i) {
    std::vector<unsigned char> buf;
    cv::imencode(".png", img, buf);
    std::string bytes(buf.begin(), buf.end());
    bytes = with_frame_metadata(bytes, {{"scene", "lab"}, {"i", i}});
    write_file_atomic(src / ("frame_" + std::string(i < 10 ? "0" : "") + std::to_string(i) + ".png"), bytes);
  }
  auto clip = ingest_frames(src, dir / "out", 64, 24);
  CHECK(clip.size() == 24);
  CHECK(clip.frames[0].width == 64);
  CHECK(clip.frames[23].height == 64);
  CHECK(frame_metadata(read_file(clip.frames[5].image_ref))["i"] == 5);

  auto again = ingest_frames(src, dir / "out", 64, 24);
  CHECK(again.content_id() == clip.content_id());

  auto same = ingest_frames(dir / "out", dir / "stable", 64, 24);
  auto same2 = ingest_frames(dir / "out", dir / "stable", 64, 24);
  CHECK(same.content_id() == same2.content_id());

  CHECK(error_of([&] { (void)ingest_frames(src, dir / "x", 64, 31); }) == ErrorCode::insufficient_frames);
  write_file_atomic(src / "zzz.png", "garbage");
  CHECK(error_of([&] { (void)ingest_frames(src, dir / "y", 64, 31); }) == ErrorCode::unreadable_image);
}
