#include "causal_steer/media.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>
#include <zlib.h>

#include "causal_steer/error.hpp"

namespace causal_steer {

namespace fs = std::filesystem;

std::string VideoClip::content_id() const {
  std::string joined;
  for (const auto& f : frames) joined += f.sha256;
  return sha256_hex(joined);
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()),
                          static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view encoded) {
  if (encoded.size() % 4 != 0) throw Error(ErrorCode::parse_error, "base64 length not a multiple of 4");
  if (encoded.empty()) return {};
  std::string out(3 * encoded.size() / 4, '\0');
  int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(encoded.data()),
                          static_cast<int>(encoded.size()));
  if (n < 0) throw Error(ErrorCode::parse_error, "malformed base64 payload");
  std::size_t pad = 0;
  if (encoded.back() == '=') ++pad;
  if (encoded.size() > 1 && encoded[encoded.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

namespace png {

namespace {

constexpr std::array<unsigned char, 8> kSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

struct Chunk {
  std::size_t offset;  // start of length field
  std::size_t length;  // data length
  std::string_view type;
  std::string_view data;
  [[nodiscard]] std::size_t end() const { return offset + 12 + length; }
};

std::uint32_t read_be32(std::string_view bytes, std::size_t at) {
  auto b = [&](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + i])); };
  return (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
}

void append_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

std::vector<Chunk> chunks(std::string_view bytes) {
  if (!is_png(bytes)) throw Error(ErrorCode::unreadable_image, "not a PNG image");
  std::vector<Chunk> out;
  std::size_t pos = kSignature.size();
  while (pos + 12 <= bytes.size()) {
    std::size_t len = read_be32(bytes, pos);
    if (pos + 12 + len > bytes.size()) throw Error(ErrorCode::unreadable_image, "truncated PNG chunk");
    Chunk c{pos, len, bytes.substr(pos + 4, 4), bytes.substr(pos + 8, len)};
    out.push_back(c);
    pos = c.end();
    if (c.type == "IEND") break;
  }
  if (out.empty() || out.front().type != "IHDR") {
    throw Error(ErrorCode::unreadable_image, "PNG without IHDR");
  }
  return out;
}

std::string encode_chunk(std::string_view type, std::string_view data) {
  std::string out;
  append_be32(out, static_cast<std::uint32_t>(data.size()));
  out.append(type);
  out.append(data);
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(type.data()), 4);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size()));
  append_be32(out, static_cast<std::uint32_t>(crc));
  return out;
}

}  // namespace

bool is_png(std::string_view bytes) {
  return bytes.size() >= kSignature.size() &&
         std::memcmp(bytes.data(), kSignature.data(), kSignature.size()) == 0;
}

Info info(std::string_view bytes) {
  const auto all = chunks(bytes);
  const auto& ihdr = all.front();
  if (ihdr.length < 8) throw Error(ErrorCode::unreadable_image, "short IHDR");
  return {static_cast<int>(read_be32(ihdr.data, 0)), static_cast<int>(read_be32(ihdr.data, 4))};
}

std::optional<std::string> text_chunk(std::string_view bytes, std::string_view keyword) {
  for (const auto& c : chunks(bytes)) {
    if (c.type != "tEXt") continue;
    auto sep = c.data.find('\0');
    if (sep == std::string_view::npos) continue;
    if (c.data.substr(0, sep) == keyword) return std::string(c.data.substr(sep + 1));
  }
  return std::nullopt;
}

std::string with_text_chunk(std::string_view bytes, std::string_view keyword,
                            std::string_view value) {
  const auto all = chunks(bytes);
  std::string payload(keyword);
  payload.push_back('\0');
  payload.append(value);
  const auto encoded = encode_chunk("tEXt", payload);

  for (const auto& c : all) {
    if (c.type != "tEXt") continue;
    auto sep = c.data.find('\0');
    if (sep != std::string_view::npos && c.data.substr(0, sep) == keyword) {
      std::string out(bytes.substr(0, c.offset));
      out += encoded;
      out.append(bytes.substr(c.end()));
      return out;
    }
  }
  const auto insert_at = all.front().end();
  std::string out(bytes.substr(0, insert_at));
  out += encoded;
  out.append(bytes.substr(insert_at));
  return out;
}

}  // namespace png

nlohmann::json frame_metadata(std::string_view png_bytes) {
  auto raw = png::text_chunk(png_bytes, kMetadataKeyword);
  if (!raw) return nlohmann::json::object();
  auto parsed = nlohmann::json::parse(*raw, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw Error(ErrorCode::unreadable_image, "frame metadata chunk is not a JSON object");
  }
  return parsed;
}

std::string with_frame_metadata(std::string_view png_bytes, const nlohmann::json& metadata) {
  return png::with_text_chunk(png_bytes, kMetadataKeyword, metadata.dump(-1, ' ', true));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::frame_io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::frame_io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::frame_io, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string frame_file_name(std::size_t index) {
  std::ostringstream name;
  name << std::setw(4) << std::setfill('0') << index << ".png";
  return name.str();
}

Frame load_frame(const fs::path& path, std::size_t index) {
  const auto bytes = read_file(path);
  const auto dims = png::info(bytes);
  return Frame{index, path, dims.width, dims.height, sha256_hex(bytes)};
}

VideoClip load_clip(std::string id, const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::missing_frame, "frame directory " + dir.string() + " does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  VideoClip clip{std::move(id), {}};
  for (std::size_t i = 0; i < files.size(); ++i) clip.frames.push_back(load_frame(files[i], i));
  return clip;
}

VideoClip write_clip(std::string id, const fs::path& dir,
                     const std::vector<std::string>& png_frames) {
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") fs::remove(entry.path());
  }
  VideoClip clip{std::move(id), {}};
  for (std::size_t i = 0; i < png_frames.size(); ++i) {
    const auto path = dir / frame_file_name(i);
    write_file_atomic(path, png_frames[i]);
    const auto dims = png::info(png_frames[i]);
    clip.frames.push_back(Frame{i, path, dims.width, dims.height, sha256_hex(png_frames[i])});
  }
  return clip;
}

std::vector<std::string> read_clip_bytes(const VideoClip& clip) {
  std::vector<std::string> out;
  out.reserve(clip.frames.size());
  for (const auto& f : clip.frames) out.push_back(read_file(f.image_ref));
  return out;
}

}  // namespace causal_steer
