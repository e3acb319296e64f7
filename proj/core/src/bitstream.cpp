#include "alvc/bitstream.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include <json.hpp>

#include "alvc/errors.hpp"

namespace alvc::codec {

namespace {

void put_u8(std::vector<uint8_t>& b, uint8_t v) { b.push_back(v); }

void put_be(std::vector<uint8_t>& b, uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) b.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

uint64_t get_be(const std::vector<uint8_t>& b, size_t& pos, int bytes) {
  if (pos + bytes > b.size()) throw BitstreamError("bitstream: truncated header");
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | b[pos++];
  return v;
}

}  // namespace

BitstreamWriter::BitstreamWriter(const BitstreamHeader& h) {
  bytes_ = {'A', 'L', 'V', 'C'};
  put_be(bytes_, h.version, 2);
  put_be(bytes_, h.width, 4);
  put_be(bytes_, h.height, 4);
  put_be(bytes_, h.gop_size, 2);
  put_u8(bytes_, h.num_b);
  put_be(bytes_, h.lambda_id, 4);
  put_be(bytes_, h.frame_count, 4);
  put_be(bytes_, h.arch_hash, 8);
}

void BitstreamWriter::append(const FrameRecord& rec) {
  put_u8(bytes_, static_cast<uint8_t>(rec.type));
  if (rec.type != 'I') {
    put_be(bytes_, rec.location.size(), 4);
    bytes_.insert(bytes_.end(), rec.location.begin(), rec.location.end());
  }
  put_be(bytes_, rec.residual.size(), 4);
  bytes_.insert(bytes_.end(), rec.residual.begin(), rec.residual.end());
}

BitstreamReader::BitstreamReader(std::vector<uint8_t> bytes) : bytes_(std::move(bytes)) {
  if (bytes_.size() < BitstreamHeader::kByteSize) throw BitstreamError("bitstream: shorter than a header");
  if (std::memcmp(bytes_.data(), "ALVC", 4) != 0) throw BitstreamError("bitstream: bad magic");
  pos_ = 4;
  header_.version = static_cast<uint16_t>(get_be(bytes_, pos_, 2));
  if (header_.version != 1)
    throw BitstreamError("bitstream: unsupported version " + std::to_string(header_.version));
  header_.width = static_cast<uint32_t>(get_be(bytes_, pos_, 4));
  header_.height = static_cast<uint32_t>(get_be(bytes_, pos_, 4));
  header_.gop_size = static_cast<uint16_t>(get_be(bytes_, pos_, 2));
  header_.num_b = bytes_[pos_++];
  header_.lambda_id = static_cast<uint32_t>(get_be(bytes_, pos_, 4));
  header_.frame_count = static_cast<uint32_t>(get_be(bytes_, pos_, 4));
  header_.arch_hash = get_be(bytes_, pos_, 8);
}

FrameRecord BitstreamReader::next(int coding_index) {
  auto fail = [&](const char* what) {
    throw BitstreamError("bitstream: " + std::string(what) + " in record " +
                         std::to_string(coding_index));
  };
  if (pos_ >= bytes_.size()) fail("missing record");
  FrameRecord rec;
  rec.type = static_cast<char>(bytes_[pos_++]);
  if (rec.type != 'I' && rec.type != 'P' && rec.type != 'B') fail("unknown frame type");
  auto read_payload = [&](std::vector<uint8_t>& out) {
    if (pos_ + 4 > bytes_.size()) fail("truncated length");
    size_t len = static_cast<size_t>(get_be(bytes_, pos_, 4));
    if (pos_ + len > bytes_.size()) fail("truncated payload");
    out.assign(bytes_.begin() + pos_, bytes_.begin() + pos_ + len);
    pos_ += len;
  };
  if (rec.type != 'I') read_payload(rec.location);
  read_payload(rec.residual);
  return rec;
}

std::string inspect_json(const std::vector<uint8_t>& bytes) {
  BitstreamReader reader(bytes);
  const BitstreamHeader& h = reader.header();
  nlohmann::json j;
  j["schema_version"] = 1;
  j["header"] = {{"version", h.version},   {"width", h.width},
                 {"height", h.height},     {"gop_size", h.gop_size},
                 {"num_b", h.num_b},       {"lambda_id", h.lambda_id},
                 {"frame_count", h.frame_count}, {"arch_hash", h.arch_hash},
                 {"header_bytes", BitstreamHeader::kByteSize}};
  j["records"] = nlohmann::json::array();
  int i = 0;
  while (!reader.done()) {
    FrameRecord rec = reader.next(i);
    nlohmann::json r = {{"coding_index", i},
                        {"type", std::string(1, rec.type)},
                        {"record_bytes", rec.byte_size()}};
    if (rec.type == 'I') {
      r["payload_bytes"] = rec.residual.size();
    } else {
      r["location_bytes"] = rec.location.size();
      r["residual_bytes"] = rec.residual.size();
    }
    j["records"].push_back(r);
    ++i;
  }
  j["total_bytes"] = bytes.size();
  return j.dump(2);
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot create " + path);
  size_t n = std::fwrite(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
  if (n != bytes.size()) throw IoError("short write to " + path);
}

std::vector<uint8_t> read_file(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path);
  std::fseek(f, 0, SEEK_END);
  long size = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<uint8_t> bytes(static_cast<size_t>(size));
  size_t n = std::fread(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
  if (n != bytes.size()) throw IoError("short read from " + path);
  return bytes;
}

}  // namespace alvc::codec
