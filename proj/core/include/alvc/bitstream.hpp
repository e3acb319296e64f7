#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace alvc::codec {

// Container layout (multi-byte fields big-endian):
//   magic "ALVC" | version u16 | width u32 | height u32 | gop_size u16 |
//   num_b u8 | lambda_id u32 | frame_count u32 | arch_hash u64
// followed by one record per coding step, in coding order:
//   frame_type u8 ('I','P','B')
//   'I': payload_len u32, payload
//   'P'/'B': location_len u32, location payload, residual_len u32, residual payload
struct BitstreamHeader {
  uint16_t version = 1;
  uint32_t width = 0;
  uint32_t height = 0;
  uint16_t gop_size = 13;
  uint8_t num_b = 2;
  uint32_t lambda_id = 1024;
  uint32_t frame_count = 0;
  uint64_t arch_hash = 0;

  static constexpr size_t kByteSize = 4 + 2 + 4 + 4 + 2 + 1 + 4 + 4 + 8;
};

struct FrameRecord {
  char type = 'I';
  std::vector<uint8_t> location;  // empty for 'I'
  std::vector<uint8_t> residual;  // the single intra payload lives here for 'I'
  size_t byte_size() const {
    return 1 + (type == 'I' ? 4 + residual.size() : 8 + location.size() + residual.size());
  }
};

class BitstreamWriter {
 public:
  explicit BitstreamWriter(const BitstreamHeader& h);
  void append(const FrameRecord& rec);
  const std::vector<uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<uint8_t> bytes_;
};

class BitstreamReader {
 public:
  // Throws BitstreamError on bad magic, unknown version, or truncation.
  explicit BitstreamReader(std::vector<uint8_t> bytes);
  const BitstreamHeader& header() const { return header_; }
  bool done() const { return pos_ >= bytes_.size(); }
  // `coding_index` only labels the error message on truncation.
  FrameRecord next(int coding_index);

 private:
  std::vector<uint8_t> bytes_;
  size_t pos_ = 0;
  BitstreamHeader header_;
};

// Header plus per-record byte counts as JSON (the `inspect` verb).
std::string inspect_json(const std::vector<uint8_t>& bytes);

void write_file(const std::string& path, const std::vector<uint8_t>& bytes);
std::vector<uint8_t> read_file(const std::string& path);

}  // namespace alvc::codec
