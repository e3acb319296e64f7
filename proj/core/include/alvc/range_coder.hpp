#pragma once

#include <cstdint>
#include <vector>

namespace alvc::codec {

// Binary arithmetic coder over 16-bit cumulative frequency tables
// (total 1<<16). 32-bit interval with bit-at-a-time renormalization, so the
// per-symbol precision loss is bounded by 2^-14 bits.
class RangeEncoder {
 public:
  // cum_lo/cum_hi: cumulative counts of the symbol's bin, cum_hi > cum_lo.
  void encode(uint32_t cum_lo, uint32_t cum_hi);
  std::vector<uint8_t> finish();

 private:
  void emit(int bit);
  void emit_with_pending(int bit);

  uint32_t low_ = 0;
  uint32_t high_ = 0xFFFFFFFFu;
  uint64_t pending_ = 0;
  std::vector<uint8_t> bytes_;
  uint8_t cur_ = 0;
  int nbits_ = 0;
  bool finished_ = false;
};

class RangeDecoder {
 public:
  RangeDecoder(const uint8_t* data, size_t size);

  // Scaled cumulative value of the next symbol, in [0, 1<<16).
  uint32_t decode_target();
  void decode_update(uint32_t cum_lo, uint32_t cum_hi);

 private:
  int read_bit();

  const uint8_t* data_;
  size_t size_;
  size_t byte_pos_ = 0;
  int bit_pos_ = 0;
  uint32_t low_ = 0;
  uint32_t high_ = 0xFFFFFFFFu;
  uint32_t value_ = 0;
};

}  // namespace alvc::codec
