#include "alvc/range_coder.hpp"

#include <stdexcept>

namespace alvc::codec {

namespace {
constexpr uint32_t kHalf = 0x80000000u;
constexpr uint32_t kQuarter = 0x40000000u;
constexpr uint32_t kThreeQuarters = 0xC0000000u;
constexpr int kProbBits = 16;
}  // namespace

void RangeEncoder::emit(int bit) {
  cur_ = static_cast<uint8_t>((cur_ << 1) | bit);
  if (++nbits_ == 8) {
    bytes_.push_back(cur_);
    cur_ = 0;
    nbits_ = 0;
  }
}

void RangeEncoder::emit_with_pending(int bit) {
  emit(bit);
  for (; pending_ > 0; --pending_) emit(bit ^ 1);
}

void RangeEncoder::encode(uint32_t cum_lo, uint32_t cum_hi) {
  if (cum_lo >= cum_hi || cum_hi > (1u << kProbBits))
    throw std::invalid_argument("RangeEncoder: bad cumulative bounds");
  uint64_t span = static_cast<uint64_t>(high_) - low_ + 1;
  high_ = low_ + static_cast<uint32_t>((span * cum_hi) >> kProbBits) - 1;
  low_ = low_ + static_cast<uint32_t>((span * cum_lo) >> kProbBits);
  for (;;) {
    if (high_ < kHalf) {
      emit_with_pending(0);
    } else if (low_ >= kHalf) {
      emit_with_pending(1);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1;
  }
}

std::vector<uint8_t> RangeEncoder::finish() {
  if (finished_) throw std::logic_error("RangeEncoder: already finished");
  finished_ = true;
  ++pending_;
  emit_with_pending(low_ >= kQuarter ? 1 : 0);
  if (nbits_ > 0) bytes_.push_back(static_cast<uint8_t>(cur_ << (8 - nbits_)));
  return std::move(bytes_);
}

RangeDecoder::RangeDecoder(const uint8_t* data, size_t size) : data_(data), size_(size) {
  for (int i = 0; i < 32; ++i) value_ = (value_ << 1) | static_cast<uint32_t>(read_bit());
}

int RangeDecoder::read_bit() {
  if (byte_pos_ >= size_) return 0;  // zero padding past the payload
  int bit = (data_[byte_pos_] >> (7 - bit_pos_)) & 1;
  if (++bit_pos_ == 8) {
    bit_pos_ = 0;
    ++byte_pos_;
  }
  return bit;
}

uint32_t RangeDecoder::decode_target() {
  uint64_t span = static_cast<uint64_t>(high_) - low_ + 1;
  uint64_t t = (((static_cast<uint64_t>(value_) - low_) + 1) << kProbBits) - 1;
  uint32_t target = static_cast<uint32_t>(t / span);
  return target < (1u << kProbBits) ? target : (1u << kProbBits) - 1;
}

void RangeDecoder::decode_update(uint32_t cum_lo, uint32_t cum_hi) {
  uint64_t span = static_cast<uint64_t>(high_) - low_ + 1;
  high_ = low_ + static_cast<uint32_t>((span * cum_hi) >> kProbBits) - 1;
  low_ = low_ + static_cast<uint32_t>((span * cum_lo) >> kProbBits);
  for (;;) {
    if (high_ < kHalf) {
      // nothing
    } else if (low_ >= kHalf) {
      low_ -= kHalf;
      high_ -= kHalf;
      value_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      low_ -= kQuarter;
      high_ -= kQuarter;
      value_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1;
    value_ = (value_ << 1) | static_cast<uint32_t>(read_bit());
  }
}

}  // namespace alvc::codec
