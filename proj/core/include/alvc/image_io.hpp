#pragma once

#include <string>
#include <vector>

#include "alvc/frame.hpp"

namespace alvc {

// 8-bit RGB PNG. Pixel k maps to float k/255; writing rounds back, so a
// read-write cycle is lossless.
Frame read_png(const std::string& path);
void write_png(const std::string& path, const Frame& f);

// A sequence is a directory of zero-padded numbered files: 00000.png,
// 00001.png, ... Reads consecutively numbered frames starting at 0.
VideoSequence read_frame_dir(const std::string& dir, int max_frames = -1);
void write_frame_dir(const std::string& dir, const VideoSequence& seq);

// Middlebury .flo flow files (magic 202021.25, little-endian W,H then
// interleaved x,y floats).
FlowField read_flo(const std::string& path);
void write_flo(const std::string& path, const FlowField& f);

}  // namespace alvc
