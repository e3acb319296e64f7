#include "alvc/frame.hpp"

#include <stdexcept>

namespace alvc {

std::pair<Frame, std::pair<int, int>> pad_to_multiple(const Frame& f, int k) {
  if (k < 1) throw std::invalid_argument("pad_to_multiple: k must be >= 1");
  int h = f.height(), w = f.width();
  int hp = ((h + k - 1) / k) * k;
  int wp = ((w + k - 1) / k) * k;
  if (hp == h && wp == w) return {f, {h, w}};
  Frame out(hp, wp, f.role, f.index);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < hp; ++y) {
      int sy = y < h ? y : h - 1;
      for (int x = 0; x < wp; ++x) {
        int sx = x < w ? x : w - 1;
        out.pix.at(0, c, y, x) = f.pix.at(0, c, sy, sx);
      }
    }
  return {out, {h, w}};
}

Frame crop_to(const Frame& f, int h, int w) {
  if (h > f.height() || w > f.width()) throw std::invalid_argument("crop_to: target larger than frame");
  if (h == f.height() && w == f.width()) return f;
  Frame out(h, w, f.role, f.index);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.pix.at(0, c, y, x) = f.pix.at(0, c, y, x);
  return out;
}

}  // namespace alvc
