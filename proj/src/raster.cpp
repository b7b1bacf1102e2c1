#include "mad/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace mad::raster {

int snap(double v) { return static_cast<int>(std::floor(v + 0.5)); }

void stamp_square(FrameImage& img, int x, int y, int width, Rgb color) {
  const int lo = -(width - 1) / 2;
  const int hi = width / 2;
  for (int dy = lo; dy <= hi; ++dy) {
    for (int dx = lo; dx <= hi; ++dx) {
      if (img.contains(x + dx, y + dy)) img.set(x + dx, y + dy, color);
    }
  }
}

void fill_disc(FrameImage& img, int x, int y, int radius, Rgb color) {
  const long r2 = static_cast<long>(radius) * radius;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (static_cast<long>(dx) * dx + static_cast<long>(dy) * dy > r2) continue;
      if (img.contains(x + dx, y + dy)) img.set(x + dx, y + dy, color);
    }
  }
}

void bresenham(int x0, int y0, int x1, int y1, const std::function<void(int, int)>& fn) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    fn(x0, y0);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

namespace {

// Liang-Barsky clip of the parametric segment against [lo_x,hi_x]x[lo_y,hi_y].
bool clip_segment(double& x0, double& y0, double& x1, double& y1, double lo_x, double lo_y,
                  double hi_x, double hi_y) {
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  double t0 = 0.0;
  double t1 = 1.0;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {x0 - lo_x, hi_x - x0, y0 - lo_y, hi_y - y0};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) {
      if (t > t1) return false;
      t0 = std::max(t0, t);
    } else {
      if (t < t0) return false;
      t1 = std::min(t1, t);
    }
  }
  const double nx0 = x0 + t0 * dx, ny0 = y0 + t0 * dy;
  const double nx1 = x0 + t1 * dx, ny1 = y0 + t1 * dy;
  x0 = nx0;
  y0 = ny0;
  x1 = nx1;
  y1 = ny1;
  return true;
}

}  // namespace

void draw_line(FrameImage& img, double x0, double y0, double x1, double y1, int width,
               Rgb color) {
  if (!std::isfinite(x0) || !std::isfinite(y0) || !std::isfinite(x1) || !std::isfinite(y1)) {
    return;
  }
  const double margin = static_cast<double>(width) + 1.0;
  const double lo_x = -margin, lo_y = -margin;
  const double hi_x = img.width - 1 + margin, hi_y = img.height - 1 + margin;
  auto inside = [&](double x, double y) {
    return x >= lo_x && x <= hi_x && y >= lo_y && y <= hi_y;
  };
  if (!inside(x0, y0) || !inside(x1, y1)) {
    if (!clip_segment(x0, y0, x1, y1, lo_x, lo_y, hi_x, hi_y)) return;
  }
  bresenham(snap(x0), snap(y0), snap(x1), snap(y1),
            [&](int x, int y) { stamp_square(img, x, y, width, color); });
}

void draw_rect_outline(FrameImage& img, const BBox& box, int thickness, Rgb color) {
  auto clamp_coord = [](double v, int limit) {
    if (std::isnan(v)) return -1;
    return snap(std::clamp(v, -2.0, limit + 2.0));
  };
  if (std::isnan(box.x_min) || std::isnan(box.x_max) || std::isnan(box.y_min) ||
      std::isnan(box.y_max)) {
    return;
  }
  const int x0 = clamp_coord(box.x_min, img.width);
  const int y0 = clamp_coord(box.y_min, img.height);
  const int x1 = clamp_coord(box.x_max, img.width);   // exclusive
  const int y1 = clamp_coord(box.y_max, img.height);  // exclusive
  for (int y = std::max(y0, 0); y < std::min(y1, img.height); ++y) {
    for (int x = std::max(x0, 0); x < std::min(x1, img.width); ++x) {
      const bool edge = x < x0 + thickness || x >= x1 - thickness || y < y0 + thickness ||
                        y >= y1 - thickness;
      if (edge) img.set(x, y, color);
    }
  }
}

}  // namespace mad::raster
