#pragma once

#include <functional>

#include "mad/core_types.hpp"

namespace mad::raster {

// Pixel (i, j) covers [i, i+1) x [j, j+1); continuous coordinates snap to the
// nearest integer pixel with round-half-up.
int snap(double v);

// Square stamp of side `width` centred on (x, y); even widths extend one
// extra pixel towards +x/+y. Out-of-canvas pixels are dropped.
void stamp_square(FrameImage& img, int x, int y, int width, Rgb color);

// Filled disc: all pixels with dx^2 + dy^2 <= radius^2. radius 0 paints one
// pixel.
void fill_disc(FrameImage& img, int x, int y, int radius, Rgb color);

// Bresenham line between snapped endpoints, each pixel widened by
// stamp_square. Segments reaching far outside the canvas are clipped
// (Liang-Barsky) to the canvas grown by the stamp width before snapping, so
// fully in-canvas segments rasterize exactly as unclipped ones.
void draw_line(FrameImage& img, double x0, double y0, double x1, double y1, int width,
               Rgb color);

// Calls fn(x, y) for every Bresenham pixel from (x0,y0) to (x1,y1) inclusive.
void bresenham(int x0, int y0, int x1, int y1, const std::function<void(int, int)>& fn);

// Outline of the half-open pixel box [snap(x_min), snap(x_max)) x
// [snap(y_min), snap(y_max)) with `thickness` pixels drawn inward.
void draw_rect_outline(FrameImage& img, const BBox& box, int thickness, Rgb color);

}  // namespace mad::raster
