#pragma once

// Procedural 16x16 glyphs for the four symbol classes. Two families: "easy"
// glyphs are visually distinct shapes, "hard" glyphs are a shared vertical
// stroke with small distinguishing marks, rendered with heavier noise so
// classes overlap.

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "abl/common.hpp"
#include "abl/equation.hpp"
#include "abl/rng.hpp"

namespace abl::glyph {

inline constexpr std::size_t kGlyphSize = 16;
inline constexpr std::size_t kGlyphPixels = kGlyphSize * kGlyphSize;

struct GlyphImage {
  std::vector<double> pixels;  // row-major, values in [0,1]

  GlyphImage() : pixels(kGlyphPixels, 0.0) {}

  double& at(std::size_t y, std::size_t x) { return pixels[y * kGlyphSize + x]; }
  double at(std::size_t y, std::size_t x) const { return pixels[y * kGlyphSize + x]; }
  bool operator==(const GlyphImage& o) const { return pixels == o.pixels; }
};

enum class Family { Easy, Hard };

struct Segment {
  double x0, y0, x1, y1;
};
using Strokes = std::vector<Segment>;

struct GlyphFamilySpec {
  Family family = Family::Easy;
  double max_translate = 2.0;   // pixels, per axis
  double max_rotate_deg = 15.0;
  std::vector<int> stroke_widths = {1, 2};
  double noise_sigma = 0.1;     // clipped additive gaussian, in [0, 0.3]
  std::uint64_t seed = 0;

  void validate() const {
    if (noise_sigma < 0.0 || noise_sigma > 0.3)
      throw std::invalid_argument("noise_sigma must lie in [0, 0.3]");
    if (max_translate < 0.0 || max_rotate_deg < 0.0)
      throw std::invalid_argument("jitter magnitudes must be nonnegative");
    if (stroke_widths.empty()) throw std::invalid_argument("need at least one stroke width");
  }

  static GlyphFamilySpec easy(std::uint64_t seed, double sigma = 0.1) {
    GlyphFamilySpec s;
    s.family = Family::Easy;
    s.noise_sigma = sigma;
    s.seed = seed;
    return s;
  }

  static GlyphFamilySpec hard(std::uint64_t seed, double sigma = 0.25) {
    GlyphFamilySpec s;
    s.family = Family::Hard;
    s.noise_sigma = sigma;
    s.seed = seed;
    return s;
  }
};

// class prototypes as polyline segments on the 16x16 canvas
inline const Strokes& prototype(Family family, eqn::Sym sym) {
  static const std::array<Strokes, 4> easy = {{
      // '0': octagonal ring
      {{10.5, 4.5, 12.0, 8.0}, {12.0, 8.0, 10.5, 11.5}, {10.5, 11.5, 5.5, 11.5},
       {5.5, 11.5, 4.0, 8.0},  {4.0, 8.0, 5.5, 4.5},    {5.5, 4.5, 10.5, 4.5}},
      // '1': vertical stroke
      {{8.0, 3.0, 8.0, 13.0}},
      // '+': cross
      {{8.0, 4.0, 8.0, 12.0}, {4.0, 8.0, 12.0, 8.0}},
      // '=': two bars
      {{4.0, 6.0, 12.0, 6.0}, {4.0, 10.0, 12.0, 10.0}},
  }};
  static const std::array<Strokes, 4> hard = {{
      // shared trunk with a small top-right tick
      {{8.0, 3.0, 8.0, 13.0}, {8.0, 3.5, 11.0, 4.5}},
      // plain trunk
      {{8.0, 3.0, 8.0, 13.0}},
      // trunk with a small mid-left tick
      {{8.0, 3.0, 8.0, 13.0}, {5.0, 7.5, 8.0, 8.5}},
      // trunk with a small bottom-right tick
      {{8.0, 3.0, 8.0, 13.0}, {8.0, 11.5, 11.0, 12.5}},
  }};
  const auto& set = family == Family::Easy ? easy : hard;
  return set[static_cast<std::size_t>(sym)];
}

// Rasterizes the prototype with sampled jitter plus clipped gaussian pixel
// noise. Deterministic given the rng state.
inline GlyphImage render_glyph(eqn::Sym sym, const GlyphFamilySpec& spec, Rng& rng) {
  spec.validate();
  const double dx = spec.max_translate > 0 ? rng.uniform(-spec.max_translate, spec.max_translate) : 0.0;
  const double dy = spec.max_translate > 0 ? rng.uniform(-spec.max_translate, spec.max_translate) : 0.0;
  const double rad = (spec.max_rotate_deg > 0
                          ? rng.uniform(-spec.max_rotate_deg, spec.max_rotate_deg)
                          : 0.0) * 3.14159265358979323846 / 180.0;
  const int width = spec.stroke_widths[rng.below(spec.stroke_widths.size())];

  const double cx = (kGlyphSize - 1) / 2.0, cy = (kGlyphSize - 1) / 2.0;
  const double cosr = std::cos(rad), sinr = std::sin(rad);
  auto transform = [&](double x, double y, double& ox, double& oy) {
    const double rx = x - cx, ry = y - cy;
    ox = cx + rx * cosr - ry * sinr + dx;
    oy = cy + rx * sinr + ry * cosr + dy;
  };

  GlyphImage img;
  const double radius = width / 2.0;
  for (const Segment& s : prototype(spec.family, sym)) {
    double x0, y0, x1, y1;
    transform(s.x0, s.y0, x0, y0);
    transform(s.x1, s.y1, x1, y1);
    const double len = std::hypot(x1 - x0, y1 - y0);
    const int steps = std::max(1, static_cast<int>(len * 4));
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const double px = x0 + (x1 - x0) * t;
      const double py = y0 + (y1 - y0) * t;
      const int lo_y = std::max(0, static_cast<int>(std::floor(py - radius)));
      const int hi_y = std::min<int>(kGlyphSize - 1, static_cast<int>(std::ceil(py + radius)));
      const int lo_x = std::max(0, static_cast<int>(std::floor(px - radius)));
      const int hi_x = std::min<int>(kGlyphSize - 1, static_cast<int>(std::ceil(px + radius)));
      for (int yy = lo_y; yy <= hi_y; ++yy)
        for (int xx = lo_x; xx <= hi_x; ++xx)
          if (std::hypot(xx - px, yy - py) <= radius + 0.25)
            img.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)) = 1.0;
    }
  }

  if (spec.noise_sigma > 0) {
    for (auto& p : img.pixels) {
      p += rng.normal(0.0, spec.noise_sigma);
      p = std::min(1.0, std::max(0.0, p));
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Image block format (magic, count, width, height, little-endian float64)

inline void write_images(std::ostream& os, const std::vector<GlyphImage>& images) {
  os << "ABLIMG1\n";
  write_u32(os, static_cast<std::uint32_t>(images.size()));
  write_u32(os, kGlyphSize);
  write_u32(os, kGlyphSize);
  for (const auto& img : images)
    for (double p : img.pixels) write_f64(os, p);
}

inline std::vector<GlyphImage> read_images(std::istream& is) {
  std::string magic(8, '\0');
  is.read(magic.data(), 8);
  if (!is || magic != "ABLIMG1\n") throw FormatError("bad image block magic");
  const std::uint32_t count = read_u32(is);
  const std::uint32_t w = read_u32(is);
  const std::uint32_t h = read_u32(is);
  if (w != kGlyphSize || h != kGlyphSize) throw FormatError("unsupported glyph size");
  std::vector<GlyphImage> out(count);
  for (auto& img : out)
    for (auto& p : img.pixels) p = read_f64(is);
  if (!is) throw FormatError("truncated image block");
  return out;
}

}  // namespace abl::glyph
