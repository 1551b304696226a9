#include "pmw/synth.hpp"

#include <algorithm>
#include <cmath>

#include "pmw/image.hpp"

namespace pmw {

namespace {

struct Col {
  float r, g, b;
};

Col mix(Col a, Col b, float t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

Col jitter(Col c, Rng& rng, float amount) {
  auto j = [&](float v) {
    return std::clamp(v + static_cast<float>(rng.uniform(-amount, amount)), 0.0f, 1.0f);
  };
  return {j(c.r), j(c.g), j(c.b)};
}

struct Canvas {
  int size;
  TensorF t;  // [3,size,size]

  explicit Canvas(int s) : size(s), t({3, s, s}) {}

  void blend(int x, int y, Col c, float alpha) {
    if (x < 0 || y < 0 || x >= size || y >= size || alpha <= 0.0f) return;
    const std::int64_t plane = static_cast<std::int64_t>(size) * size;
    const std::int64_t i = static_cast<std::int64_t>(y) * size + x;
    t[i] += (c.r - t[i]) * alpha;
    t[plane + i] += (c.g - t[plane + i]) * alpha;
    t[2 * plane + i] += (c.b - t[2 * plane + i]) * alpha;
  }

  void gradient(Col top, Col bottom) {
    for (int y = 0; y < size; ++y) {
      const Col c = mix(top, bottom, static_cast<float>(y) / static_cast<float>(size - 1));
      for (int x = 0; x < size; ++x) blend(x, y, c, 1.0f);
    }
  }

  void speckle(Rng& rng, float density, float amount) {
    const int n = static_cast<int>(density * static_cast<float>(size) * size);
    for (int i = 0; i < n; ++i) {
      const int x = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(size)));
      const int y = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(size)));
      const float d = static_cast<float>(rng.uniform(-amount, amount));
      blend(x, y, {0.5f + d, 0.5f + d, 0.5f + d}, 0.35f);
    }
  }

  // Filled rotated ellipse, 2x2 supersampled coverage.
  void ellipse(float cx, float cy, float a, float b, float angle, Col col,
               float alpha = 1.0f) {
    const float cos_a = std::cos(angle), sin_a = std::sin(angle);
    const float reach = std::max(a, b) + 1.0f;
    const int x0 = std::max(0, static_cast<int>(cx - reach));
    const int x1 = std::min(size - 1, static_cast<int>(cx + reach));
    const int y0 = std::max(0, static_cast<int>(cy - reach));
    const int y1 = std::min(size - 1, static_cast<int>(cy + reach));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        int hits = 0;
        for (float sy : {-0.25f, 0.25f}) {
          for (float sx : {-0.25f, 0.25f}) {
            const float dx = static_cast<float>(x) + sx - cx;
            const float dy = static_cast<float>(y) + sy - cy;
            const float u = (cos_a * dx + sin_a * dy) / a;
            const float v = (-sin_a * dx + cos_a * dy) / b;
            if (u * u + v * v <= 1.0f) ++hits;
          }
        }
        if (hits) blend(x, y, col, alpha * static_cast<float>(hits) / 4.0f);
      }
    }
  }

  void disc(float cx, float cy, float r, Col col, float alpha = 1.0f) {
    ellipse(cx, cy, r, r, 0.0f, col, alpha);
  }

  // Flat-bottomed dome: the upper half of a disc.
  void half_disc(float cx, float cy, float r, Col col, float alpha = 1.0f) {
    const int x0 = std::max(0, static_cast<int>(cx - r - 1));
    const int x1 = std::min(size - 1, static_cast<int>(cx + r + 1));
    const int y0 = std::max(0, static_cast<int>(cy - r - 1));
    const int y1 = std::min(size - 1, static_cast<int>(cy));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        int hits = 0;
        for (float sy : {-0.25f, 0.25f}) {
          for (float sx : {-0.25f, 0.25f}) {
            const float dx = static_cast<float>(x) + sx - cx;
            const float dy = static_cast<float>(y) + sy - cy;
            if (dy <= 0.0f && dx * dx + dy * dy <= r * r) ++hits;
          }
        }
        if (hits) blend(x, y, col, alpha * static_cast<float>(hits) / 4.0f);
      }
    }
  }

  void line(float x0, float y0, float x1, float y1, float thick, Col col) {
    const float len = std::hypot(x1 - x0, y1 - y0);
    const int steps = std::max(2, static_cast<int>(len * 2.0f));
    for (int i = 0; i <= steps; ++i) {
      const float t = static_cast<float>(i) / static_cast<float>(steps);
      disc(x0 + (x1 - x0) * t, y0 + (y1 - y0) * t, thick, col);
    }
  }

  // Quadratic bezier stroke.
  void curve(float ax, float ay, float cx, float cy, float bx, float by,
             float thick, Col col) {
    const int steps = 36;
    for (int i = 0; i <= steps; ++i) {
      const float t = static_cast<float>(i) / static_cast<float>(steps);
      const float u = 1.0f - t;
      const float x = u * u * ax + 2.0f * u * t * cx + t * t * bx;
      const float y = u * u * ay + 2.0f * u * t * cy + t * t * by;
      disc(x, y, thick, col);
    }
  }

  void triangle(float x0, float y0, float x1, float y1, float x2, float y2,
                Col col) {
    const float min_x = std::min({x0, x1, x2}), max_x = std::max({x0, x1, x2});
    const float min_y = std::min({y0, y1, y2}), max_y = std::max({y0, y1, y2});
    auto edge = [](float ax, float ay, float bx, float by, float px, float py) {
      return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
    };
    for (int y = std::max(0, static_cast<int>(min_y)); y <= std::min(size - 1, static_cast<int>(max_y) + 1); ++y) {
      for (int x = std::max(0, static_cast<int>(min_x)); x <= std::min(size - 1, static_cast<int>(max_x) + 1); ++x) {
        int hits = 0;
        for (float sy : {-0.25f, 0.25f}) {
          for (float sx : {-0.25f, 0.25f}) {
            const float px = static_cast<float>(x) + sx, py = static_cast<float>(y) + sy;
            const float e0 = edge(x0, y0, x1, y1, px, py);
            const float e1 = edge(x1, y1, x2, y2, px, py);
            const float e2 = edge(x2, y2, x0, y0, px, py);
            if ((e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0)) ++hits;
          }
        }
        if (hits) blend(x, y, col, static_cast<float>(hits) / 4.0f);
      }
    }
  }
};

struct Palette {
  Col sky_top, sky_bottom;
  Col sand_top, sand_bottom;
  Col paper;
  Col skin;
};

Palette palette_for(const SynthStyle& style) {
  if (style.palette == 0) {
    return {{0.35f, 0.62f, 0.85f}, {0.10f, 0.32f, 0.58f},
            {0.88f, 0.78f, 0.58f}, {0.72f, 0.60f, 0.42f},
            {0.94f, 0.93f, 0.90f},
            {0.85f, 0.68f, 0.55f}};
  }
  // shifted family: greener water, grayer shore, warmer paper
  return {{0.30f, 0.70f, 0.62f}, {0.08f, 0.40f, 0.38f},
          {0.70f, 0.68f, 0.62f}, {0.52f, 0.50f, 0.46f},
          {0.97f, 0.92f, 0.80f},
          {0.75f, 0.62f, 0.52f}};
}

void ocean_background(Canvas& canvas, const Palette& pal, Rng& rng) {
  canvas.gradient(jitter(pal.sky_top, rng, 0.06f), jitter(pal.sky_bottom, rng, 0.06f));
  canvas.speckle(rng, 0.02f, 0.25f);
}

void sand_background(Canvas& canvas, const Palette& pal, Rng& rng) {
  canvas.gradient(jitter(pal.sand_top, rng, 0.06f), jitter(pal.sand_bottom, rng, 0.06f));
  canvas.speckle(rng, 0.05f, 0.3f);
}

float u(Rng& rng, float lo, float hi) {
  return static_cast<float>(rng.uniform(lo, hi));
}

// Positive class: tilted elongated float with a crest highlight and trailing
// curved strokes.
void draw_pmw(Canvas& c, const Palette& pal, Rng& rng, float s) {
  if (rng.bernoulli(0.5)) {
    sand_background(c, pal, rng);
  } else {
    ocean_background(c, pal, rng);
  }
  const float cx = u(rng, 24, 40) * s, cy = u(rng, 18, 30) * s;
  const float a = u(rng, 10, 15) * s, b = u(rng, 4, 6.5f) * s;
  const float angle = u(rng, -0.5f, 0.5f);
  const Col body = jitter({0.72f, 0.42f, 0.80f}, rng, 0.08f);
  const Col crest = jitter({0.90f, 0.60f, 0.85f}, rng, 0.06f);
  const Col tentacle = jitter({0.25f, 0.15f, 0.45f}, rng, 0.05f);

  c.ellipse(cx, cy, a, b, angle, body);
  c.ellipse(cx, cy - b * 0.45f, a * 0.75f, b * 0.5f, angle, crest, 0.9f);
  const int tentacles = 2 + static_cast<int>(rng.next_below(3));
  for (int i = 0; i < tentacles; ++i) {
    const float ox = cx + u(rng, -a * 0.6f, a * 0.6f);
    const float oy = cy + b * 0.6f;
    const float ex = ox + u(rng, -10, 10) * s;
    const float ey = oy + u(rng, 16, 30) * s;
    const float mx = (ox + ex) / 2 + u(rng, -8, 8) * s;
    const float my = (oy + ey) / 2 + u(rng, 0, 6) * s;
    c.curve(ox, oy, mx, my, ex, ey, u(rng, 0.6f, 1.1f) * s, tentacle);
  }
}

// The dominant confuser: similar float but with an upright sail and no
// trailing strokes.
void draw_velella(Canvas& c, const Palette& pal, Rng& rng, float s) {
  ocean_background(c, pal, rng);
  const float cx = u(rng, 24, 40) * s, cy = u(rng, 26, 40) * s;
  const float a = u(rng, 8, 12) * s, b = u(rng, 3, 5) * s;
  const Col body = jitter({0.30f, 0.45f, 0.75f}, rng, 0.08f);
  const Col sail = jitter({0.80f, 0.86f, 0.92f}, rng, 0.05f);
  c.ellipse(cx, cy, a, b, u(rng, -0.2f, 0.2f), body);
  c.triangle(cx - a * 0.4f, cy - b * 0.5f, cx + a * 0.5f, cy - b * 0.5f,
             cx + u(rng, -2, 2) * s, cy - u(rng, 8, 13) * s, sail);
}

void draw_jellyfish(Canvas& c, const Palette& pal, Rng& rng, float s) {
  ocean_background(c, pal, rng);
  const float cx = u(rng, 24, 40) * s, cy = u(rng, 20, 30) * s;
  const float r = u(rng, 8, 13) * s;
  const Col dome = jitter({0.85f, 0.55f, 0.60f}, rng, 0.10f);
  c.half_disc(cx, cy, r, dome, 0.95f);
  const int tentacles = 3 + static_cast<int>(rng.next_below(3));
  const Col tent = jitter({0.80f, 0.70f, 0.80f}, rng, 0.08f);
  for (int i = 0; i < tentacles; ++i) {
    const float ox = cx - r * 0.7f + r * 1.4f * static_cast<float>(i) /
                                         static_cast<float>(std::max(1, tentacles - 1));
    c.line(ox, cy, ox + u(rng, -2, 2) * s, cy + u(rng, 12, 22) * s, 0.7f * s, tent);
  }
}

void draw_person(Canvas& c, const Palette& pal, Rng& rng, float s) {
  sand_background(c, pal, rng);
  const float cx = u(rng, 22, 42) * s;
  const float head_y = u(rng, 14, 22) * s;
  const float head_r = u(rng, 4, 6) * s;
  const Col skin = jitter(pal.skin, rng, 0.06f);
  const Col shirt = jitter({u(rng, 0.2f, 0.9f), u(rng, 0.2f, 0.9f), u(rng, 0.2f, 0.9f)}, rng, 0.0f);
  c.disc(cx, head_y, head_r, skin);
  c.line(cx, head_y + head_r, cx, head_y + head_r + u(rng, 14, 20) * s, 3.0f * s, shirt);
  c.line(cx, head_y + head_r + 4 * s, cx - u(rng, 5, 9) * s, head_y + head_r + 12 * s, 1.3f * s, skin);
  c.line(cx, head_y + head_r + 4 * s, cx + u(rng, 5, 9) * s, head_y + head_r + 12 * s, 1.3f * s, skin);
}

void draw_ship(Canvas& c, const Palette& pal, Rng& rng, float s) {
  ocean_background(c, pal, rng);
  const float cx = u(rng, 24, 40) * s, deck_y = u(rng, 36, 46) * s;
  const float half = u(rng, 10, 15) * s;
  const Col hull = jitter({0.45f, 0.28f, 0.15f}, rng, 0.05f);
  const Col sail = jitter({0.92f, 0.90f, 0.85f}, rng, 0.04f);
  c.triangle(cx - half, deck_y, cx + half, deck_y, cx + half * 0.6f, deck_y + 8 * s, hull);
  c.triangle(cx - half, deck_y, cx + half, deck_y, cx - half * 0.6f, deck_y + 8 * s, hull);
  c.line(cx, deck_y, cx, deck_y - u(rng, 18, 26) * s, 0.8f * s, hull);
  c.triangle(cx, deck_y - 24 * s, cx, deck_y - 8 * s, cx + u(rng, 8, 14) * s, deck_y - 10 * s, sail);
}

void draw_illustration(Canvas& c, const Palette& pal, Rng& rng, float s) {
  c.gradient(pal.paper, jitter(pal.paper, rng, 0.03f));
  const float cx = u(rng, 24, 40) * s, cy = u(rng, 24, 40) * s;
  const float a = u(rng, 9, 14) * s, b = u(rng, 5, 9) * s;
  const float angle = u(rng, -0.6f, 0.6f);
  const Col ink = jitter({0.15f, 0.2f, 0.5f}, rng, 0.1f);
  // outlined figure: filled shape, then re-fill the interior with paper
  c.ellipse(cx, cy, a, b, angle, ink);
  c.ellipse(cx, cy, a - 1.6f * s, b - 1.6f * s, angle, pal.paper);
  c.line(cx - a, cy + b + 3 * s, cx + a, cy + b + 3 * s, 0.6f * s, ink);
}

void draw_tattoo(Canvas& c, const Palette& pal, Rng& rng, float s) {
  c.gradient(jitter(pal.skin, rng, 0.05f), jitter(pal.skin, rng, 0.05f));
  c.speckle(rng, 0.01f, 0.15f);
  const float cx = u(rng, 24, 40) * s, cy = u(rng, 24, 40) * s;
  const Col ink = {0.15f, 0.13f, 0.16f};
  const int strokes = 3 + static_cast<int>(rng.next_below(3));
  for (int i = 0; i < strokes; ++i) {
    const float ax = cx + u(rng, -12, 12) * s, ay = cy + u(rng, -12, 12) * s;
    const float bx = cx + u(rng, -12, 12) * s, by = cy + u(rng, -12, 12) * s;
    c.curve(ax, ay, cx + u(rng, -14, 14) * s, cy + u(rng, -14, 14) * s, bx, by,
            u(rng, 0.5f, 0.9f) * s, ink);
  }
}

void draw_random(Canvas& c, const Palette&, Rng& rng, float s) {
  const Col bg_top = {u(rng, 0.1f, 0.9f), u(rng, 0.1f, 0.9f), u(rng, 0.1f, 0.9f)};
  const Col bg_bot = {u(rng, 0.1f, 0.9f), u(rng, 0.1f, 0.9f), u(rng, 0.1f, 0.9f)};
  c.gradient(bg_top, bg_bot);
  const int shapes = 2 + static_cast<int>(rng.next_below(3));
  for (int i = 0; i < shapes; ++i) {
    const Col col = {u(rng, 0.0f, 1.0f), u(rng, 0.0f, 1.0f), u(rng, 0.0f, 1.0f)};
    const float x = u(rng, 8, 56) * s, y = u(rng, 8, 56) * s;
    switch (rng.next_below(3)) {
      case 0:
        c.disc(x, y, u(rng, 3, 10) * s, col);
        break;
      case 1:
        c.triangle(x, y, x + u(rng, -14, 14) * s, y + u(rng, -14, 14) * s,
                   x + u(rng, -14, 14) * s, y + u(rng, -14, 14) * s, col);
        break;
      default:
        c.line(x, y, x + u(rng, -18, 18) * s, y + u(rng, -18, 18) * s,
               u(rng, 0.8f, 2.0f) * s, col);
    }
  }
}

}  // namespace

TensorF render_synthetic_image(TypeTag type, int size, const SynthStyle& style,
                               Rng rng) {
  Canvas canvas(size);
  const Palette pal = palette_for(style);
  const float s = static_cast<float>(size) / 64.0f;
  switch (type) {
    case TypeTag::pmw: draw_pmw(canvas, pal, rng, s); break;
    case TypeTag::velella: draw_velella(canvas, pal, rng, s); break;
    case TypeTag::jellyfish: draw_jellyfish(canvas, pal, rng, s); break;
    case TypeTag::person: draw_person(canvas, pal, rng, s); break;
    case TypeTag::ship: draw_ship(canvas, pal, rng, s); break;
    case TypeTag::illustration: draw_illustration(canvas, pal, rng, s); break;
    case TypeTag::tattoo: draw_tattoo(canvas, pal, rng, s); break;
    case TypeTag::random: draw_random(canvas, pal, rng, s); break;
  }
  return canvas.t;
}

SampleManifest generate_synthetic(const std::filesystem::path& out_dir,
                                  const SynthConfig& cfg) {
  if (cfg.n_per_class < 1) throw DataError("synth: n_per_class must be >= 1");
  if (cfg.image_size < 16) throw DataError("synth: image_size must be >= 16");

  const TypeTag negatives[7] = {TypeTag::person,  TypeTag::ship,
                                TypeTag::illustration, TypeTag::tattoo,
                                TypeTag::velella, TypeTag::jellyfish,
                                TypeTag::random};
  std::vector<std::pair<TypeTag, int>> plan;
  plan.emplace_back(TypeTag::pmw, cfg.n_per_class);
  for (int i = 0; i < 7; ++i) {
    int n = cfg.n_per_class / 7 + (i < cfg.n_per_class % 7 ? 1 : 0);
    plan.emplace_back(negatives[i], n);
  }

  const Rng base = Rng(cfg.seed).stream("synth");
  SampleManifest manifest;
  manifest.base_dir = std::filesystem::absolute(out_dir);
  std::uint64_t ordinal = 0;
  for (const auto& [type, count] : plan) {
    const auto type_dir = out_dir / to_string(type);
    std::filesystem::create_directories(type_dir);
    for (int i = 0; i < count; ++i, ++ordinal) {
      const TensorF img =
          render_synthetic_image(type, cfg.image_size, cfg.style, base.stream("image", ordinal));
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%04d.ppm", to_string(type).c_str(), i);
      const auto path = type_dir / name;
      write_ppm(path, tensor_to_image(img));

      SampleRecord rec;
      rec.path = std::filesystem::absolute(path).lexically_normal().string();
      rec.type = type;
      rec.cls = class_for_type(type);
      rec.source = Source::other;
      rec.content_hash = fnv1a64(img.data(), static_cast<std::size_t>(img.size()) * sizeof(float));
      manifest.records.push_back(std::move(rec));
    }
  }
  manifest.notes.push_back("synthetic dataset, seed " + std::to_string(cfg.seed) +
                           ", palette " + std::to_string(cfg.style.palette));
  save_manifest(manifest, out_dir / "manifest.jsonl");
  return manifest;
}

}  // namespace pmw
