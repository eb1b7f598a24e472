#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "evseg/error.hpp"
#include "evseg/event.hpp"
#include "evseg/label_map.hpp"

namespace evseg {

enum class Shape { Rectangle, Disk };

// A flat-intensity object translating at constant velocity. `x`, `y` is the
// center at t = 0. A rectangle covers pixel (px, py) when
// cx - width/2 <= px < cx + width/2 (same for y); a disk when
// (px - cx)^2 + (py - cy)^2 <= radius^2.
struct SceneObject {
  Shape shape = Shape::Rectangle;
  std::uint8_t class_id = 1;
  double intensity = 1.0;
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;  // pixels per second
  double vy = 0.0;
  double width = 1.0;   // rectangle only
  double height = 1.0;  // rectangle only
  double radius = 1.0;  // disk only

  bool covers(double px, double py, std::int64_t t_us) const {
    const double secs = static_cast<double>(t_us) * 1e-6;
    const double cx = x + vx * secs;
    const double cy = y + vy * secs;
    if (shape == Shape::Disk) {
      const double dx = px - cx, dy = py - cy;
      return dx * dx + dy * dy <= radius * radius;
    }
    return px >= cx - width / 2 && px < cx + width / 2 && py >= cy - height / 2 && py < cy + height / 2;
  }
};

struct SynthConfig {
  SensorGeometry geometry{64, 48};
  double background_intensity = 1.0;
  double threshold_sigma = 0.2;
  std::int64_t tick_us = 1000;
  std::int64_t duration_us = 1'000'000;
  std::uint64_t seed = 0;
  std::int64_t timestamp_jitter_us = 0;

  void validate() const {
    geometry.validate();
    if (geometry.width > 0xFFFF || geometry.height > 0xFFFF) {
      throw Error(Errc::InvalidArgument, "geometry limited to 65535");
    }
    if (!(background_intensity > 0)) throw Error(Errc::InvalidArgument, "background_intensity must be > 0");
    if (!(threshold_sigma > 0)) throw Error(Errc::InvalidArgument, "threshold_sigma must be > 0");
    if (tick_us < 1) throw Error(Errc::InvalidArgument, "tick_us must be >= 1");
    if (duration_us < 0) throw Error(Errc::InvalidArgument, "duration_us must be >= 0");
    if (timestamp_jitter_us < 0) throw Error(Errc::InvalidArgument, "timestamp_jitter_us must be >= 0");
  }
};

inline void validate_scene(const std::vector<SceneObject>& scene) {
  for (const auto& o : scene) {
    if (!(o.intensity > 0)) throw Error(Errc::InvalidArgument, "object intensity must be > 0");
    if (o.class_id == kIgnoreId) throw Error(Errc::InvalidArgument, "object class_id is the ignore id");
    if (o.class_id < 1) throw Error(Errc::InvalidArgument, "object class_id must be >= 1");
  }
}

// Topmost covering object index per pixel, or -1. Later objects occlude earlier ones.
inline int top_object_at(const std::vector<SceneObject>& scene, std::uint32_t px, std::uint32_t py,
                         std::int64_t t_us) {
  for (int k = static_cast<int>(scene.size()) - 1; k >= 0; --k) {
    if (scene[static_cast<std::size_t>(k)].covers(px, py, t_us)) return k;
  }
  return -1;
}

// Row-major H×W intensity raster at time t.
inline std::vector<double> render_intensity(const std::vector<SceneObject>& scene, const SynthConfig& config,
                                            std::int64_t t_us) {
  const auto& g = config.geometry;
  std::vector<double> out(g.pixels(), config.background_intensity);
  for (std::uint32_t y = 0; y < g.height; ++y) {
    for (std::uint32_t x = 0; x < g.width; ++x) {
      const int k = top_object_at(scene, x, y, t_us);
      if (k >= 0) out[std::size_t{y} * g.width + x] = scene[static_cast<std::size_t>(k)].intensity;
    }
  }
  return out;
}

// Ground-truth labels at time t: covering object's class, else 0.
inline LabelMap render_labels(const std::vector<SceneObject>& scene, const SensorGeometry& geometry,
                              std::int64_t t_us) {
  LabelMap labels(geometry, 0);
  for (std::uint32_t y = 0; y < geometry.height; ++y) {
    for (std::uint32_t x = 0; x < geometry.width; ++x) {
      const int k = top_object_at(scene, x, y, t_us);
      if (k >= 0) labels.at(x, y) = scene[static_cast<std::size_t>(k)].class_id;
    }
  }
  return labels;
}

// Label function bound to a scene, returned alongside synthesized events.
class SceneLabeler {
 public:
  SceneLabeler(std::vector<SceneObject> scene, SensorGeometry geometry)
      : scene_(std::move(scene)), geometry_(geometry) {}
  LabelMap operator()(std::int64_t t_us) const { return render_labels(scene_, geometry_, t_us); }

 private:
  std::vector<SceneObject> scene_;
  SensorGeometry geometry_;
};

struct SynthResult {
  EventStream stream;
  SceneLabeler labels;
};

// Integrate-and-fire simulation. Each pixel holds a reference level
// L0 + k*sigma (L0 = log intensity at t = 0). At tick t_n = n*tick_us the pixel
// fires +1 while log I - ref >= sigma and -1 while ref - log I >= sigma, moving
// the level one step per event. Events carry t_n minus a uniform jitter in
// [0, min(jitter, tick-1)], so they stay inside (t_{n-1}, t_n]; each tick's batch
// is sorted by (timestamp, y, x, polarity).
inline SynthResult generate_events(const std::vector<SceneObject>& scene, const SynthConfig& config) {
  config.validate();
  validate_scene(scene);
  const auto& g = config.geometry;
  const std::size_t px = g.pixels();
  const double sigma = config.threshold_sigma;

  std::vector<double> base(px);
  {
    const auto I0 = render_intensity(scene, config, 0);
    for (std::size_t i = 0; i < px; ++i) base[i] = std::log(I0[i]);
  }
  std::vector<std::int64_t> level(px, 0);

  std::mt19937_64 rng(config.seed);
  const auto max_jitter = static_cast<std::uint64_t>(std::min(config.timestamp_jitter_us, config.tick_us - 1));

  std::vector<Event> events;
  std::vector<Event> tick_events;
  for (std::int64_t t = config.tick_us; t <= config.duration_us; t += config.tick_us) {
    tick_events.clear();
    const auto I = render_intensity(scene, config, t);
    for (std::uint32_t y = 0; y < g.height; ++y) {
      for (std::uint32_t x = 0; x < g.width; ++x) {
        const std::size_t i = std::size_t{y} * g.width + x;
        const double L = std::log(I[i]);
        auto emit = [&](std::int8_t p) {
          std::int64_t ts = t;
          if (max_jitter > 0) ts -= static_cast<std::int64_t>(rng() % (max_jitter + 1));
          tick_events.push_back(Event{ts, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), p});
        };
        while (L - (base[i] + static_cast<double>(level[i]) * sigma) >= sigma) {
          ++level[i];
          emit(1);
        }
        while ((base[i] + static_cast<double>(level[i]) * sigma) - L >= sigma) {
          --level[i];
          emit(-1);
        }
      }
    }
    std::stable_sort(tick_events.begin(), tick_events.end(), [](const Event& a, const Event& b) {
      return std::tie(a.timestamp_us, a.y, a.x, a.polarity) < std::tie(b.timestamp_us, b.y, b.x, b.polarity);
    });
    events.insert(events.end(), tick_events.begin(), tick_events.end());
  }
  return SynthResult{EventStream(g, std::move(events)), SceneLabeler(scene, g)};
}

// Scene file (JSON):
// {
//   "width": 96, "height": 64, "background_intensity": 1.0, "threshold_sigma": 0.2,
//   "tick_us": 1000, "duration_us": 600000, "seed": 7, "timestamp_jitter_us": 500,
//   "objects": [
//     {"shape": "rectangle", "class_id": 5, "intensity": 3.0, "x": 10, "y": 20,
//      "vx": 150, "vy": 0, "width": 4, "height": 12},
//     {"shape": "disk", "class_id": 4, "intensity": 3.0, "x": 60, "y": 45,
//      "vx": -30, "vy": 0, "radius": 6}
//   ]
// }
// Every field except "width", "height" and "objects" is optional.
struct SceneFile {
  SynthConfig config;
  std::vector<SceneObject> objects;
};

inline SceneFile parse_scene(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, e.what());
  }
  SceneFile scene;
  try {
    auto& c = scene.config;
    c.geometry.width = j.at("width").get<std::uint32_t>();
    c.geometry.height = j.at("height").get<std::uint32_t>();
    c.background_intensity = j.value("background_intensity", c.background_intensity);
    c.threshold_sigma = j.value("threshold_sigma", c.threshold_sigma);
    c.tick_us = j.value("tick_us", c.tick_us);
    c.duration_us = j.value("duration_us", c.duration_us);
    c.seed = j.value("seed", c.seed);
    c.timestamp_jitter_us = j.value("timestamp_jitter_us", c.timestamp_jitter_us);
    for (const auto& o : j.at("objects")) {
      SceneObject obj;
      const auto shape = o.at("shape").get<std::string>();
      if (shape == "rectangle") {
        obj.shape = Shape::Rectangle;
        obj.width = o.at("width").get<double>();
        obj.height = o.at("height").get<double>();
      } else if (shape == "disk") {
        obj.shape = Shape::Disk;
        obj.radius = o.at("radius").get<double>();
      } else {
        throw Error(Errc::ParseError, "unknown shape '" + shape + "'");
      }
      const auto cls = o.at("class_id").get<int>();
      if (cls < 1 || cls >= kIgnoreId) throw Error(Errc::ParseError, "class_id out of range");
      obj.class_id = static_cast<std::uint8_t>(cls);
      obj.intensity = o.at("intensity").get<double>();
      obj.x = o.at("x").get<double>();
      obj.y = o.at("y").get<double>();
      obj.vx = o.value("vx", 0.0);
      obj.vy = o.value("vy", 0.0);
      scene.objects.push_back(obj);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, e.what());
  }
  scene.config.validate();
  validate_scene(scene.objects);
  return scene;
}

}  // namespace evseg
