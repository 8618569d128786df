// Copyright 2026 The relax Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "relax/synthdata.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "relax/netpbm.h"
#include "relax/tensor_io.h"

namespace relax {

namespace {

constexpr int kPlacementRetries = 200;
constexpr int kSceneRetries = 20;

float quantize(double v) {
  return static_cast<float>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)) / 255.0f;
}

struct Paint {
  Texture texture;
  double lo = 0.0;
  double hi = 0.0;
  int period = 1;
  int orientation = 0;  // stripes: 0 horizontal, 1 vertical, 2 diagonal
  std::vector<double> tint;
};

double paint_value(const Paint& paint, const PlacedObject& obj, int y, int x,
                   Rng& noise) {
  const int dy = y - obj.top;
  const int dx = x - obj.left;
  switch (paint.texture) {
    case Texture::kChecker:
      return ((dy / paint.period + dx / paint.period) % 2) ? paint.hi : paint.lo;
    case Texture::kStripes: {
      const int t = paint.orientation == 0 ? dy : paint.orientation == 1 ? dx : dy + dx;
      return ((t / paint.period) % 2) ? paint.hi : paint.lo;
    }
    case Texture::kNoisePatch:
      return paint.lo + (paint.hi - paint.lo) * noise.uniform();
  }
  return paint.lo;
}

bool overlaps(const PlacedObject& a, const PlacedObject& b) {
  // One pixel of clearance keeps objects separable.
  return a.top <= b.top + b.height && b.top <= a.top + a.height &&
         a.left <= b.left + b.width && b.left <= a.left + a.width;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string image_name(int i, int channels) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05d.%s", i, channels == 1 ? "pgm" : "ppm");
  return buf;
}

std::string mask_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05d.pgm", i);
  return buf;
}

}  // namespace

std::string to_string(Shape shape) {
  return shape == Shape::kRectangle ? "rectangle" : "ellipse";
}

std::string to_string(Texture texture) {
  switch (texture) {
    case Texture::kChecker: return "checker";
    case Texture::kStripes: return "stripes";
    case Texture::kNoisePatch: return "noise";
  }
  return "?";
}

Shape parse_shape(const std::string& name) {
  if (name == "rectangle") return Shape::kRectangle;
  if (name == "ellipse") return Shape::kEllipse;
  throw InvalidArgument("unknown shape '" + name + "' (valid: rectangle, ellipse)");
}

Texture parse_texture(const std::string& name) {
  if (name == "checker") return Texture::kChecker;
  if (name == "stripes") return Texture::kStripes;
  if (name == "noise") return Texture::kNoisePatch;
  throw InvalidArgument("unknown texture '" + name + "' (valid: checker, stripes, noise)");
}

void SceneSpec::validate() const {
  if (height < 8 || width < 8) throw InvalidArgument("scenes must be at least 8x8");
  if (channels != 1 && channels != 3) throw InvalidArgument("scenes need 1 or 3 channels");
  if (n_objects < 1 || n_objects > 3) throw InvalidArgument("n_objects must be in [1, 3]");
  if (!(contrast >= 0.3 && contrast <= 0.6)) {
    throw InvalidArgument("contrast must be in [0.3, 0.6]");
  }
  if (min_size < 2 || max_size < min_size || max_size > std::min(height, width)) {
    throw InvalidArgument("object sizes must satisfy 2 <= min_size <= max_size <= min(H, W)");
  }
  if (!(background_max >= 0.0 && background_max <= 0.3)) {
    throw InvalidArgument("background_max must be in [0, 0.3]");
  }
}

bool object_contains(const PlacedObject& object, int y, int x) {
  if (y < object.top || y >= object.top + object.height || x < object.left ||
      x >= object.left + object.width) {
    return false;
  }
  if (object.shape == Shape::kRectangle) return true;
  const double ry = 0.5 * object.height;
  const double rx = 0.5 * object.width;
  const double u = (y + 0.5 - object.top - ry) / ry;
  const double v = (x + 0.5 - object.left - rx) / rx;
  return u * u + v * v <= 1.0;
}

Scene generate_scene(const SceneSpec& spec, std::uint64_t index) {
  spec.validate();
  Rng rng(spec.rng, index);
  const int h = spec.height;
  const int w = spec.width;
  const int c = spec.channels;
  for (int attempt = 0; attempt < kSceneRetries; ++attempt) {
    const Shape shape = spec.shape.value_or(rng.bernoulli(0.5) ? Shape::kEllipse
                                                                : Shape::kRectangle);
    const double background = spec.background_max * rng.uniform();
    std::vector<PlacedObject> objects;
    for (int k = 0; k < spec.n_objects; ++k) {
      bool placed = false;
      for (int tries = 0; tries < kPlacementRetries && !placed; ++tries) {
        PlacedObject obj;
        obj.shape = shape;
        obj.height = static_cast<int>(rng.uniform_int(spec.min_size, spec.max_size));
        obj.width = static_cast<int>(rng.uniform_int(spec.min_size, spec.max_size));
        obj.top = static_cast<int>(rng.uniform_int(0, h - obj.height));
        obj.left = static_cast<int>(rng.uniform_int(0, w - obj.width));
        placed = std::none_of(objects.begin(), objects.end(), [&](const PlacedObject& o) {
          return overlaps(o, obj);
        });
        if (placed) objects.push_back(obj);
      }
      if (!placed) {
        throw InvalidArgument("could not place " + std::to_string(spec.n_objects) +
                              " objects in a " + std::to_string(h) + "x" +
                              std::to_string(w) + " scene");
      }
    }

    Image image(h, w, c);
    auto data = image.mutable_data();
    for (float& v : data) v = quantize(background);
    Grid gt(h, w);
    for (auto& obj : objects) {
      Paint paint;
      paint.texture = spec.texture.value_or(
          static_cast<Texture>(rng.uniform_int(0, 2)));
      obj.texture = paint.texture;
      paint.lo = background + 0.25 + 0.2 * rng.uniform();
      paint.hi = std::min(1.0, paint.lo + 0.3 + 0.15 * rng.uniform());
      paint.period = static_cast<int>(rng.uniform_int(2, 5));
      paint.orientation = static_cast<int>(rng.uniform_int(0, 2));
      for (int ch = 0; ch < c; ++ch) {
        paint.tint.push_back(c == 1 ? 1.0 : 0.8 + 0.2 * rng.uniform());
      }
      for (int y = obj.top; y < obj.top + obj.height; ++y) {
        for (int x = obj.left; x < obj.left + obj.width; ++x) {
          if (!object_contains(obj, y, x)) continue;
          const double v = paint_value(paint, obj, y, x, rng);
          for (int ch = 0; ch < c; ++ch) {
            data[(static_cast<std::size_t>(y) * w + x) * c + ch] =
                quantize(v * paint.tint[static_cast<std::size_t>(ch)]);
          }
          gt(y, x) = 1.0;
        }
      }
    }

    double in_sum = 0.0, out_sum = 0.0;
    std::size_t in_n = 0, out_n = 0;
    for (std::size_t p = 0; p < image.pixel_count(); ++p) {
      for (int ch = 0; ch < c; ++ch) {
        const double v = data[p * c + ch];
        if (gt[p] != 0.0) {
          in_sum += v;
          ++in_n;
        } else {
          out_sum += v;
          ++out_n;
        }
      }
    }
    if (in_n == 0 || out_n == 0) continue;
    if (std::abs(in_sum / in_n - out_sum / out_n) < spec.contrast) continue;

    Scene scene;
    scene.image = std::move(image);
    scene.gt = GroundTruth(std::move(gt));
    scene.label = static_cast<int>(shape);
    scene.objects = std::move(objects);
    return scene;
  }
  throw InvalidArgument("could not generate a scene meeting the contrast of " +
                        std::to_string(spec.contrast));
}

std::vector<Scene> generate_scenes(const SceneSpec& spec, int n) {
  if (n < 1) throw InvalidArgument("corpus size must be at least 1");
  spec.validate();
  std::vector<Scene> scenes(static_cast<std::size_t>(n));
  parallel_for(scenes.size(), [&](std::size_t i) { scenes[i] = generate_scene(spec, i); });
  return scenes;
}

std::pair<Grid, Grid> pixel_statistics(std::span<const LabeledImage> items) {
  if (items.empty()) throw InvalidArgument("statistics need at least one image");
  const int h = items.front().image.height();
  const int w = items.front().image.width();
  Grid mean(h, w), sq(h, w);
  double count = 0.0;
  for (const auto& item : items) {
    const Image& img = item.image;
    if (img.height() != h || img.width() != w) {
      throw InvalidArgument("corpus images differ in size");
    }
    const int c = img.channels();
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
      for (int ch = 0; ch < c; ++ch) {
        const double v = img.data()[p * c + ch];
        mean[p] += v;
        sq[p] += v * v;
      }
    }
    count += c;
  }
  Grid stddev(h, w);
  for (std::size_t p = 0; p < mean.size(); ++p) {
    mean[p] /= count;
    stddev[p] = std::sqrt(std::max(0.0, sq[p] / count - mean[p] * mean[p]));
  }
  return {std::move(mean), std::move(stddev)};
}

Corpus generate_corpus(const SceneSpec& spec, int n,
                       const std::filesystem::path& directory) {
  std::vector<Scene> scenes = generate_scenes(spec, n);
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory / "images", ec);
  if (!ec) fs::create_directories(directory / "masks", ec);
  if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());

  Corpus corpus;
  corpus.directory = directory;
  corpus.seed = spec.rng.seed;
  for (int i = 0; i < n; ++i) {
    Scene& scene = scenes[static_cast<std::size_t>(i)];
    CorpusEntry entry{"images/" + image_name(i, spec.channels), "masks/" + mask_name(i),
                      scene.label};
    write_netpbm(directory / entry.image_path, scene.image);
    write_netpbm(directory / entry.mask_path, grid_to_image(scene.gt.mask()));
    corpus.entries.push_back(entry);
    corpus.items.push_back({std::move(scene.image), scene.gt, scene.label});
  }
  auto [mean, stddev] = pixel_statistics(corpus.items);
  write_tensor_file(directory / "stats_mean.rlxt", grid_to_tensor(mean));
  write_tensor_file(directory / "stats_std.rlxt", grid_to_tensor(stddev));
  // Consumers see the statistics as stored.
  corpus.mean = std::make_shared<Grid>(tensor_to_grid(grid_to_tensor(mean)));
  corpus.stddev = std::make_shared<Grid>(tensor_to_grid(grid_to_tensor(stddev)));

  std::ostringstream manifest;
  manifest << "format = relax-corpus\n"
           << "version = 1\n"
           << "count = " << n << "\n"
           << "height = " << spec.height << "\n"
           << "width = " << spec.width << "\n"
           << "channels = " << spec.channels << "\n"
           << "seed = " << spec.rng.seed << "\n"
           << "stats_mean = stats_mean.rlxt\n"
           << "stats_std = stats_std.rlxt\n";
  for (const auto& e : corpus.entries) {
    manifest << e.image_path << '\t' << e.mask_path << '\t' << e.label << '\n';
  }
  const std::string text = manifest.str();
  write_file_atomic(directory / kManifestName,
                    std::span<const std::uint8_t>(
                        reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  const fs::path manifest_path =
      fs::is_directory(path) ? path / kManifestName : path;
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open corpus manifest " + manifest_path.string());
  Corpus corpus;
  corpus.directory = manifest_path.parent_path();
  std::map<std::string, std::string> keys;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.find('\t') != std::string::npos) {
      std::istringstream fields(t);
      CorpusEntry e;
      std::string label;
      if (!std::getline(fields, e.image_path, '\t') ||
          !std::getline(fields, e.mask_path, '\t') || !std::getline(fields, label)) {
        throw FormatError(manifest_path.string() + ":" + std::to_string(line_no) +
                          ": expected image, mask and label");
      }
      try {
        std::size_t used = 0;
        e.label = std::stoi(label, &used);
        if (used != label.size()) throw std::invalid_argument(label);
      } catch (const std::exception&) {
        throw FormatError(manifest_path.string() + ":" + std::to_string(line_no) +
                          ": bad label '" + label + "'");
      }
      corpus.entries.push_back(e);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw FormatError(manifest_path.string() + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    keys[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  if (keys["format"] != "relax-corpus") {
    throw FormatError(manifest_path.string() + ": not a corpus manifest");
  }
  if (keys.count("count") &&
      keys["count"] != std::to_string(corpus.entries.size())) {
    throw FormatError(manifest_path.string() + ": count does not match the records");
  }
  if (keys.count("seed")) corpus.seed = std::stoull(keys["seed"]);

  corpus.items.resize(corpus.entries.size());
  parallel_for(corpus.entries.size(), [&](std::size_t i) {
    const CorpusEntry& e = corpus.entries[i];
    Image image = read_netpbm(corpus.directory / e.image_path);
    const Image mask = read_netpbm(corpus.directory / e.mask_path);
    if (mask.height() != image.height() || mask.width() != image.width()) {
      throw FormatError(e.mask_path + ": mask size does not match its image");
    }
    Grid gt(mask.height(), mask.width());
    for (std::size_t p = 0; p < gt.size(); ++p) {
      gt[p] = mask.data()[p * static_cast<std::size_t>(mask.channels())] >= 0.5f ? 1.0 : 0.0;
    }
    corpus.items[i] = {std::move(image), GroundTruth(std::move(gt)), e.label};
  });
  if (keys.count("stats_mean") && keys.count("stats_std")) {
    corpus.mean = std::make_shared<Grid>(
        tensor_to_grid(read_tensor_file(corpus.directory / keys["stats_mean"])));
    corpus.stddev = std::make_shared<Grid>(
        tensor_to_grid(read_tensor_file(corpus.directory / keys["stats_std"])));
  }
  return corpus;
}

}  // namespace relax
