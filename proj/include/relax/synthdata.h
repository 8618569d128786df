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

// Synthetic scenes: textured objects on a flat dark background, with exact
// ground-truth masks. Intensities are quantised to k/255 so scenes survive
// a round trip through 8-bit image files unchanged.

#ifndef RELAX_SYNTHDATA_H_
#define RELAX_SYNTHDATA_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relax/core.h"
#include "relax/evalmetrics.h"

namespace relax {

enum class Shape { kRectangle = 0, kEllipse = 1 };
enum class Texture { kChecker, kStripes, kNoisePatch };

std::string to_string(Shape shape);
std::string to_string(Texture texture);
Shape parse_shape(const std::string& name);
Texture parse_texture(const std::string& name);

struct SceneSpec {
  int height = 64;
  int width = 64;
  int channels = 1;
  int n_objects = 1;
  // Unset: drawn per scene. All objects of a scene share the shape, which
  // is also the scene's class label.
  std::optional<Shape> shape;
  // Unset: drawn per object.
  std::optional<Texture> texture;
  // Minimum gap between mean object and mean background intensity.
  double contrast = 0.3;
  // Object side lengths are drawn from [min_size, max_size].
  int min_size = 14;
  int max_size = 30;
  // Background level is drawn from [0, background_max].
  double background_max = 0.0;
  RngSpec rng;

  void validate() const;
};

struct PlacedObject {
  Shape shape;
  Texture texture;
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
};

struct Scene {
  Image image;
  GroundTruth gt;
  int label = 0;
  std::vector<PlacedObject> objects;
};

// Deterministic in spec (including spec.rng). `index` selects the scene
// within the stream, so corpora use generate_scene(template, i).
Scene generate_scene(const SceneSpec& spec, std::uint64_t index = 0);

// Pixels inside the object's footprint; ellipses contain the pixels whose
// centres lie in the inscribed ellipse.
bool object_contains(const PlacedObject& object, int y, int x);

struct CorpusEntry {
  std::string image_path;  // relative to the corpus directory
  std::string mask_path;
  int label = 0;
};

struct Corpus {
  std::filesystem::path directory;
  std::vector<CorpusEntry> entries;
  std::vector<LabeledImage> items;
  // Per-pixel mean and population standard deviation over all images and
  // channels.
  std::shared_ptr<const Grid> mean;
  std::shared_ptr<const Grid> stddev;
  std::uint64_t seed = 0;
};

inline constexpr const char* kManifestName = "manifest.txt";

// Writes images/NNNNN.p[gp]m, masks/NNNNN.pgm, stats_mean.rlxt,
// stats_std.rlxt and the manifest into `directory` (created if needed).
//
// The manifest holds `key = value` lines (format, version, count, height,
// width, channels, seed, stats_mean, stats_std) followed by one
// tab-separated record per image: image path, mask path, label.
Corpus generate_corpus(const SceneSpec& spec, int n,
                       const std::filesystem::path& directory);

// Scenes of a corpus without touching the disk.
std::vector<Scene> generate_scenes(const SceneSpec& spec, int n);

// Per-pixel mean and population standard deviation of a set of images.
std::pair<Grid, Grid> pixel_statistics(std::span<const LabeledImage> items);

// Accepts the corpus directory or its manifest file.
Corpus load_corpus(const std::filesystem::path& path);

}  // namespace relax

#endif  // RELAX_SYNTHDATA_H_
