// Copyright 2026 The evidseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <vector>

#include "evidseg/datamodel.hpp"

namespace evidseg::imageops {

// Normalized 1D Gaussian taps, radius ceil(3 * sigma). Empty for sigma == 0.
std::vector<double> gaussian_kernel(double sigma);

// Half-sample symmetric index reflection into [0, n): ... b a | a b ... | z y ...
int reflect_index(int i, int n);

// Separable Gaussian convolution with reflect padding. sigma == 0 returns the
// input unchanged. Preserves the global mean.
ImageSlice gaussian_smooth(const ImageSlice& img, double sigma);

// |grad| with central differences inside and one-sided differences on the
// border rows/columns.
ScalarMap gradient_magnitude(const ImageSlice& img);

// gradient_magnitude(gaussian_smooth(img, sigma)).
ScalarMap smoothed_gradient(const ImageSlice& img, double sigma);

// Raw boundary: a pixel with a 4-neighbour of another class.
std::vector<bool> raw_boundary(const LabelMap& label);

// Exact Euclidean distance of every pixel to the nearest marked pixel (two
// pass lower-envelope transform). +inf everywhere when nothing is marked.
std::vector<double> distance_transform(const Shape& shape, const std::vector<bool>& marked);

// B and d from the ground-truth labels. A single-class label yields an empty B
// and d == +inf; that case is reported through BoundaryGeometry::empty().
BoundaryGeometry extract_boundary_geometry(const LabelMap& label, double boundary_radius);

// extract_boundary_geometry plus the smoothed gradient of the image.
BoundaryGeometry make_geometry(const ImageSlice& img, const LabelMap& label,
                               double boundary_radius, double gradient_sigma);

// Per-pixel N(mean, stddev^2) draws (global) or draws inside the patch (zero
// elsewhere). Deterministic given spec.seed.
std::vector<double> noise_field(const Shape& shape, const NoiseSpec& spec);

// img + noise_field, clamped to [0, 1].
ImageSlice apply_noise(const ImageSlice& img, const NoiseSpec& spec);

}  // namespace evidseg::imageops
