// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.

#ifndef SVRC_SYNTHETIC_HPP_
#define SVRC_SYNTHETIC_HPP_

#include <cstdint>

#include "svrc/image.hpp"

namespace svrc {

// Seeded procedural test image: smooth gradients, random Gaussian blobs and
// soft sinusoidal texture plus a little noise. Compressible enough to stand
// in for natural content in desk-scale experiments.
PpmImage make_synthetic_image(int width, int height, uint64_t seed);

}  // namespace svrc

#endif  // SVRC_SYNTHETIC_HPP_
