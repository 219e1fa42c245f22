#pragma once

#include <cstdint>

#include "facescan/net.hpp"

namespace facescan {

// MiniNet: the bundled compact reference architecture (window 35, stride 4,
// one input channel). Small enough that brute-force crop scans, nested-loop
// layer references and finite-difference gradient checks all run in seconds.
//
//   conv 4@5x5/s2 -> relu -> maxpool 2x2/s2 -> conv 8@3x3/s1 -> relu
//     -> fc 16 (over 8x6x6) -> fc 2 -> softmax
//
// Parameters are allocated and zero-filled; see init_random() in trainer.hpp
// for the seeded initializer.
NetworkSpec mininet();

}  // namespace facescan
