/*
 *  Copyright (C) 2026 The voxplane authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <array>
#include <cstdint>

namespace voxplane {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// The output is a pure function of (key, counter), so streams are
/// reproducible on every platform. Uniform and normal variates are derived
/// here rather than through <random> distributions, whose algorithms are
/// implementation-defined.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr const char* kName = "philox4x32-10";

  /// seed -> key; stream -> upper 64 bits of the counter.
  explicit Philox4x32(std::uint64_t seed, std::uint64_t stream = 0);

  static Block block(Block counter, Key key);

  std::uint32_t next_u32();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal by Box-Muller.
  double normal();

 private:
  Key key_{};
  Block counter_{};
  Block buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace voxplane
