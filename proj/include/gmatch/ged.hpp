#pragma once

#include <cstddef>

#include "gmatch/graph.hpp"

namespace gmatch {

// Unit-cost graph edit distance over node seed labels: node insertion,
// deletion and label substitution cost 1, edge insertion and deletion cost 1.

inline constexpr std::size_t kExactGedNodeCap = 8;
inline constexpr int kDefaultBeamWidth = 64;

enum class GedMode { Exact, Beam };

struct GedOptions {
  GedMode mode = GedMode::Exact;
  int beam_width = kDefaultBeamWidth;
};

// Exact mode is branch-and-bound over node assignments with an admissible
// label + edge-count bound; throws TooLargeForExact above the node cap.
// Beam mode returns an upper bound on the exact value.
double ged(const Graph& a, const Graph& b, const GedOptions& opts = {});

// Exact when both graphs fit under the cap, beam otherwise. `exact` reports
// which was used.
double ged_auto(const Graph& a, const Graph& b, int beam_width = kDefaultBeamWidth, bool* exact = nullptr);

}  // namespace gmatch
