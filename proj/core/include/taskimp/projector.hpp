#pragma once

#include <cstddef>
#include <vector>

#include "taskimp/matrix.hpp"

namespace taskimp {

// Block-averaging compression of an L2-step output onto r segments. Blocks
// 1..r-1 have floor(L2/r) steps and the last block takes the remainder.
// Row s of A averages block s, so A * A_dag = I (r x r) and A_dag * A is the
// orthogonal projector onto piecewise-constant outputs.
struct SegmentProjector {
  std::size_t segments = 0;
  std::vector<std::size_t> block_lengths;
  std::vector<std::size_t> block_starts;
  Matrix a;      // r x L2
  Matrix a_dag;  // L2 x r

  std::size_t output_len() const { return a.cols(); }
  bool is_identity() const { return segments == output_len(); }
  // Segment index owning output step l.
  std::size_t segment_of(std::size_t l) const;
};

SegmentProjector make_projector(std::size_t output_len, std::size_t segments);

}  // namespace taskimp
