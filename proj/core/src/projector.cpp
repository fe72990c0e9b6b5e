#include "taskimp/projector.hpp"

#include <algorithm>
#include <string>

#include "taskimp/errors.hpp"

namespace taskimp {

SegmentProjector make_projector(std::size_t output_len, std::size_t segments) {
  if (segments < 1 || segments > output_len)
    throw UsageError("segments must lie in [1, " + std::to_string(output_len) + "], got " +
                     std::to_string(segments));
  SegmentProjector p;
  p.segments = segments;
  const std::size_t base = output_len / segments;
  p.block_lengths.assign(segments, base);
  p.block_lengths.back() = output_len - (segments - 1) * base;
  p.a = Matrix(segments, output_len);
  p.a_dag = Matrix(output_len, segments);
  std::size_t start = 0;
  for (std::size_t s = 0; s < segments; ++s) {
    p.block_starts.push_back(start);
    const double w = 1.0 / static_cast<double>(p.block_lengths[s]);
    for (std::size_t l = start; l < start + p.block_lengths[s]; ++l) {
      p.a(s, l) = w;
      p.a_dag(l, s) = 1.0;
    }
    start += p.block_lengths[s];
  }
  return p;
}

std::size_t SegmentProjector::segment_of(std::size_t l) const {
  const auto it = std::upper_bound(block_starts.begin(), block_starts.end(), l);
  return static_cast<std::size_t>(it - block_starts.begin()) - 1;
}

}  // namespace taskimp
