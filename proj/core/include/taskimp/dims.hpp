#pragma once

#include <cstddef>

namespace taskimp {

// Window shape shared by samples and models: D features over L1 input steps,
// L2 forecast steps.
struct Dims {
  std::size_t features = 1;
  std::size_t input_len = 24;
  std::size_t output_len = 24;

  std::size_t input_size() const { return features * input_len; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

}  // namespace taskimp
