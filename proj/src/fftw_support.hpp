#pragma once

#include <fftw3.h>

#include <mutex>

namespace conveyor::detail {

// FFTW planner calls are not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace conveyor::detail
