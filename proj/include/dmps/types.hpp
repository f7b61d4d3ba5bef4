#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>

#include "dmps/error.hpp"

namespace dmps {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline void require_size(Index actual, Index expected, const char* what) {
  if (actual != expected) {
    throw Error(ErrorKind::dimension_mismatch, std::string(what) + ": expected length " +
                                                   std::to_string(expected) + ", got " +
                                                   std::to_string(actual));
  }
}

}  // namespace dmps
