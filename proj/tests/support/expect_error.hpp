#pragma once

#include <functional>

#include <doctest.h>

#include "cog/error.hpp"

namespace cog::testing {

/// Runs fn and returns the code of the cog::Error it throws.
inline ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected cog::Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace cog::testing
