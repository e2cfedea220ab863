#pragma once

#include "geomort/common.hpp"

#include <doctest.h>

#include <utility>

// Runs f, requires that it throws geomort::Error, and hands back the code.
template <typename F>
geomort::Errc error_code_of(F&& f) {
  try {
    std::forward<F>(f)();
  } catch (const geomort::Error& e) {
    return e.code();
  }
  REQUIRE_MESSAGE(false, "expected a geomort::Error");
  return geomort::Errc::io_failure;
}

#define CHECK_ERRC(expr, errc) CHECK((error_code_of([&] { (void)(expr); }) == (errc)))
