// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gtest/gtest.h>

#include "csiarm/error.hpp"

// Asserts that `stmt` throws csiarm::Error with the given code.
#define EXPECT_ERROR_CODE(stmt, expected_code)                                        \
  do {                                                                                \
    try {                                                                             \
      stmt;                                                                           \
      ADD_FAILURE() << #stmt " did not throw";                                        \
    } catch (const ::csiarm::Error& e_) {                                             \
      EXPECT_EQ(e_.code(), ::csiarm::ErrorCode::expected_code) << e_.what();          \
    }                                                                                 \
  } while (0)
