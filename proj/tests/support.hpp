#pragma once

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace fs_test {
using namespace fs_oracle;
}  // namespace fs_test
