#pragma once

// The vendored single header carries its own forward declarations; pulling
// it in whole keeps this alias correct at a small compile-time cost.
#include <json.hpp>
