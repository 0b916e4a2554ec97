#pragma once

// alias for the vendored single-header library
#include <json.hpp>
