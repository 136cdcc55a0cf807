#include <catch2/catch_amalgamated.hpp>
#include "vlorp/vlorp.hpp"
TEST_CASE("placeholder test_precision") { SUCCEED(); }
