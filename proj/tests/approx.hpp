#pragma once

#include <doctest.h>

// doctest's Approx adds 1 to the scale by default, which turns small
// quantities into an absolute check. Relative comparison only.
inline doctest::Approx Approx(double value) { return doctest::Approx(value).scale(0); }
