#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace emt {

using Rational = mpq_class;

/// "p/q", or "p" when the denominator is one.
std::string to_string(const Rational& q);

/// Parses "p", "-p" or "p/q". Throws std::invalid_argument on malformed text
/// or a zero denominator.
Rational parse_rational(std::string_view text);

}  // namespace emt
