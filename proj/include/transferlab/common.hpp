#pragma once

#include <span>
#include <string>
#include <vector>

namespace transferlab {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
double l2_distance(std::span<const double> a, std::span<const double> b);

// Componentwise clamp into [0, 1], the valid feature range.
void clip01(Vec& v);
Vec clipped01(std::span<const double> v);

// Index of the largest entry; ties resolve to the lowest index.
int argmax(std::span<const double> v);

bool all_finite(std::span<const double> v);

// Shortest round-trip decimal form, locale independent. Used by every CSV
// writer so that artifacts are byte-stable and reparse to identical bits.
std::string format_double(double value);
double parse_double(std::string_view text);  // throws ParseError

}  // namespace transferlab
