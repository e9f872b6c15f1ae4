#pragma once

#include "ahx/connection.hpp"
#include "ahx/geometry.hpp"

#include "doctest.h"

#include <memory>
#include <string>

namespace ahx::test {

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline FamilySpec spec(const std::string& name, int n = 2, double amplitude = 1.0, double width = 0.5) {
  FamilySpec fs;
  fs.name = name;
  fs.n = n;
  fs.amplitude = amplitude;
  fs.width = width;
  return fs;
}

inline std::shared_ptr<const ProjectiveModel> model_of(const std::string& name, int n = 2, double amplitude = 1.0,
                                                      double width = 0.5) {
  return to_even_structure(*make_family(spec(name, n, amplitude, width)));
}

inline std::shared_ptr<const ChristoffelField> field_of(const std::string& name, int n = 2) {
  return projective_field(model_of(name, n));
}

inline double max_abs(const Christoffel& c) { return c.max_abs_diff(Christoffel(c.dim())); }

}  // namespace ahx::test
