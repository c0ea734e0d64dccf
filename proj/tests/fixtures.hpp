#pragma once

// Reference datasets shared by the unit and acceptance tests.

#include <string>
#include <vector>

#include "rarerate/core.hpp"

namespace rarerate::fixtures {

// Category A of the real-data case study (38 events, rounded to 2 decimals).
inline std::vector<double> case_study_a() {
  std::vector<double> w(12, 1.0);
  for (double x : {1.03, 1.18, 1.18, 1.18, 1.35, 1.38, 1.43, 1.59, 1.72, 1.85, 1.88, 2.09, 11.24, 11.24, 11.24,
                   11.24, 11.25, 11.58, 12.11, 14.39, 14.94, 15.71, 16.1, 19.79, 20.0, 20.0}) {
    w.push_back(x);
  }
  return w;
}

inline constexpr double kCaseStudyB = 384.69;
inline constexpr double kCaseStudyNorm2 = 72.75;

inline WeightSample case_study_union() {
  auto w = case_study_a();
  std::vector<std::string> cats(w.size(), "A");
  w.push_back(kCaseStudyB);
  cats.push_back("B");
  return validate_weights(w, cats);
}

// 100 unit weights in A plus one weight of 100 in B.
inline WeightSample counter_example() {
  std::vector<double> w(100, 1.0);
  std::vector<std::string> cats(100, "A");
  w.push_back(100.0);
  cats.push_back("B");
  return validate_weights(w, cats);
}

}  // namespace rarerate::fixtures
