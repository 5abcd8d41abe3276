#pragma once

#include <cmath>
#include <string>

#include "isopsm/errors.hpp"

namespace isopsm {

enum class Link { Logistic, Probit };

inline double logistic_cdf(double t) {
  // stable in both tails
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

inline double normal_pdf(double t) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * t * t);
}

inline double link_cdf(Link link, double t) {
  return link == Link::Logistic ? logistic_cdf(t) : normal_cdf(t);
}

inline std::string link_name(Link link) {
  return link == Link::Logistic ? "logistic" : "probit";
}

inline Link parse_link(const std::string& name) {
  if (name == "logistic") return Link::Logistic;
  if (name == "probit") return Link::Probit;
  throw DataError("unknown link '" + name + "' (valid: logistic, probit)");
}

}  // namespace isopsm
