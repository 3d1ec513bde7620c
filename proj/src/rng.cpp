#include "dualstop/rng.hpp"

#include <cstdio>
#include <string>

#include "dualstop/common.hpp"
#include "dualstop/normal.hpp"

namespace dualstop {

double KeyedStream::normal(std::uint64_t path, std::uint64_t index) const {
  return normal_quantile(uniform(path, index));
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace dualstop
