#include "hbfsim/types.hpp"

#include <string>

#include "hbfsim/errors.hpp"

namespace hbfsim {

std::string_view to_string(Metric metric) {
  return metric == Metric::L2 ? "l2" : "ip";
}

Metric parse_metric(std::string_view name) {
  if (name == "l2" || name == "L2") return Metric::L2;
  if (name == "ip" || name == "inner-product" || name == "inner_product") {
    return Metric::InnerProduct;
  }
  throw ArgumentError("unknown metric '" + std::string(name) + "' (expected l2 or ip)");
}

}  // namespace hbfsim
