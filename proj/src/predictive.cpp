#include "greyforce/predictive.hpp"

namespace greyforce {

void summarize_paths(MCPredictiveSeries& mc) {
  const auto n = static_cast<double>(mc.paths.rows());
  mc.mean = mc.paths.colwise().mean().transpose();
  mc.variance = ((mc.paths.rowwise() - mc.mean.transpose()).array().square().colwise().sum() / n)
                    .transpose();
}

}  // namespace greyforce
