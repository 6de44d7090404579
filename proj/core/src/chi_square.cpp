#include "coop/chi_square.hpp"

#include "coop/geometry.hpp"

#include <boost/math/distributions/chi_squared.hpp>

namespace coop {

double chi_square_critical(double confidence, int dof) {
  if (!(confidence > 0.0 && confidence < 1.0) || dof < 1) {
    throw Error("chi_square_critical: confidence must be in (0, 1) and dof >= 1");
  }
  const boost::math::chi_squared_distribution<double> dist(static_cast<double>(dof));
  return boost::math::quantile(dist, confidence);
}

}  // namespace coop
