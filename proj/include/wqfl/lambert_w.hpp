#pragma once

namespace wqfl {

/// Principal branch W0 of the Lambert W function: the w >= -1 solving
/// w e^w = x. Throws std::domain_error for x < -1/e.
double lambert_w0(double x);

}  // namespace wqfl
