#pragma once

#include <cstdint>

namespace rbcav::instrument {

/// Count of full-order-dimension operator evaluations (assemblies, applies,
/// quadrature sweeps). Online reduced solves must not advance it.
std::uint64_t full_order_ops();
void bump_full_order();
void reset_full_order();

}  // namespace rbcav::instrument
