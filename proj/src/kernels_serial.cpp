#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "pcaet/kernels.hpp"

namespace pcaet::kernels::serial {

#define PCAET_PARALLEL_FOR
#include "kernels_body.inc"
#undef PCAET_PARALLEL_FOR

}  // namespace pcaet::kernels::serial
