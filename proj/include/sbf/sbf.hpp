#pragma once

#include "sbf/error.hpp"
#include "sbf/special.hpp"
#include "sbf/geometry.hpp"
#include "sbf/harmonics.hpp"
#include "sbf/kernels.hpp"
#include "sbf/frames.hpp"
#include "sbf/quadrature.hpp"
#include "sbf/network.hpp"
#include "sbf/harness.hpp"
#include "sbf/io.hpp"
