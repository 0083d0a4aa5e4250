#pragma once

#include "spectralds/distill.hpp"
#include "spectralds/error.hpp"
#include "spectralds/experiments.hpp"
#include "spectralds/io.hpp"
#include "spectralds/lds.hpp"
#include "spectralds/parallel.hpp"
#include "spectralds/rng.hpp"
#include "spectralds/spectral_basis.hpp"
#include "spectralds/stu.hpp"
#include "spectralds/tensor.hpp"
